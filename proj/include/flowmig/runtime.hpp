#pragma once

#include "flowmig/channels.hpp"
#include "flowmig/graph.hpp"
#include "flowmig/operator.hpp"
#include "flowmig/progress.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <vector>

namespace flowmig
{
    // Frontier snapshots published for cross-context readers (probe handles,
    // the benchmark's measurement loop). Everything else in a worker runtime
    // is touched only by the worker's own execution context.
    class ProbeTable
    {
    public:
        explicit ProbeTable(std::size_t probes) : m_frontiers(probes) {}

        void publish(std::uint32_t probe, const Antichain<Time> &f)
        {
            std::lock_guard lock(m_mutex);
            m_frontiers[probe] = f;
        }

        Antichain<Time> read(std::uint32_t probe) const
        {
            std::lock_guard lock(m_mutex);
            return m_frontiers[probe];
        }

    private:
        mutable std::mutex m_mutex;
        std::vector<Antichain<Time>> m_frontiers;
    };

    // One worker: a private progress tracker, one instance of every operator,
    // and an outbox flushed to the channel matrix at the end of each step.
    class WorkerRuntime final : public OpContext
    {
    public:
        WorkerRuntime(std::shared_ptr<const DataflowGraph> graph, WorkerId worker, ChannelMatrix *channels,
                      ProbeTable *probes);

        WorkerId worker() const override { return m_worker; }
        std::uint32_t worker_count() const override { return m_graph->worker_count; }

        const Antichain<Time> &frontier(const Location &loc) const override
        {
            return m_tracker.frontier(m_graph->locate(loc));
        }
        LocIdx locate(OpId op, std::uint32_t port, PortDir dir) const override
        {
            return m_graph->locate(op, port, dir);
        }
        const Antichain<Time> &frontier_at(LocIdx loc) const override { return m_tracker.frontier(loc); }

        void note_consumed(OpId op, std::uint32_t in_port, Time time) override;
        Capability hold(OpId op, std::uint32_t out_port, Time time) override;
        void downgrade(Capability &cap, Time to) override;
        void release(Capability &&cap) override;
        void send(OpId op, std::uint32_t out_port, Time time, Payload payload) override;
        void send_to(OpId op, std::uint32_t out_port, WorkerId dst, Time time, Payload payload) override;

        // Drains inbound channels, schedules each operator at most once, and
        // flushes produced messages and progress updates. Returns whether any
        // work happened. A user-logic exception poisons the runtime.
        bool step();

        OperatorInstance *instance(OpId op) { return m_instances[op].get(); }
        bool poisoned() const { return m_poisoned; }

        const ProgressTracker<Time> &tracker() const { return m_tracker; }

    private:
        struct Outgoing
        {
            WorkerId dst = 0;
            std::uint32_t edge = 0;
            Time time = 0;
            Payload payload;
        };

        void push_delta(LocIdx loc, Time time, std::int64_t delta)
        {
            if (m_silent)
                return;
            m_deltas.push_back(ProgressUpdate<Time>{loc, m_worker, time, delta});
        }

        void check_send_right(OpId op, std::uint32_t out_port, Time time) const;
        void enqueue(WorkerId dst, std::uint32_t edge, Time time, Payload payload);
        void apply_progress_envelope(const Envelope &env);
        void deliver_data_envelope(Envelope &&env);
        void flush();

        std::shared_ptr<const DataflowGraph> m_graph;
        WorkerId m_worker;
        ChannelMatrix *m_channels;
        ProbeTable *m_probes;
        std::map<LocIdx, std::uint32_t> m_probed_locations;

        ProgressTracker<Time> m_tracker;
        SharedScope m_scope;
        std::vector<std::unique_ptr<OperatorInstance>> m_instances;

        // Held capabilities per output location (times, with multiplicity).
        std::vector<std::multiset<Time>> m_held;
        // Times granted to the activation currently running (from consumed
        // input batches); cleared when the activation ends.
        std::vector<Time> m_activation_grants;
        OpId m_active_op = 0;
        bool m_in_activation = false;
        bool m_silent = false; // setup mode: capability mints are pre-seeded

        std::vector<ProgressUpdate<Time>> m_deltas;
        std::vector<Outgoing> m_outbox;
        bool m_poisoned = false;
    };
}
