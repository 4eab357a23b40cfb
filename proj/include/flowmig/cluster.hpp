#pragma once

#include "flowmig/channels.hpp"
#include "flowmig/graph.hpp"
#include "flowmig/operators.hpp"
#include "flowmig/runtime.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <random>
#include <thread>
#include <vector>

namespace flowmig
{
    struct ClusterOptions
    {
        // Deterministic mode runs every worker round-robin on the calling
        // thread (order permuted by `seed` each round); threaded mode runs
        // workers 1..W-1 on their own threads while the caller drives worker 0.
        bool deterministic = true;
        std::uint64_t seed = 0;
    };

    class Cluster;

    // Observes the frontier at a probed dataflow location, as seen by one
    // worker's tracker. The observed frontier never retreats.
    class ProbeHandle
    {
    public:
        ProbeHandle() = default;
        ProbeHandle(const ProbeTable *table, std::uint32_t probe) : m_table(table), m_probe(probe) {}

        const Antichain<Time> &frontier()
        {
            Antichain<Time> f = m_table->read(m_probe);
            FLOWMIG_ASSERT(f.dominates(m_last));
            m_last = std::move(f);
            return m_last;
        }

        // True once the frontier admits nothing less-equal t.
        bool passed(Time t) { return frontier().passed(t); }

    private:
        const ProbeTable *m_table = nullptr;
        std::uint32_t m_probe = 0;
        Antichain<Time> m_last;
    };

    // Owns the per-worker runtimes and channels of one dataflow and executes
    // them deterministically on one thread or concurrently on real threads.
    class Cluster
    {
    public:
        Cluster(DataflowGraph graph, ClusterOptions options);
        ~Cluster();

        Cluster(const Cluster &) = delete;
        Cluster &operator=(const Cluster &) = delete;

        std::uint32_t worker_count() const { return m_graph->worker_count; }
        const DataflowGraph &graph() const { return *m_graph; }
        bool deterministic() const { return m_options.deterministic; }

        // One cooperative step of one worker. In threaded mode only worker 0
        // may be stepped by the caller once threads are running.
        bool step(WorkerId w) { return m_runtimes[w]->step(); }

        // Deterministic mode: steps every worker once, in a seed-permuted
        // order. Returns whether any worker did work.
        bool step_round();

        // Runs until `pred` holds. Deterministic mode detects quiescence and
        // fails early when the predicate can no longer become true; both modes
        // throw LivenessError when the step budget is exhausted.
        void run_until(const std::function<bool()> &pred, std::uint64_t step_budget = 10'000'000);

        void start_threads();
        void stop_threads();

        template <class T>
        InputHandle<T> input_handle(InputDecl<T> decl, WorkerId w)
        {
            auto *source = dynamic_cast<SourceOp<T> *>(m_runtimes.at(w)->instance(decl.op));
            FLOWMIG_ASSERT(source != nullptr);
            return InputHandle<T>(source);
        }

        // Closes the inputs of every worker except `fed` for the given source.
        template <class T>
        InputHandle<T> input_handle_solo(InputDecl<T> decl, WorkerId fed = 0)
        {
            for (WorkerId w = 0; w < worker_count(); ++w)
                if (w != fed)
                    input_handle(decl, w).close();
            return input_handle(decl, fed);
        }

        ProbeHandle probe_handle(ProbeRef probe, WorkerId w = 0)
        {
            return ProbeHandle(m_probe_tables.at(w).get(), probe.index);
        }

        Antichain<Time> probe_frontier(ProbeRef probe, WorkerId w = 0) const
        {
            return m_probe_tables.at(w)->read(probe.index);
        }

        // Test access to a worker's operator instance (deterministic mode).
        OperatorInstance *instance(OpId op, WorkerId w) { return m_runtimes.at(w)->instance(op); }
        const WorkerRuntime &runtime(WorkerId w) const { return *m_runtimes.at(w); }

    private:
        void worker_loop(WorkerId w);

        std::shared_ptr<const DataflowGraph> m_graph;
        ClusterOptions m_options;
        std::unique_ptr<ChannelMatrix> m_channels;
        std::vector<std::unique_ptr<ProbeTable>> m_probe_tables;
        std::vector<std::unique_ptr<WorkerRuntime>> m_runtimes;

        std::mt19937_64 m_order_rng;
        std::vector<WorkerId> m_order;

        std::atomic<bool> m_stop{false};
        std::vector<std::thread> m_threads;
    };

    // Convenience: builds runtimes for every worker of `graph`.
    inline std::unique_ptr<Cluster> build_dataflow(DataflowGraph graph, ClusterOptions options = {})
    {
        return std::make_unique<Cluster>(std::move(graph), options);
    }
}
