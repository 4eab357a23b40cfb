#include "flowmig/runtime.hpp"

#include <algorithm>

namespace flowmig
{
    WorkerRuntime::WorkerRuntime(std::shared_ptr<const DataflowGraph> graph, WorkerId worker, ChannelMatrix *channels,
                                 ProbeTable *probes)
        : m_graph(std::move(graph)),
          m_worker(worker),
          m_channels(channels),
          m_probes(probes),
          m_tracker(&m_graph->topology()),
          m_held(m_graph->location_count())
    {
        for (std::uint32_t p = 0; p < m_graph->probes.size(); ++p)
            m_probed_locations.emplace(m_graph->locate(m_graph->probes[p]), p);

        // Seed the declared initial capabilities: every worker holds one per
        // listed port, and every tracker accounts for all workers' instances.
        for (OpId op = 0; op < m_graph->operators.size(); ++op)
            for (std::uint32_t port : m_graph->operators[op].initial_caps)
                m_tracker.seed(m_graph->locate(op, port, PortDir::Output), TimeTraits<Time>::minimum(),
                               m_graph->worker_count);
        m_tracker.initialize_frontiers();
        for (const auto &[loc, probe] : m_probed_locations)
            m_probes->publish(probe, m_tracker.frontier(loc));

        // Instantiate operators; their setup() mints the pre-seeded
        // capabilities without emitting progress updates.
        m_silent = true;
        for (OpId op = 0; op < m_graph->operators.size(); ++op)
        {
            m_instances.push_back(m_graph->operators[op].make(op, m_worker, m_scope));
            m_active_op = op;
            m_in_activation = true;
            m_instances.back()->setup(*this);
            m_in_activation = false;
        }
        m_silent = false;
    }

    void WorkerRuntime::note_consumed(OpId op, std::uint32_t in_port, Time time)
    {
        push_delta(m_graph->locate(op, in_port, PortDir::Input), time, -1);
        m_activation_grants.push_back(time);
    }

    void WorkerRuntime::check_send_right(OpId op, std::uint32_t out_port, Time time) const
    {
        if (m_silent)
            return;
        for (Time t : m_held[m_graph->locate(op, out_port, PortDir::Output)])
            if (TimeTraits<Time>::less_equal(t, time))
                return;
        if (m_in_activation && m_active_op == op)
            for (Time t : m_activation_grants)
                if (TimeTraits<Time>::less_equal(t, time))
                    return;
        throw UsageError("operator " + m_graph->operators[op].name + " has no capability authorizing time " +
                         std::to_string(time));
    }

    Capability WorkerRuntime::hold(OpId op, std::uint32_t out_port, Time time)
    {
        check_send_right(op, out_port, time);
        const LocIdx loc = m_graph->locate(op, out_port, PortDir::Output);
        m_held[loc].insert(time);
        push_delta(loc, time, +1);
        return Capability(op, out_port, time);
    }

    void WorkerRuntime::downgrade(Capability &cap, Time to)
    {
        FLOWMIG_ASSERT(cap.valid());
        if (!TimeTraits<Time>::less_equal(cap.time(), to))
            throw UsageError("capability downgrade moves backward: " + std::to_string(cap.time()) + " -> " +
                             std::to_string(to));
        if (cap.time() == to)
            return; // identity downgrade, net-zero updates
        const LocIdx loc = m_graph->locate(cap.op(), cap.port(), PortDir::Output);
        auto it = m_held[loc].find(cap.time());
        FLOWMIG_ASSERT(it != m_held[loc].end());
        m_held[loc].erase(it);
        m_held[loc].insert(to);
        push_delta(loc, cap.time(), -1);
        push_delta(loc, to, +1);
        cap.m_time = to;
    }

    void WorkerRuntime::release(Capability &&cap)
    {
        FLOWMIG_ASSERT(cap.valid());
        const LocIdx loc = m_graph->locate(cap.op(), cap.port(), PortDir::Output);
        auto it = m_held[loc].find(cap.time());
        FLOWMIG_ASSERT(it != m_held[loc].end());
        m_held[loc].erase(it);
        push_delta(loc, cap.time(), -1);
        cap.m_valid = false;
    }

    void WorkerRuntime::enqueue(WorkerId dst, std::uint32_t edge, Time time, Payload payload)
    {
        push_delta(m_graph->edge_dst_loc(edge), time, +1);
        m_outbox.push_back(Outgoing{dst, edge, time, std::move(payload)});
    }

    void WorkerRuntime::send(OpId op, std::uint32_t out_port, Time time, Payload payload)
    {
        check_send_right(op, out_port, time);
        const auto &edge_ids = m_graph->edges_from(op, out_port);
        for (std::uint32_t id : edge_ids)
        {
            const EdgeSpec &edge = m_graph->edges[id];
            switch (edge.kind)
            {
            case EdgeKind::Pipeline:
                enqueue(m_worker, id, time, payload);
                break;
            case EdgeKind::Exchange:
            {
                std::vector<Payload> parts = edge.split(payload, m_graph->worker_count);
                for (WorkerId w = 0; w < parts.size(); ++w)
                    if (!parts[w].empty())
                        enqueue(w, id, time, std::move(parts[w]));
                break;
            }
            case EdgeKind::Broadcast:
                for (WorkerId w = 0; w < m_graph->worker_count; ++w)
                    enqueue(w, id, time, payload);
                break;
            case EdgeKind::Addressed:
                throw UsageError("addressed edge requires send_to");
            }
        }
    }

    void WorkerRuntime::send_to(OpId op, std::uint32_t out_port, WorkerId dst, Time time, Payload payload)
    {
        check_send_right(op, out_port, time);
        if (dst >= m_graph->worker_count)
            throw UsageError("send_to destination out of range");
        const auto &edge_ids = m_graph->edges_from(op, out_port);
        FLOWMIG_ASSERT(edge_ids.size() == 1);
        const EdgeSpec &edge = m_graph->edges[edge_ids[0]];
        FLOWMIG_ASSERT(edge.kind == EdgeKind::Addressed);
        enqueue(dst, edge_ids[0], time, std::move(payload));
    }

    void WorkerRuntime::apply_progress_envelope(const Envelope &env)
    {
        std::vector<LocIdx> changed;
        if (env.serialized)
        {
            wire::Reader r(env.bytes);
            auto batch = wire::Codec<std::vector<ProgressUpdate<Time>>>::decode(r);
            r.expect_end();
            changed = m_tracker.apply(batch);
        }
        else
        {
            changed = m_tracker.apply(env.progress);
        }
        for (LocIdx loc : changed)
        {
            auto it = m_probed_locations.find(loc);
            if (it != m_probed_locations.end())
                m_probes->publish(it->second, m_tracker.frontier(loc));
        }
    }

    void WorkerRuntime::deliver_data_envelope(Envelope &&env)
    {
        const EdgeSpec &edge = m_graph->edges[env.edge];
        Payload payload = env.serialized ? edge.decode(env.bytes) : std::move(env.payload);
        // Message safety: a delivered timestamp must still be admitted by the
        // receiving input's frontier. The sender's +1 travelled ahead of the
        // message on this same ordered channel.
        FLOWMIG_ASSERT(m_tracker.frontier(m_graph->edge_dst_loc(env.edge)).in_advance(env.time));
        m_instances[edge.dst_op]->deliver(edge.dst_port, env.time, std::move(payload));
    }

    bool WorkerRuntime::step()
    {
        if (m_poisoned)
            throw ProtocolError("worker runtime is poisoned by an earlier operator failure");

        bool did_work = false;

        for (WorkerId from = 0; from < m_graph->worker_count; ++from)
        {
            std::deque<Envelope> inbound = m_channels->drain(from, m_worker);
            for (Envelope &env : inbound)
            {
                if (env.kind == Envelope::Kind::Progress)
                    apply_progress_envelope(env);
                else
                    deliver_data_envelope(std::move(env));
                did_work = true;
            }
        }

        for (OpId op = 0; op < m_instances.size(); ++op)
        {
            m_active_op = op;
            m_in_activation = true;
            m_activation_grants.clear();
            try
            {
                did_work |= m_instances[op]->step(*this);
            }
            catch (...)
            {
                m_poisoned = true;
                m_in_activation = false;
                throw;
            }
            m_in_activation = false;
        }
        m_activation_grants.clear();

        did_work |= !m_deltas.empty() || !m_outbox.empty();
        flush();
        return did_work;
    }

    void WorkerRuntime::flush()
    {
        if (!m_deltas.empty())
        {
            std::vector<std::byte> encoded;
            for (WorkerId w = 0; w < m_graph->worker_count; ++w)
            {
                Envelope env;
                env.kind = Envelope::Kind::Progress;
                env.from = m_worker;
                if (w == m_worker)
                {
                    env.progress = m_deltas;
                }
                else
                {
                    if (encoded.empty())
                    {
                        wire::Writer writer;
                        wire::Codec<std::vector<ProgressUpdate<Time>>>::encode(writer, m_deltas);
                        encoded = writer.take();
                    }
                    env.bytes = encoded;
                    env.serialized = true;
                }
                m_channels->push(m_worker, w, std::move(env));
            }
            m_deltas.clear();
        }

        for (Outgoing &out : m_outbox)
        {
            Envelope env;
            env.kind = Envelope::Kind::Data;
            env.from = m_worker;
            env.edge = out.edge;
            env.time = out.time;
            if (out.dst == m_worker)
            {
                env.payload = std::move(out.payload);
            }
            else
            {
                env.bytes = m_graph->edges[out.edge].encode(out.payload);
                env.serialized = true;
            }
            m_channels->push(m_worker, out.dst, std::move(env));
        }
        m_outbox.clear();
    }
}
