#include "flowmig/graph.hpp"

#include <algorithm>
#include <deque>

namespace flowmig
{
    void DataflowGraph::finalize()
    {
        if (worker_count == 0)
            throw ConfigError("worker count must be positive");

        // Location numbering: per operator, inputs first, then outputs.
        m_loc_base.assign(operators.size(), 0);
        std::uint32_t next = 0;
        for (std::size_t i = 0; i < operators.size(); ++i)
        {
            m_loc_base[i] = next;
            next += operators[i].inputs + operators[i].outputs;
        }
        m_location_count = next;

        for (const OperatorSpec &op : operators)
            for (std::uint32_t port : op.initial_caps)
                if (port >= op.outputs)
                    throw ConfigError("initial capability on missing output port of " + op.name);

        // Edge endpoints must exist; locate() throws on dangling references.
        m_edges_from.assign(m_location_count, {});
        m_edge_dst_loc.assign(edges.size(), 0);
        for (const EdgeSpec &e : edges)
        {
            const LocIdx src = locate(e.src_op, e.src_port, PortDir::Output);
            const LocIdx dst = locate(e.dst_op, e.dst_port, PortDir::Input);
            m_edges_from[src].push_back(e.id);
            m_edge_dst_loc[e.id] = dst;
        }

        // Cycle check over operators (Kahn).
        std::vector<std::uint32_t> indegree(operators.size(), 0);
        std::vector<std::vector<OpId>> succ(operators.size());
        for (const EdgeSpec &e : edges)
        {
            succ[e.src_op].push_back(e.dst_op);
            ++indegree[e.dst_op];
        }
        std::deque<OpId> ready;
        for (OpId o = 0; o < operators.size(); ++o)
            if (indegree[o] == 0)
                ready.push_back(o);
        std::size_t visited = 0;
        while (!ready.empty())
        {
            const OpId o = ready.front();
            ready.pop_front();
            ++visited;
            for (OpId s : succ[o])
                if (--indegree[s] == 0)
                    ready.push_back(s);
        }
        if (visited != operators.size())
            throw ConfigError("dataflow graph is cyclic");

        // Location-level reachability: output ports feed the input ports of
        // their edges; an operator's input ports feed all of its output ports.
        std::vector<std::vector<LocIdx>> direct(m_location_count);
        for (const EdgeSpec &e : edges)
            direct[locate(e.src_op, e.src_port, PortDir::Output)].push_back(
                locate(e.dst_op, e.dst_port, PortDir::Input));
        for (OpId o = 0; o < operators.size(); ++o)
            for (std::uint32_t i = 0; i < operators[o].inputs; ++i)
                for (std::uint32_t out = 0; out < operators[o].outputs; ++out)
                    direct[locate(o, i, PortDir::Input)].push_back(locate(o, out, PortDir::Output));

        m_topology.location_count = m_location_count;
        m_topology.downstream.assign(m_location_count, {});
        m_topology.upstream.assign(m_location_count, {});
        std::vector<char> seen(m_location_count);
        for (LocIdx start = 0; start < m_location_count; ++start)
        {
            std::fill(seen.begin(), seen.end(), 0);
            std::deque<LocIdx> queue{start};
            seen[start] = 1;
            while (!queue.empty())
            {
                const LocIdx l = queue.front();
                queue.pop_front();
                m_topology.downstream[start].push_back(l);
                m_topology.upstream[l].push_back(start);
                for (LocIdx d : direct[l])
                    if (!seen[d])
                    {
                        seen[d] = 1;
                        queue.push_back(d);
                    }
            }
        }
    }
}
