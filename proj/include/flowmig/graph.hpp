#pragma once

#include "flowmig/errors.hpp"
#include "flowmig/operator.hpp"
#include "flowmig/progress.hpp"
#include "flowmig/wire.hpp"

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flowmig
{
    // Per-worker registry of objects shared between co-located operator
    // instances (the F/S pair shares its bin store this way). Instances of one
    // worker run in one execution context, so no locking is involved.
    class SharedScope
    {
    public:
        template <class T, class Make>
        std::shared_ptr<T> get_or_make(std::uint64_t key, Make &&make)
        {
            auto it = m_items.find(key);
            if (it == m_items.end())
                it = m_items.emplace(key, std::shared_ptr<void>(make())).first;
            return std::static_pointer_cast<T>(it->second);
        }

    private:
        std::map<std::uint64_t, std::shared_ptr<void>> m_items;
    };

    using OperatorFactory =
        std::function<std::unique_ptr<OperatorInstance>(OpId self, WorkerId worker, SharedScope &scope)>;

    struct OperatorSpec
    {
        std::string name;
        std::uint32_t inputs = 0;
        std::uint32_t outputs = 0;
        // Output ports on which every worker instance holds a capability at
        // the minimum timestamp when the dataflow starts.
        std::vector<std::uint32_t> initial_caps;
        OperatorFactory make;
    };

    enum class EdgeKind : std::uint8_t
    {
        Pipeline,  // stays on the producing worker
        Exchange,  // record-level partitioning by exchange value mod workers
        Broadcast, // every worker receives every batch
        Addressed, // sender picks the destination worker per batch
    };

    // Plain exchange routing: value mod worker count.
    inline WorkerId exchange_route(std::uint64_t exchange_value, std::uint32_t worker_count)
    {
        FLOWMIG_ASSERT(worker_count >= 1);
        return static_cast<WorkerId>(exchange_value % worker_count);
    }

    struct EdgeSpec
    {
        std::uint32_t id = 0;
        OpId src_op = 0;
        std::uint32_t src_port = 0;
        OpId dst_op = 0;
        std::uint32_t dst_port = 0;
        EdgeKind kind = EdgeKind::Pipeline;

        // Typed glue, captured when the edge is declared.
        std::function<std::vector<Payload>(const Payload &, std::uint32_t workers)> split; // Exchange only
        std::function<std::vector<std::byte>(const Payload &)> encode;
        std::function<Payload(std::span<const std::byte>)> decode;
    };

    template <class T>
    struct StreamRef
    {
        OpId op = 0;
        std::uint32_t port = 0;
    };

    struct ProbeRef
    {
        std::uint32_t index = 0;
    };

    template <class T>
    struct InputDecl
    {
        OpId op = 0;
    };

    class DataflowGraph
    {
    public:
        std::uint32_t worker_count = 0;
        std::vector<OperatorSpec> operators;
        std::vector<EdgeSpec> edges;
        std::vector<Location> probes;

        LocIdx locate(OpId op, std::uint32_t port, PortDir dir) const
        {
            if (op >= operators.size())
                throw ConfigError("unknown operator " + std::to_string(op));
            const OperatorSpec &spec = operators[op];
            const bool input = dir == PortDir::Input;
            if (port >= (input ? spec.inputs : spec.outputs))
                throw ConfigError("operator " + spec.name + " has no " + (input ? "input" : "output") + " port " +
                                  std::to_string(port));
            return m_loc_base[op] + (input ? port : spec.inputs + port);
        }

        LocIdx locate(const Location &loc) const { return locate(loc.op, loc.port, loc.dir); }

        std::uint32_t location_count() const { return m_location_count; }
        const ProgressTopology &topology() const { return m_topology; }
        const std::vector<std::uint32_t> &edges_from(OpId op, std::uint32_t out_port) const
        {
            return m_edges_from[locate(op, out_port, PortDir::Output)];
        }
        LocIdx edge_dst_loc(std::uint32_t edge) const { return m_edge_dst_loc[edge]; }

        // Checks invariants and builds the location/topology tables. Throws
        // ConfigError on cycles, dangling edges, or a zero worker count.
        void finalize();

    private:
        std::vector<LocIdx> m_loc_base;
        std::uint32_t m_location_count = 0;
        ProgressTopology m_topology;
        std::vector<std::vector<std::uint32_t>> m_edges_from; // by output loc idx
        std::vector<LocIdx> m_edge_dst_loc;
    };

    // Typed construction facade. Each worker instantiates every declared
    // operator exactly once.
    class DataflowBuilder
    {
    public:
        explicit DataflowBuilder(std::uint32_t worker_count)
        {
            m_graph.worker_count = worker_count;
        }

        std::uint32_t worker_count() const { return m_graph.worker_count; }

        OpId add_operator(OperatorSpec spec)
        {
            const OpId id = static_cast<OpId>(m_graph.operators.size());
            m_graph.operators.push_back(std::move(spec));
            return id;
        }

        template <class T>
        void pipeline(StreamRef<T> src, OpId dst, std::uint32_t dst_port)
        {
            add_edge<T>(src, dst, dst_port, EdgeKind::Pipeline, nullptr);
        }

        template <class T>
        void exchange(StreamRef<T> src, OpId dst, std::uint32_t dst_port, std::function<std::uint64_t(const T &)> fn)
        {
            add_edge<T>(src, dst, dst_port, EdgeKind::Exchange, std::move(fn));
        }

        template <class T>
        void broadcast(StreamRef<T> src, OpId dst, std::uint32_t dst_port)
        {
            add_edge<T>(src, dst, dst_port, EdgeKind::Broadcast, nullptr);
        }

        template <class T>
        void addressed(StreamRef<T> src, OpId dst, std::uint32_t dst_port)
        {
            add_edge<T>(src, dst, dst_port, EdgeKind::Addressed, nullptr);
        }

        template <class T>
        ProbeRef probe(StreamRef<T> stream)
        {
            ProbeRef ref{static_cast<std::uint32_t>(m_graph.probes.size())};
            m_graph.probes.push_back(Location{stream.op, stream.port, PortDir::Output});
            return ref;
        }

        DataflowGraph build()
        {
            DataflowGraph g = std::move(m_graph);
            g.finalize();
            return g;
        }

    private:
        template <class T>
        void add_edge(StreamRef<T> src, OpId dst, std::uint32_t dst_port, EdgeKind kind,
                      std::function<std::uint64_t(const T &)> fn)
        {
            EdgeSpec e;
            e.id = static_cast<std::uint32_t>(m_graph.edges.size());
            e.src_op = src.op;
            e.src_port = src.port;
            e.dst_op = dst;
            e.dst_port = dst_port;
            e.kind = kind;
            e.encode = [](const Payload &p) {
                wire::Writer w;
                wire::Codec<std::vector<T>>::encode(w, payload_view<T>(p));
                return w.take();
            };
            e.decode = [](std::span<const std::byte> bytes) {
                wire::Reader r(bytes);
                std::vector<T> records = wire::Codec<std::vector<T>>::decode(r);
                r.expect_end();
                return make_payload(std::move(records));
            };
            if (kind == EdgeKind::Exchange)
            {
                FLOWMIG_ASSERT(fn != nullptr);
                e.split = [fn = std::move(fn)](const Payload &p, std::uint32_t workers) {
                    std::vector<std::vector<T>> parts(workers);
                    for (const T &rec : payload_view<T>(p))
                        parts[exchange_route(fn(rec), workers)].push_back(rec);
                    std::vector<Payload> out(workers);
                    for (std::uint32_t w = 0; w < workers; ++w)
                        if (!parts[w].empty())
                            out[w] = make_payload(std::move(parts[w]));
                    return out;
                };
            }
            m_graph.edges.push_back(std::move(e));
        }

        DataflowGraph m_graph;
    };
}
