#include "flowmig/progress.hpp"

#include "flowmig/graph.hpp"
#include "pair_time.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <vector>

using namespace flowmig;

namespace
{
    // A two-operator chain: A (one output) feeding B (one input).
    DataflowGraph chain_graph()
    {
        DataflowBuilder b(1);
        OperatorSpec a;
        a.name = "a";
        a.outputs = 1;
        const OpId src = b.add_operator(std::move(a));
        OperatorSpec bee;
        bee.name = "b";
        bee.inputs = 1;
        const OpId dst = b.add_operator(std::move(bee));
        b.pipeline(StreamRef<std::uint64_t>{src, 0}, dst, 0);
        return b.build();
    }

    ProgressUpdate<Time> upd(LocIdx loc, Time t, std::int64_t d) { return {loc, 0, t, d}; }
}

TEST_CASE("source downgrade advances the downstream frontier")
{
    DataflowGraph g = chain_graph();
    const LocIdx a_out = g.locate(0, 0, PortDir::Output);
    const LocIdx b_in = g.locate(1, 0, PortDir::Input);

    ProgressTracker<Time> tracker(&g.topology());
    tracker.seed(a_out, 0, 1);
    tracker.initialize_frontiers();
    CHECK(tracker.frontier(b_in) == Antichain<Time>::from({0}));

    auto changed = tracker.apply({upd(a_out, 0, -1), upd(a_out, 10, +1)});
    CHECK(tracker.frontier(b_in) == Antichain<Time>::from({10}));
    bool saw_b_in = false;
    for (LocIdx l : changed)
        saw_b_in |= (l == b_in);
    CHECK(saw_b_in);
}

TEST_CASE("slower upstream capability holds the frontier")
{
    DataflowGraph g = chain_graph();
    const LocIdx a_out = g.locate(0, 0, PortDir::Output);
    const LocIdx b_in = g.locate(1, 0, PortDir::Input);

    ProgressTracker<Time> tracker(&g.topology());
    tracker.seed(a_out, 0, 2); // two worker instances of A
    tracker.initialize_frontiers();

    tracker.apply({upd(a_out, 0, -1), upd(a_out, 45, +1)});
    tracker.apply({upd(a_out, 0, -1), upd(a_out, 53, +1)});
    CHECK(tracker.frontier(b_in) == Antichain<Time>::from({45}));

    tracker.apply({upd(a_out, 45, -1)}); // the slower input's holder drops
    CHECK(tracker.frontier(b_in) == Antichain<Time>::from({53}));
}

TEST_CASE("negative counts are buffered and do not disturb frontiers")
{
    DataflowGraph g = chain_graph();
    const LocIdx a_out = g.locate(0, 0, PortDir::Output);
    const LocIdx b_in = g.locate(1, 0, PortDir::Input);

    ProgressTracker<Time> tracker(&g.topology());
    tracker.seed(a_out, 0, 1);
    tracker.initialize_frontiers();

    // Consumption report from another worker arrives before the matching
    // production report: the frontier must stay put.
    tracker.apply({upd(b_in, 7, -1)});
    CHECK(tracker.frontier(b_in) == Antichain<Time>::from({0}));
    CHECK(tracker.counts(b_in).at(7) == -1);

    tracker.apply({upd(b_in, 7, +1)});
    CHECK(tracker.frontier(b_in) == Antichain<Time>::from({0}));
    CHECK(tracker.counts(b_in).count(7) == 0); // cancelled exactly

    tracker.apply({upd(a_out, 0, -1)});
    CHECK(tracker.frontier(b_in).empty());
}

TEST_CASE("updates for unknown locations are configuration errors")
{
    DataflowGraph g = chain_graph();
    ProgressTracker<Time> tracker(&g.topology());
    tracker.initialize_frontiers();
    CHECK_THROWS_AS(tracker.apply({upd(999, 0, +1)}), ConfigError);
}

TEST_CASE("product-order timestamps yield set-valued frontiers")
{
    DataflowGraph g = chain_graph();
    const LocIdx a_out = g.locate(0, 0, PortDir::Output);
    const LocIdx b_in = g.locate(1, 0, PortDir::Input);

    ProgressTracker<PairTime> tracker(&g.topology());
    tracker.seed(a_out, PairTime::minimum(), 1);
    tracker.initialize_frontiers();

    tracker.apply({{a_out, 0, PairTime{1, 4}, +1},
                   {a_out, 0, PairTime{3, 2}, +1},
                   {a_out, 0, PairTime{0, 0}, -1}});
    auto f = tracker.frontier(b_in);
    CHECK(f.size() == 2);
    CHECK(f.in_advance(PairTime{1, 4}));
    CHECK(f.in_advance(PairTime{3, 2}));
    CHECK_FALSE(f.in_advance(PairTime{1, 3}));
}

namespace
{
    // Randomized-DAG oracle: reachability by Floyd-Warshall over locations and
    // frontiers recomputed from absolute counts, independent of the tracker.
    struct Oracle
    {
        std::size_t locs;
        std::vector<std::vector<bool>> reach; // reach[src][dst], reflexive
        std::map<std::pair<LocIdx, Time>, std::int64_t> counts;

        explicit Oracle(std::size_t n) : locs(n), reach(n, std::vector<bool>(n, false))
        {
            for (std::size_t i = 0; i < n; ++i)
                reach[i][i] = true;
        }

        void edge(LocIdx a, LocIdx b) { reach[a][b] = true; }

        void close()
        {
            for (std::size_t k = 0; k < locs; ++k)
                for (std::size_t i = 0; i < locs; ++i)
                    for (std::size_t j = 0; j < locs; ++j)
                        if (reach[i][k] && reach[k][j])
                            reach[i][j] = true;
        }

        void apply(const std::vector<ProgressUpdate<Time>> &batch)
        {
            for (const auto &u : batch)
                counts[{u.location, u.time}] += u.delta;
        }

        Antichain<Time> frontier(LocIdx at) const
        {
            Antichain<Time> f;
            for (const auto &[key, count] : counts)
                if (count > 0 && reach[key.first][at])
                    f.insert(key.second);
            return f;
        }
    };
}

TEST_CASE("incremental tracker equals recompute-from-scratch oracle on random DAGs")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 30; ++trial)
    {
        // Random acyclic operator graph: edges only go id-forward.
        const std::uint32_t n_ops = 2 + rng() % 7; // <= 8 operators
        DataflowBuilder b(1);
        std::vector<std::uint32_t> n_out(n_ops), n_in(n_ops);
        for (std::uint32_t o = 0; o < n_ops; ++o)
        {
            OperatorSpec spec;
            spec.name = "op" + std::to_string(o);
            n_in[o] = (o == 0) ? 0 : 1 + rng() % 2;
            n_out[o] = (o + 1 == n_ops) ? 0 : 1 + rng() % 2;
            spec.inputs = n_in[o];
            spec.outputs = n_out[o];
            b.add_operator(std::move(spec));
        }
        std::vector<std::tuple<OpId, std::uint32_t, OpId, std::uint32_t>> edges;
        for (OpId src = 0; src + 1 < n_ops; ++src)
            for (std::uint32_t port = 0; port < n_out[src]; ++port)
            {
                const OpId dst = src + 1 + rng() % (n_ops - src - 1);
                if (n_in[dst] == 0)
                    continue;
                const std::uint32_t dport = rng() % n_in[dst];
                b.pipeline(StreamRef<std::uint64_t>{src, port}, dst, dport);
                edges.emplace_back(src, port, dst, dport);
            }
        DataflowGraph g = b.build();

        Oracle oracle(g.location_count());
        for (const auto &[so, sp, dop, dp] : edges)
            oracle.edge(g.locate(so, sp, PortDir::Output), g.locate(dop, dp, PortDir::Input));
        for (OpId o = 0; o < n_ops; ++o)
            for (std::uint32_t i = 0; i < n_in[o]; ++i)
                for (std::uint32_t out = 0; out < n_out[o]; ++out)
                    oracle.edge(g.locate(o, i, PortDir::Input), g.locate(o, out, PortDir::Output));
        oracle.close();

        ProgressTracker<Time> tracker(&g.topology());

        // Simulated legal execution over up to 4 worker replicas.
        const int workers = 1 + rng() % 4;
        std::vector<std::pair<LocIdx, Time>> caps, msgs;
        std::vector<ProgressUpdate<Time>> seed_batch;
        for (OpId o = 0; o < n_ops; ++o)
            if (n_in[o] == 0)
                for (std::uint32_t port = 0; port < n_out[o]; ++port)
                {
                    const LocIdx loc = g.locate(o, port, PortDir::Output);
                    for (int w = 0; w < workers; ++w)
                        caps.emplace_back(loc, 0);
                    tracker.seed(loc, 0, workers);
                    oracle.apply({{loc, 0, 0, workers}});
                }
        tracker.initialize_frontiers();

        std::vector<std::vector<std::uint32_t>> outs_of_op(n_ops);
        std::vector<std::vector<LocIdx>> dests_of_out(g.location_count());
        for (const auto &[so, sp, dop, dp] : edges)
            dests_of_out[g.locate(so, sp, PortDir::Output)].push_back(g.locate(dop, dp, PortDir::Input));
        std::vector<OpId> op_of_in(g.location_count());
        for (OpId o = 0; o < n_ops; ++o)
            for (std::uint32_t i = 0; i < n_in[o]; ++i)
                op_of_in[g.locate(o, i, PortDir::Input)] = o;

        const int n_updates = 1 + rng() % 100;
        std::vector<ProgressUpdate<Time>> batch;
        for (int u = 0; u < n_updates; ++u)
        {
            const int action = rng() % 5;
            if (!caps.empty() && action <= 1)
            {
                // Downgrade (or drop) a capability.
                const std::size_t i = rng() % caps.size();
                auto [loc, t] = caps[i];
                batch.push_back({loc, 0, t, -1});
                if (action == 0)
                {
                    const Time to = t + rng() % 5;
                    batch.push_back({loc, 0, to, +1});
                    caps[i].second = to;
                }
                else
                {
                    caps.erase(caps.begin() + static_cast<std::ptrdiff_t>(i));
                }
            }
            else if (!caps.empty() && action == 2)
            {
                // Send a message using a capability.
                const std::size_t i = rng() % caps.size();
                auto [loc, t] = caps[i];
                if (!dests_of_out[loc].empty())
                {
                    const LocIdx dst = dests_of_out[loc][rng() % dests_of_out[loc].size()];
                    const Time at = t + rng() % 5;
                    batch.push_back({dst, 0, at, +1});
                    msgs.emplace_back(dst, at);
                }
            }
            else if (!msgs.empty())
            {
                // Consume a message; possibly mint output capabilities.
                const std::size_t i = rng() % msgs.size();
                auto [loc, t] = msgs[i];
                msgs.erase(msgs.begin() + static_cast<std::ptrdiff_t>(i));
                batch.push_back({loc, 0, t, -1});
                const OpId o = op_of_in[loc];
                for (std::uint32_t port = 0; port < n_out[o]; ++port)
                    if (rng() % 2 == 0)
                    {
                        const LocIdx out = g.locate(o, port, PortDir::Output);
                        const Time at = t + rng() % 3;
                        batch.push_back({out, 0, at, +1});
                        caps.emplace_back(out, at);
                    }
            }

            if (!batch.empty() && (rng() % 3 == 0 || u + 1 == n_updates))
            {
                tracker.apply(batch);
                oracle.apply(batch);
                batch.clear();
                for (LocIdx l = 0; l < g.location_count(); ++l)
                    REQUIRE(tracker.frontier(l) == oracle.frontier(l));
            }
        }
    }
}
