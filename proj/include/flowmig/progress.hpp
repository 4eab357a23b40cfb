#pragma once

#include "flowmig/antichain.hpp"
#include "flowmig/errors.hpp"
#include "flowmig/wire.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace flowmig
{
    using OpId = std::uint32_t;
    using WorkerId = std::uint32_t;

    enum class PortDir : std::uint8_t
    {
        Input = 0,
        Output = 1,
    };

    // A place where timestamps can be outstanding: capabilities live at output
    // ports, undelivered/unconsumed messages at input ports.
    struct Location
    {
        OpId op = 0;
        std::uint32_t port = 0;
        PortDir dir = PortDir::Input;

        bool operator==(const Location &) const = default;
    };

    using LocIdx = std::uint32_t;

    // Reachability summary of an acyclic dataflow graph over dense location
    // indices. upstream[l] lists every location (including l itself) whose
    // outstanding timestamps can still reach l; downstream is the transpose.
    struct ProgressTopology
    {
        std::uint32_t location_count = 0;
        std::vector<std::vector<LocIdx>> upstream;
        std::vector<std::vector<LocIdx>> downstream;
    };

    template <class T>
    struct ProgressUpdate
    {
        LocIdx location = 0;
        WorkerId worker = 0;
        T time{};
        std::int64_t delta = 0;
    };

    // Accumulates broadcast progress updates and derives per-location
    // frontiers. Each worker owns a private tracker; all trackers see the same
    // updates (in per-sender order) and converge to the same frontiers.
    //
    // Counts may transiently go negative at a location when updates from
    // different workers arrive reordered; negative entries are retained but do
    // not contribute to frontiers until matched by positive counts.
    template <class T>
    class ProgressTracker
    {
    public:
        explicit ProgressTracker(const ProgressTopology *topology)
            : m_topology(topology),
              m_counts(topology->location_count),
              m_frontiers(topology->location_count)
        {
        }

        // Registers counts present before any update flows (initial source
        // capabilities). Must be called before the first apply.
        void seed(LocIdx loc, const T &time, std::int64_t count)
        {
            check_location(loc);
            m_counts[loc][time] += count;
        }

        // Recomputes every frontier from the seeded counts.
        void initialize_frontiers()
        {
            for (LocIdx l = 0; l < m_topology->location_count; ++l)
                m_frontiers[l] = compute_frontier(l);
        }

        // Applies a batch atomically and returns the locations whose frontier
        // changed. Frontiers never retreat; a retreat is an engine bug.
        std::vector<LocIdx> apply(const std::vector<ProgressUpdate<T>> &batch)
        {
            m_dirty.clear();
            for (const ProgressUpdate<T> &u : batch)
            {
                check_location(u.location);
                auto &per_time = m_counts[u.location];
                auto it = per_time.find(u.time);
                if (it == per_time.end())
                    it = per_time.emplace(u.time, 0).first;
                it->second += u.delta;
                if (it->second == 0)
                    per_time.erase(it);
                for (LocIdx d : m_topology->downstream[u.location])
                    mark_dirty(d);
            }

            std::vector<LocIdx> changed;
            for (LocIdx l : m_dirty)
            {
                Antichain<T> next = compute_frontier(l);
                if (next != m_frontiers[l])
                {
                    FLOWMIG_ASSERT(next.dominates(m_frontiers[l]));
                    m_frontiers[l] = std::move(next);
                    changed.push_back(l);
                }
            }
            return changed;
        }

        const Antichain<T> &frontier(LocIdx loc) const
        {
            check_location(loc);
            return m_frontiers[loc];
        }

        // Exposed so tests can compare against recompute-from-scratch oracles.
        const std::map<T, std::int64_t> &counts(LocIdx loc) const
        {
            check_location(loc);
            return m_counts[loc];
        }

        Antichain<T> compute_frontier(LocIdx loc) const
        {
            Antichain<T> f;
            for (LocIdx u : m_topology->upstream[loc])
                for (const auto &[time, count] : m_counts[u])
                    if (count > 0)
                        f.insert(time);
            return f;
        }

    private:
        void check_location(LocIdx loc) const
        {
            if (loc >= m_topology->location_count)
                throw ConfigError("progress update references unknown location " + std::to_string(loc));
        }

        void mark_dirty(LocIdx l)
        {
            for (LocIdx d : m_dirty)
                if (d == l)
                    return;
            m_dirty.push_back(l);
        }

        const ProgressTopology *m_topology;
        std::vector<std::map<T, std::int64_t>> m_counts;
        std::vector<Antichain<T>> m_frontiers;
        std::vector<LocIdx> m_dirty;
    };

    namespace wire
    {
        // flowmig::wire::Codec specialization must live in the wire namespace.
    }
}

namespace flowmig::wire
{
    template <class T>
    struct Codec<flowmig::ProgressUpdate<T>>
    {
        static void encode(Writer &w, const flowmig::ProgressUpdate<T> &u)
        {
            w.u32(u.location);
            w.u32(u.worker);
            Codec<T>::encode(w, u.time);
            w.i64(u.delta);
        }
        static flowmig::ProgressUpdate<T> decode(Reader &r)
        {
            flowmig::ProgressUpdate<T> u;
            u.location = r.u32();
            u.worker = r.u32();
            u.time = Codec<T>::decode(r);
            u.delta = r.i64();
            return u;
        }
    };
}
