#include "flowmig/cluster.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace flowmig
{
    Cluster::Cluster(DataflowGraph graph, ClusterOptions options)
        : m_graph(std::make_shared<const DataflowGraph>(std::move(graph))),
          m_options(options),
          m_order_rng(options.seed)
    {
        m_channels = std::make_unique<ChannelMatrix>(m_graph->worker_count);
        for (WorkerId w = 0; w < m_graph->worker_count; ++w)
            m_probe_tables.push_back(std::make_unique<ProbeTable>(m_graph->probes.size()));
        for (WorkerId w = 0; w < m_graph->worker_count; ++w)
            m_runtimes.push_back(
                std::make_unique<WorkerRuntime>(m_graph, w, m_channels.get(), m_probe_tables[w].get()));
        m_order.resize(m_graph->worker_count);
        std::iota(m_order.begin(), m_order.end(), 0);
    }

    Cluster::~Cluster() { stop_threads(); }

    bool Cluster::step_round()
    {
        FLOWMIG_ASSERT(m_options.deterministic);
        std::shuffle(m_order.begin(), m_order.end(), m_order_rng);
        bool did_work = false;
        for (WorkerId w : m_order)
            did_work |= m_runtimes[w]->step();
        return did_work;
    }

    void Cluster::run_until(const std::function<bool()> &pred, std::uint64_t step_budget)
    {
        if (m_options.deterministic)
        {
            for (std::uint64_t steps = 0;; ++steps)
            {
                if (pred())
                    return;
                if (steps >= step_budget)
                    throw LivenessError("step budget exhausted after " + std::to_string(steps) + " rounds");
                if (!step_round() && m_channels->empty() && !pred())
                    throw LivenessError("dataflow quiescent but predicate unsatisfied");
            }
        }

        start_threads();
        for (std::uint64_t steps = 0;; ++steps)
        {
            if (pred())
                return;
            if (steps >= step_budget)
                throw LivenessError("step budget exhausted after " + std::to_string(steps) + " worker-0 steps");
            if (!m_runtimes[0]->step())
                std::this_thread::yield();
        }
    }

    void Cluster::start_threads()
    {
        FLOWMIG_ASSERT(!m_options.deterministic);
        if (!m_threads.empty())
            return;
        m_stop.store(false);
        for (WorkerId w = 1; w < m_graph->worker_count; ++w)
            m_threads.emplace_back([this, w] { worker_loop(w); });
    }

    void Cluster::stop_threads()
    {
        m_stop.store(true);
        for (std::thread &t : m_threads)
            if (t.joinable())
                t.join();
        m_threads.clear();
    }

    void Cluster::worker_loop(WorkerId w)
    {
        int idle = 0;
        while (!m_stop.load(std::memory_order_relaxed))
        {
            bool did_work = false;
            try
            {
                did_work = m_runtimes[w]->step();
            }
            catch (...)
            {
                // The runtime is poisoned; park until shutdown so the failure
                // surfaces on the driving thread as a stalled frontier.
                while (!m_stop.load(std::memory_order_relaxed))
                    std::this_thread::sleep_for(std::chrono::milliseconds(10));
                return;
            }
            if (did_work)
            {
                idle = 0;
            }
            else if (++idle > 64)
            {
                // More workers than cores is the common desk-scale case; back
                // off instead of spinning.
                std::this_thread::sleep_for(std::chrono::microseconds(50));
            }
            else
            {
                std::this_thread::yield();
            }
        }
    }
}
