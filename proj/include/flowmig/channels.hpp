#pragma once

#include "flowmig/operator.hpp"
#include "flowmig/progress.hpp"

#include <cstddef>
#include <deque>
#include <mutex>
#include <vector>

namespace flowmig
{
    // One message on a worker-pair channel. Channels carry both data batches
    // and progress batches so that a sender's +1 for a message is always seen
    // before the message itself. Payloads that cross a worker boundary travel
    // as bytes; same-worker traffic keeps the in-memory batch.
    struct Envelope
    {
        enum class Kind : std::uint8_t
        {
            Progress,
            Data,
        };

        Kind kind = Kind::Data;
        WorkerId from = 0;

        std::vector<ProgressUpdate<Time>> progress;

        std::uint32_t edge = 0;
        Time time = 0;
        Payload payload;

        std::vector<std::byte> bytes; // serialized form for cross-worker hops
        bool serialized = false;
    };

    // W x W grid of ordered, reliable, unbounded queues. Each slot has a
    // single producer (the sending worker) and a single consumer.
    class ChannelMatrix
    {
    public:
        explicit ChannelMatrix(std::uint32_t workers) : m_workers(workers), m_slots(workers * workers) {}

        void push(WorkerId from, WorkerId to, Envelope &&env)
        {
            Slot &slot = m_slots[from * m_workers + to];
            std::lock_guard lock(slot.mutex);
            slot.queue.push_back(std::move(env));
        }

        std::deque<Envelope> drain(WorkerId from, WorkerId to)
        {
            Slot &slot = m_slots[from * m_workers + to];
            std::lock_guard lock(slot.mutex);
            return std::exchange(slot.queue, {});
        }

        bool empty() const
        {
            for (const Slot &slot : m_slots)
            {
                std::lock_guard lock(slot.mutex);
                if (!slot.queue.empty())
                    return false;
            }
            return true;
        }

    private:
        struct Slot
        {
            mutable std::mutex mutex;
            std::deque<Envelope> queue;
        };

        std::uint32_t m_workers;
        std::vector<Slot> m_slots;
    };
}
