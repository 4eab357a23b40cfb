#pragma once

#include "flowmig/antichain.hpp"
#include "flowmig/errors.hpp"
#include "flowmig/progress.hpp"

#include <deque>
#include <memory>
#include <utility>
#include <vector>

namespace flowmig
{
    // Type-erased record batch travelling on a channel. The pointee is a
    // std::vector<T> for the edge's record type; payloads are immutable once
    // created and may be shared (broadcast to co-located operators).
    struct Payload
    {
        std::shared_ptr<void> ptr;
        std::size_t records = 0;

        bool empty() const { return ptr == nullptr; }
    };

    template <class T>
    Payload make_payload(std::vector<T> &&v)
    {
        Payload p;
        p.records = v.size();
        p.ptr = std::make_shared<std::vector<T>>(std::move(v));
        return p;
    }

    template <class T>
    const std::vector<T> &payload_view(const Payload &p)
    {
        FLOWMIG_ASSERT(p.ptr != nullptr);
        return *static_cast<const std::vector<T> *>(p.ptr.get());
    }

    template <class T>
    std::vector<T> payload_take(Payload &&p)
    {
        FLOWMIG_ASSERT(p.ptr != nullptr);
        auto typed = std::static_pointer_cast<std::vector<T>>(p.ptr);
        if (typed.use_count() == 1)
            return std::move(*typed);
        return *typed;
    }

    // The right to emit output at (or after) a time on one output port.
    // Move-only; every transition is reported to the owning worker's progress
    // state through the context that created it.
    class Capability
    {
    public:
        Capability() = default;
        Capability(OpId op, std::uint32_t port, Time time) : m_op(op), m_port(port), m_time(time), m_valid(true) {}

        Capability(Capability &&other) noexcept { *this = std::move(other); }
        Capability &operator=(Capability &&other) noexcept
        {
            m_op = other.m_op;
            m_port = other.m_port;
            m_time = other.m_time;
            m_valid = other.m_valid;
            other.m_valid = false;
            return *this;
        }
        Capability(const Capability &) = delete;
        Capability &operator=(const Capability &) = delete;

        // A capability may still be valid when its owner is torn down with the
        // dataflow; the per-worker registry goes away with it.
        ~Capability() = default;

        bool valid() const { return m_valid; }
        Time time() const { return m_time; }
        OpId op() const { return m_op; }
        std::uint32_t port() const { return m_port; }

    private:
        friend class WorkerRuntime;
        OpId m_op = 0;
        std::uint32_t m_port = 0;
        Time m_time = 0;
        bool m_valid = false;
    };

    // Services a worker exposes to an operator during one activation.
    class OpContext
    {
    public:
        virtual ~OpContext() = default;

        virtual WorkerId worker() const = 0;
        virtual std::uint32_t worker_count() const = 0;

        // Current frontier at any location, per this worker's tracker.
        virtual const Antichain<Time> &frontier(const Location &loc) const = 0;
        virtual LocIdx locate(OpId op, std::uint32_t port, PortDir dir) const = 0;
        virtual const Antichain<Time> &frontier_at(LocIdx loc) const = 0;

        // Consumption of an input message batch (records -1 and grants the
        // activation the right to send at >= time until the activation ends).
        virtual void note_consumed(OpId op, std::uint32_t in_port, Time time) = 0;

        // Capability management. hold() requires a held capability or an
        // activation grant at some time <= `time`.
        virtual Capability hold(OpId op, std::uint32_t out_port, Time time) = 0;
        virtual void downgrade(Capability &cap, Time to) = 0;
        virtual void release(Capability &&cap) = 0;

        // Sends checked against held capabilities / activation grants.
        virtual void send(OpId op, std::uint32_t out_port, Time time, Payload payload) = 0;
        virtual void send_to(OpId op, std::uint32_t out_port, WorkerId dst, Time time, Payload payload) = 0;
    };

    // One per-worker instance of a dataflow operator. Instances are owned and
    // stepped by exactly one worker; cross-worker interaction happens only
    // through channels.
    class OperatorInstance
    {
    public:
        virtual ~OperatorInstance() = default;

        // Mint initial capabilities declared in the spec. Called once before
        // execution; the context does not emit progress updates here because
        // trackers are pre-seeded with the declared counts.
        virtual void setup(OpContext &) {}

        // One cooperative activation; returns whether any work was done.
        virtual bool step(OpContext &) = 0;

        // Runtime delivers a decoded message batch to an input port.
        virtual void deliver(std::uint32_t in_port, Time time, Payload payload) = 0;
    };

    // Typed input queue helper for operator implementations.
    template <class T>
    class InPort
    {
    public:
        void bind(OpId op, std::uint32_t port)
        {
            m_op = op;
            m_port = port;
        }

        void push(Time time, Payload payload) { m_queue.emplace_back(time, std::move(payload)); }

        bool pending() const { return !m_queue.empty(); }

        // Consumes all queued batches, recording message consumption.
        std::vector<std::pair<Time, std::vector<T>>> take(OpContext &ctx)
        {
            std::vector<std::pair<Time, std::vector<T>>> out;
            out.reserve(m_queue.size());
            for (auto &[time, payload] : m_queue)
            {
                ctx.note_consumed(m_op, m_port, time);
                out.emplace_back(time, payload_take<T>(std::move(payload)));
            }
            m_queue.clear();
            return out;
        }

    private:
        OpId m_op = 0;
        std::uint32_t m_port = 0;
        std::deque<std::pair<Time, Payload>> m_queue;
    };

    // Typed output port helper.
    template <class T>
    class OutPort
    {
    public:
        void bind(OpId op, std::uint32_t port)
        {
            m_op = op;
            m_port = port;
        }

        OpId op() const { return m_op; }
        std::uint32_t port() const { return m_port; }

        void send(OpContext &ctx, Time time, std::vector<T> &&records) const
        {
            if (records.empty())
                return;
            ctx.send(m_op, m_port, time, make_payload(std::move(records)));
        }

        void send_to(OpContext &ctx, WorkerId dst, Time time, std::vector<T> &&records) const
        {
            if (records.empty())
                return;
            ctx.send_to(m_op, m_port, dst, time, make_payload(std::move(records)));
        }

        Capability hold(OpContext &ctx, Time time) const { return ctx.hold(m_op, m_port, time); }

    private:
        OpId m_op = 0;
        std::uint32_t m_port = 0;
    };
}
