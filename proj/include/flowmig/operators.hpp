#pragma once

#include "flowmig/graph.hpp"
#include "flowmig/operator.hpp"

#include <functional>
#include <memory>
#include <mutex>
#include <vector>

namespace flowmig
{
    // Ingestion point for one stream. Each worker instantiates the source; a
    // per-worker InputHandle stages sends/advances/closes from any thread and
    // the instance applies them in order during its activations.
    template <class T>
    class SourceOp final : public OperatorInstance
    {
    public:
        explicit SourceOp(OpId self) { m_out.bind(self, 0); }

        void setup(OpContext &ctx) override { m_cap = m_out.hold(ctx, TimeTraits<Time>::minimum()); }

        void deliver(std::uint32_t, Time, Payload) override { FLOWMIG_ASSERT(!"source has no inputs"); }

        bool step(OpContext &ctx) override
        {
            std::vector<Staged> staged;
            {
                std::lock_guard lock(m_mutex);
                staged.swap(m_staged);
            }
            for (Staged &s : staged)
            {
                switch (s.kind)
                {
                case Staged::Kind::Send:
                    m_out.send(ctx, s.time, std::move(s.records));
                    break;
                case Staged::Kind::Advance:
                    ctx.downgrade(m_cap, s.time);
                    break;
                case Staged::Kind::Close:
                    ctx.release(std::move(m_cap));
                    break;
                }
            }
            return !staged.empty();
        }

        void stage_send(Time time, std::vector<T> &&records)
        {
            std::lock_guard lock(m_mutex);
            m_staged.push_back(Staged{Staged::Kind::Send, time, std::move(records)});
        }

        void stage_advance(Time time)
        {
            std::lock_guard lock(m_mutex);
            m_staged.push_back(Staged{Staged::Kind::Advance, time, {}});
        }

        void stage_close()
        {
            std::lock_guard lock(m_mutex);
            m_staged.push_back(Staged{Staged::Kind::Close, 0, {}});
        }

    private:
        struct Staged
        {
            enum class Kind
            {
                Send,
                Advance,
                Close,
            };
            Kind kind;
            Time time;
            std::vector<T> records;
        };

        OutPort<T> m_out;
        Capability m_cap;
        std::mutex m_mutex;
        std::vector<Staged> m_staged;
    };

    // Feeds one worker's source instance. send() stamps records with the
    // handle's current capability time; advance_to() moves it forward; close()
    // drops the capability. Usage errors fail loudly on the calling thread.
    template <class T>
    class InputHandle
    {
    public:
        InputHandle() = default;
        InputHandle(SourceOp<T> *source) : m_source(source) {}

        Time time() const { return m_time; }
        bool closed() const { return m_closed; }

        void send(std::vector<T> records)
        {
            if (m_closed)
                throw UsageError("send on a closed input");
            if (records.empty())
                return;
            m_source->stage_send(m_time, std::move(records));
        }

        void advance_to(Time t)
        {
            if (m_closed)
                throw UsageError("advance on a closed input");
            if (t < m_time)
                throw UsageError("input advance moves backward: " + std::to_string(m_time) + " -> " +
                                 std::to_string(t));
            if (t == m_time)
                return;
            m_time = t;
            m_source->stage_advance(t);
        }

        void close()
        {
            if (m_closed)
                return;
            m_closed = true;
            m_source->stage_close();
        }

    private:
        SourceOp<T> *m_source = nullptr;
        Time m_time = TimeTraits<Time>::minimum();
        bool m_closed = false;
    };

    // Test/debug sink: records every delivered (time, record) pair in arrival
    // order. The capture buffer is worker-local.
    template <class T>
    class CaptureOp final : public OperatorInstance
    {
    public:
        using Buffer = std::vector<std::pair<Time, T>>;

        CaptureOp(OpId self, std::shared_ptr<Buffer> buffer) : m_buffer(std::move(buffer)) { m_in.bind(self, 0); }

        void deliver(std::uint32_t, Time time, Payload payload) override { m_in.push(time, std::move(payload)); }

        bool step(OpContext &ctx) override
        {
            if (!m_in.pending())
                return false;
            for (auto &[time, records] : m_in.take(ctx))
                for (T &r : records)
                    m_buffer->emplace_back(time, std::move(r));
            return true;
        }

    private:
        InPort<T> m_in;
        std::shared_ptr<Buffer> m_buffer;
    };

    // Single-input single-output operator driven by user closures; used by
    // tests and by simple stateless stages. The closure owns any capabilities
    // it mints via the shared vector.
    template <class In, class Out>
    class FnOp final : public OperatorInstance
    {
    public:
        struct Handle
        {
            OpContext &ctx;
            InPort<In> &in;
            OutPort<Out> &out;
            std::vector<Capability> &caps;
        };
        using SetupFn = std::function<void(Handle)>;
        using StepFn = std::function<bool(Handle)>;

        FnOp(OpId self, SetupFn setup, StepFn step) : m_setup(std::move(setup)), m_step(std::move(step))
        {
            m_in.bind(self, 0);
            m_out.bind(self, 0);
        }

        void setup(OpContext &ctx) override
        {
            if (m_setup)
                m_setup(Handle{ctx, m_in, m_out, m_caps});
        }

        void deliver(std::uint32_t, Time time, Payload payload) override { m_in.push(time, std::move(payload)); }

        bool step(OpContext &ctx) override { return m_step(Handle{ctx, m_in, m_out, m_caps}); }

    private:
        SetupFn m_setup;
        StepFn m_step;
        InPort<In> m_in;
        OutPort<Out> m_out;
        std::vector<Capability> m_caps;
    };

    // Builder helpers for the common shapes.

    template <class T>
    std::pair<InputDecl<T>, StreamRef<T>> add_input(DataflowBuilder &b, std::string name)
    {
        OperatorSpec spec;
        spec.name = std::move(name);
        spec.inputs = 0;
        spec.outputs = 1;
        spec.initial_caps = {0};
        spec.make = [](OpId self, WorkerId, SharedScope &) { return std::make_unique<SourceOp<T>>(self); };
        const OpId id = b.add_operator(std::move(spec));
        return {InputDecl<T>{id}, StreamRef<T>{id, 0}};
    }

    template <class T>
    OpId add_capture(DataflowBuilder &b, StreamRef<T> stream, std::string name,
                     std::vector<std::shared_ptr<typename CaptureOp<T>::Buffer>> per_worker_buffers)
    {
        OperatorSpec spec;
        spec.name = std::move(name);
        spec.inputs = 1;
        spec.outputs = 0;
        spec.make = [buffers = std::move(per_worker_buffers)](OpId self, WorkerId w, SharedScope &) {
            return std::make_unique<CaptureOp<T>>(self, buffers.at(w));
        };
        const OpId id = b.add_operator(std::move(spec));
        b.pipeline(stream, id, 0);
        return id;
    }
}
