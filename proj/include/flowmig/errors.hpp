#pragma once

#include <stdexcept>
#include <string>

namespace flowmig
{
    // Invalid dataflow/benchmark configuration (bad graph, bad flag values).
    class ConfigError : public std::runtime_error
    {
    public:
        explicit ConfigError(const std::string &msg) : std::runtime_error("config error: " + msg) {}
    };

    // Caller violated an API precondition (backward advance, send after close,
    // backward capability downgrade). These are programming errors and fail loudly.
    class UsageError : public std::logic_error
    {
    public:
        explicit UsageError(const std::string &msg) : std::logic_error("usage error: " + msg) {}
    };

    // The migration protocol reached a state its invariants rule out
    // (instruction for a sealed epoch, extracting a bin that is not hosted).
    class ProtocolError : public std::runtime_error
    {
    public:
        explicit ProtocolError(const std::string &msg) : std::runtime_error("protocol error: " + msg) {}
    };

    // Corrupt or truncated bytes on a wire payload.
    class DecodeError : public std::runtime_error
    {
    public:
        explicit DecodeError(const std::string &msg) : std::runtime_error("decode error: " + msg) {}
    };

    // A run_until/drive step budget was exhausted, or the system went quiescent
    // without satisfying the awaited predicate.
    class LivenessError : public std::runtime_error
    {
    public:
        explicit LivenessError(const std::string &msg) : std::runtime_error("liveness failure: " + msg) {}
    };

    namespace detail
    {
        [[noreturn]] inline void invariant_failed(const char *expr, const char *file, int line)
        {
            throw std::logic_error(std::string("invariant violated: ") + expr + " at " + file + ":" +
                                   std::to_string(line));
        }
    }
}

// Internal invariant check; active in all build types.
#define FLOWMIG_ASSERT(expr) \
    do                       \
    {                        \
        if (!(expr))         \
            ::flowmig::detail::invariant_failed(#expr, __FILE__, __LINE__); \
    } while (0)
