#pragma once

#include "flowmig/errors.hpp"

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

// Little-endian byte codec for everything that crosses a worker boundary.
// Formats are fixed by hand so that serialized sizes are exact and outputs
// are byte-identical across runs and platforms.
namespace flowmig::wire
{
    class Writer
    {
    public:
        void u8(std::uint8_t v) { m_bytes.push_back(static_cast<std::byte>(v)); }

        void u32(std::uint32_t v)
        {
            for (int i = 0; i < 4; ++i)
                u8(static_cast<std::uint8_t>(v >> (8 * i)));
        }

        void u64(std::uint64_t v)
        {
            for (int i = 0; i < 8; ++i)
                u8(static_cast<std::uint8_t>(v >> (8 * i)));
        }

        void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

        void bytes(const void *data, std::size_t n)
        {
            const auto *p = static_cast<const std::byte *>(data);
            m_bytes.insert(m_bytes.end(), p, p + n);
        }

        std::size_t size() const { return m_bytes.size(); }
        std::vector<std::byte> take() { return std::move(m_bytes); }

    private:
        std::vector<std::byte> m_bytes;
    };

    class Reader
    {
    public:
        explicit Reader(std::span<const std::byte> bytes) : m_bytes(bytes) {}

        std::uint8_t u8()
        {
            need(1);
            return static_cast<std::uint8_t>(m_bytes[m_pos++]);
        }

        std::uint32_t u32()
        {
            std::uint32_t v = 0;
            for (int i = 0; i < 4; ++i)
                v |= static_cast<std::uint32_t>(u8()) << (8 * i);
            return v;
        }

        std::uint64_t u64()
        {
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i)
                v |= static_cast<std::uint64_t>(u8()) << (8 * i);
            return v;
        }

        std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

        void bytes(void *out, std::size_t n)
        {
            need(n);
            std::memcpy(out, m_bytes.data() + m_pos, n);
            m_pos += n;
        }

        std::size_t remaining() const { return m_bytes.size() - m_pos; }

        void expect_end() const
        {
            if (m_pos != m_bytes.size())
                throw DecodeError("trailing bytes in payload");
        }

    private:
        void need(std::size_t n) const
        {
            if (m_bytes.size() - m_pos < n)
                throw DecodeError("payload truncated");
        }

        std::span<const std::byte> m_bytes;
        std::size_t m_pos = 0;
    };

    // Codec<T>: encode(Writer&, const T&) and decode(Reader&) -> T.
    template <class T, class Enable = void>
    struct Codec;

    template <class T>
    struct Codec<T, std::enable_if_t<std::is_unsigned_v<T> && std::is_integral_v<T>>>
    {
        static void encode(Writer &w, const T &v) { w.u64(static_cast<std::uint64_t>(v)); }
        static T decode(Reader &r)
        {
            const std::uint64_t v = r.u64();
            return static_cast<T>(v);
        }
    };

    template <class T>
    struct Codec<T, std::enable_if_t<std::is_signed_v<T> && std::is_integral_v<T>>>
    {
        static void encode(Writer &w, const T &v) { w.i64(static_cast<std::int64_t>(v)); }
        static T decode(Reader &r) { return static_cast<T>(r.i64()); }
    };

    template <>
    struct Codec<std::string>
    {
        static void encode(Writer &w, const std::string &s)
        {
            w.u64(s.size());
            w.bytes(s.data(), s.size());
        }
        static std::string decode(Reader &r)
        {
            const std::uint64_t n = r.u64();
            if (n > (1ull << 32))
                throw DecodeError("string length implausible");
            std::string s(n, '\0');
            r.bytes(s.data(), n);
            return s;
        }
    };

    template <class A, class B>
    struct Codec<std::pair<A, B>>
    {
        static void encode(Writer &w, const std::pair<A, B> &p)
        {
            Codec<A>::encode(w, p.first);
            Codec<B>::encode(w, p.second);
        }
        static std::pair<A, B> decode(Reader &r)
        {
            A a = Codec<A>::decode(r);
            B b = Codec<B>::decode(r);
            return {std::move(a), std::move(b)};
        }
    };

    template <class T>
    struct Codec<std::vector<T>>
    {
        static void encode(Writer &w, const std::vector<T> &v)
        {
            w.u64(v.size());
            for (const T &x : v)
                Codec<T>::encode(w, x);
        }
        static std::vector<T> decode(Reader &r)
        {
            const std::uint64_t n = r.u64();
            std::vector<T> v;
            v.reserve(static_cast<std::size_t>(n));
            for (std::uint64_t i = 0; i < n; ++i)
                v.push_back(Codec<T>::decode(r));
            return v;
        }
    };

    template <class K, class V>
    struct Codec<std::map<K, V>>
    {
        static void encode(Writer &w, const std::map<K, V> &m)
        {
            w.u64(m.size());
            for (const auto &[k, v] : m)
            {
                Codec<K>::encode(w, k);
                Codec<V>::encode(w, v);
            }
        }
        static std::map<K, V> decode(Reader &r)
        {
            const std::uint64_t n = r.u64();
            std::map<K, V> m;
            for (std::uint64_t i = 0; i < n; ++i)
            {
                K k = Codec<K>::decode(r);
                V v = Codec<V>::decode(r);
                m.emplace(std::move(k), std::move(v));
            }
            return m;
        }
    };

    template <class T>
    std::vector<std::byte> encode_one(const T &v)
    {
        Writer w;
        Codec<T>::encode(w, v);
        return w.take();
    }

    template <class T>
    T decode_one(std::span<const std::byte> bytes)
    {
        Reader r(bytes);
        T v = Codec<T>::decode(r);
        r.expect_end();
        return v;
    }
}
