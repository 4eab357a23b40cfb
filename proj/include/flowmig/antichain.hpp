#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

// Logical timestamps and antichain frontiers.
//
// A timestamp can be any type with a partial order; the engine instantiates
// everything with Time (a 64-bit tick counter, 1 tick = 1 ns of event time),
// but the antichain and progress machinery is written against TimeTraits so
// that partially ordered timestamps keep working.
namespace flowmig
{
    using Time = std::uint64_t;

    template <class T>
    struct TimeTraits
    {
        static T minimum() { return T::minimum(); }
        static bool less_equal(const T &a, const T &b) { return a.less_equal(b); }
    };

    template <>
    struct TimeTraits<std::uint64_t>
    {
        static std::uint64_t minimum() { return 0; }
        static bool less_equal(std::uint64_t a, std::uint64_t b) { return a <= b; }
    };

    // A frontier: minimal set of mutually incomparable timestamps. The empty
    // antichain means no further timestamps are possible (stream closed).
    template <class T>
    class Antichain
    {
    public:
        Antichain() = default;

        static Antichain from(std::initializer_list<T> times)
        {
            Antichain a;
            for (const T &t : times)
                a.insert(t);
            return a;
        }

        // Inserts t unless an existing element is less-equal t; removes
        // elements dominated by t. Returns true if t was inserted.
        bool insert(const T &t)
        {
            for (const T &e : m_elements)
                if (TimeTraits<T>::less_equal(e, t))
                    return false;
            std::erase_if(m_elements, [&](const T &e) { return TimeTraits<T>::less_equal(t, e); });
            m_elements.push_back(t);
            // Keep a canonical order so that equality and iteration are stable.
            std::sort(m_elements.begin(), m_elements.end());
            return true;
        }

        bool empty() const { return m_elements.empty(); }
        std::size_t size() const { return m_elements.size(); }
        const std::vector<T> &elements() const { return m_elements; }

        // True iff some element is less-equal t (Def. 2: t may still arrive).
        bool in_advance(const T &t) const
        {
            for (const T &e : m_elements)
                if (TimeTraits<T>::less_equal(e, t))
                    return true;
            return false;
        }

        // True iff no element is less-equal t: t can no longer arrive here.
        bool passed(const T &t) const { return !in_advance(t); }

        bool operator==(const Antichain &other) const { return m_elements == other.m_elements; }
        bool operator!=(const Antichain &other) const { return !(*this == other); }

        // True when every element of `earlier` is less-equal some element of
        // this antichain, or this antichain is empty (closed). Used to check
        // that frontiers never retreat.
        bool dominates(const Antichain &earlier) const
        {
            if (m_elements.empty())
                return true;
            for (const T &e : earlier.m_elements)
            {
                bool covered = false;
                for (const T &f : m_elements)
                    if (TimeTraits<T>::less_equal(e, f))
                    {
                        covered = true;
                        break;
                    }
                if (!covered)
                    return false;
            }
            return true;
        }

    private:
        std::vector<T> m_elements;
    };

    // t is in advance of frontier f iff t is greater than or equal to an
    // element of f. The empty frontier admits nothing.
    template <class T>
    bool in_advance_of(const T &t, const Antichain<T> &f)
    {
        return f.in_advance(t);
    }

    template <class T>
    std::ostream &operator<<(std::ostream &os, const Antichain<T> &a)
    {
        os << '{';
        bool first = true;
        for (const T &e : a.elements())
        {
            if (!first)
                os << ", ";
            os << e;
            first = false;
        }
        return os << '}';
    }
}
