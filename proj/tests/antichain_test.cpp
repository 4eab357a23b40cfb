#include "flowmig/antichain.hpp"

#include "pair_time.hpp"

#include <doctest.h>

#include <random>

using namespace flowmig;

TEST_CASE("in_advance_of on integer frontiers")
{
    auto f5 = Antichain<Time>::from({5});
    CHECK(in_advance_of<Time>(6, f5));  // a time 6 is in advance of 5
    CHECK(in_advance_of<Time>(5, f5));  // reflexivity
    CHECK_FALSE(in_advance_of<Time>(4, f5));

    Antichain<Time> empty;
    CHECK_FALSE(in_advance_of<Time>(7, empty)); // closed stream admits nothing
}

TEST_CASE("antichain insert keeps the minimal set")
{
    auto f = Antichain<Time>::from({5});
    f.insert(6);
    CHECK(f == Antichain<Time>::from({5})); // dominated element discarded

    f = Antichain<Time>::from({5});
    f.insert(3);
    CHECK(f == Antichain<Time>::from({3})); // dominating element replaces

    Antichain<Time> g;
    g.insert(9);
    CHECK(g == Antichain<Time>::from({9}));
}

TEST_CASE("antichain holds incomparable product-order elements")
{
    Antichain<PairTime> f;
    CHECK(f.insert({1, 4}));
    CHECK(f.insert({3, 2}));
    CHECK(f.size() == 2); // incomparable, both stay

    CHECK_FALSE(f.insert({3, 4})); // dominated by both
    CHECK(f.insert({0, 0}));       // dominates both
    CHECK(f.size() == 1);

    Antichain<PairTime> g;
    g.insert({1, 4});
    g.insert({3, 2});
    CHECK(in_advance_of<PairTime>({2, 5}, g));
    CHECK(in_advance_of<PairTime>({3, 2}, g));
    CHECK_FALSE(in_advance_of<PairTime>({0, 9}, g));
    CHECK_FALSE(in_advance_of<PairTime>({2, 1}, g));
}

TEST_CASE("integer less_equal is a partial order and insert is canonical")
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<Time> dist(0, 30);
    for (int trial = 0; trial < 200; ++trial)
    {
        const Time a = dist(rng), b = dist(rng), c = dist(rng);
        CHECK(TimeTraits<Time>::less_equal(a, a));
        if (TimeTraits<Time>::less_equal(a, b) && TimeTraits<Time>::less_equal(b, a))
            CHECK(a == b);
        if (TimeTraits<Time>::less_equal(a, b) && TimeTraits<Time>::less_equal(b, c))
            CHECK(TimeTraits<Time>::less_equal(a, c));

        // Insertion order never matters.
        Antichain<Time> f1, f2;
        f1.insert(a);
        f1.insert(b);
        f1.insert(c);
        f2.insert(c);
        f2.insert(a);
        f2.insert(b);
        CHECK(f1 == f2);
        CHECK(f1.size() == 1); // total order: single minimum survives
        CHECK(f1.elements()[0] == std::min({a, b, c}));
    }
}

TEST_CASE("pair-time antichain equals brute-force minimal set")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::uint64_t> dist(0, 6);
    for (int trial = 0; trial < 200; ++trial)
    {
        std::vector<PairTime> points;
        Antichain<PairTime> f;
        for (int i = 0; i < 12; ++i)
        {
            PairTime t{dist(rng), dist(rng)};
            points.push_back(t);
            f.insert(t);
        }
        // Brute force: p survives iff no other point is strictly below it.
        for (const PairTime &p : points)
        {
            bool minimal = true;
            for (const PairTime &q : points)
                if (!(q == p) && q.less_equal(p))
                {
                    // q dominates p unless p also dominates q (equal handled above)
                    if (!p.less_equal(q))
                        minimal = false;
                }
            const auto &elems = f.elements();
            const bool present = std::find(elems.begin(), elems.end(), p) != elems.end();
            if (present)
                CHECK(minimal);
            CHECK(f.in_advance(p)); // every inserted point is covered
        }
    }
}

TEST_CASE("dominates tracks frontier progress")
{
    auto early = Antichain<Time>::from({3});
    auto late = Antichain<Time>::from({7});
    CHECK(late.dominates(early));
    CHECK_FALSE(early.dominates(late));
    Antichain<Time> closed;
    CHECK(closed.dominates(late)); // empty (closed) dominates everything
}
