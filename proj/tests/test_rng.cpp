#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "chainexit/parallel.hpp"
#include "chainexit/rng.hpp"

using namespace chainexit;

TEST_CASE("philox known answers")
{
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0})
          == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                               K{0xffffffff, 0xffffffff})
          == C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                               K{0xa4093822, 0x299f31d0})
          == C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal stream is a pure function of its coordinates")
{
    NormalStream a(42, 7), b(42, 7), other_path(42, 8), other_seed(43, 7);
    CHECK(a.pair(0, 10, 0) == b.pair(0, 10, 0));
    CHECK(a.pair(0, 10, 0) != a.pair(1, 10, 0));
    CHECK(a.pair(0, 10, 0) != a.pair(0, 11, 0));
    CHECK(a.pair(0, 10, 0) != a.pair(0, 10, 1));
    CHECK(a.pair(0, 10, 0) != other_path.pair(0, 10, 0));
    CHECK(a.pair(0, 10, 0) != other_seed.pair(0, 10, 0));
    std::vector<double> f(5);
    a.fill(2, 3, f);
    CHECK(f[2] == a.pair(2, 3, 1)[0]);
    CHECK(f[4] == a.pair(2, 3, 2)[0]);
}

TEST_CASE("normal draws have standard moments")
{
    NormalStream s(1, 0);
    double sum = 0, sq = 0, q4 = 0;
    const int n = 200000;
    for (int i = 0; i < n / 2; ++i)
    {
        for (double z : s.pair(0, static_cast<std::uint64_t>(i), 0))
        {
            sum += z;
            sq += z * z;
            q4 += z * z * z * z;
        }
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1) < 0.01);
    CHECK(std::abs(q4 / n - 3) < 0.06);
}

TEST_CASE("uniform mapping stays in (0, 1]")
{
    CHECK(NormalStream::to_open_unit(0, 0) > 0);
    CHECK(NormalStream::to_open_unit(0xffffffff, 0xffffffff) == 1.0);
    UniformSampler u(3);
    for (int i = 0; i < 1000; ++i)
    {
        double v = u();
        REQUIRE(v >= 0);
        REQUIRE(v < 1);
    }
}

TEST_CASE("parallel ranges cover every index once")
{
    for (std::size_t threads : {1u, 3u, 8u})
    {
        std::vector<int> hits(101, 0);
        parallel_ranges(hits.size(), threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i)
                ++hits[i];
        });
        for (int h : hits)
            CHECK(h == 1);
    }
    CHECK_THROWS(parallel_ranges(10, 4, [](std::size_t b, std::size_t) {
        if (b > 0)
            throw std::runtime_error("boom");
    }));
}
