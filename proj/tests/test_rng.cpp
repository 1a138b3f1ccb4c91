#include <catch2/catch_amalgamated.hpp>

#include "setstat/rng.hpp"

using setstat::CounterRng;

TEST_CASE("counter generator matches the reference splitmix64 stream") {
    CounterRng rng(0);
    CHECK(rng.next_u64() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next_u64() == 0x06C45D188009454FULL);
    CHECK(rng.next_u64() == 0xF88BB8A8724C81ECULL);

    CounterRng other(1234567);
    CHECK(other.next_u64() == 6457827717110365317ULL);
    CHECK(other.next_u64() == 3203168211198807973ULL);
}

TEST_CASE("identical seeds replay identical streams") {
    CounterRng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform draws stay in range and fill it") {
    CounterRng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("normal draws have roughly standard moments") {
    CounterRng rng(11);
    const int n = 20000;
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        mean += z / n;
        var += z * z / n;
    }
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("forked streams are reproducible and distinct") {
    CounterRng root(9);
    CounterRng a = root.fork(1);
    CounterRng b = root.fork(2);
    CounterRng a2 = CounterRng(9).fork(1);
    CHECK(a.next_u64() == a2.next_u64());
    CHECK(a.next_u64() != b.next_u64());
}
