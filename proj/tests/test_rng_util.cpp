#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "wuglab/rng.hpp"
#include "wuglab/util.hpp"

using namespace wuglab;

TEST_CASE("rng determinism and state round-trip") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.u64() == b.u64());

    Rng c(7);
    c.normal(0, 1); // leave a cached spare behind
    std::string state = c.save_state();
    Rng d(0);
    d.load_state(state);
    for (int i = 0; i < 50; ++i) {
        CHECK(c.normal(0, 1) == d.normal(0, 1));
        CHECK(c.u64() == d.u64());
    }
}

TEST_CASE("rng normal moments") {
    Rng rng(123);
    const int n = 200000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal(1.5, 2.0);
        sum += x;
        sum2 += x * x;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    CHECK(mean == doctest::Approx(1.5).epsilon(0.02));
    CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("rng below is bounded and roughly uniform") {
    Rng rng(5);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 100000; ++i) {
        uint64_t v = rng.below(10);
        REQUIRE(v < 10);
        counts[static_cast<size_t>(v)]++;
    }
    for (int c : counts) CHECK(c > 9000);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
    std::vector<int> v(100);
    for (int i = 0; i < 100; ++i) v[static_cast<size_t>(i)] = i;
    std::vector<int> w = v;
    Rng a(9), b(9);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::sort(v.begin(), v.end());
    for (int i = 0; i < 100; ++i) CHECK(v[static_cast<size_t>(i)] == i);
}

TEST_CASE("fnv1a64 distinguishes newline layouts") {
    CHECK(fnv1a64(std::vector<std::string>{"ab", "c"}) !=
          fnv1a64(std::vector<std::string>{"a", "bc"}));
    CHECK(fnv1a64("abc") == fnv1a64("abc"));
}

TEST_CASE("atomic line io round-trips") {
    auto dir = std::filesystem::temp_directory_path() / "wuglab_util_test";
    ensure_dir(dir);
    std::vector<std::string> lines = {"the cat", "", "a b c"};
    write_lines_atomic(dir / "x.txt", lines);
    CHECK(read_lines(dir / "x.txt") == lines);
    std::filesystem::remove_all(dir);
}

TEST_CASE("split and join") {
    CHECK(split_ws("  a  b\tc ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(join({"a", "b"}) == "a b");
    CHECK(lowercase("The CAT.") == "the cat.");
}
