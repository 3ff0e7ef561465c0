#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <set>

#include "probekit/common.hpp"
#include "test_support.hpp"

using namespace probekit;

TEST_CASE("derive_seed is a pure function with distinct streams") {
  CHECK(derive_seed(42, 1) == derive_seed(42, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(42, 1) != derive_seed(43, 1));
}

TEST_CASE("Rng draws are reproducible and in range") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(3);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const auto v = r.below(5);
    REQUIRE(v < 5);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  double s = 0, s2 = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / 20000) < 0.05);
  CHECK(std::abs(s2 / 20000 - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation and seed-determined") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  auto w = v;
  Rng a(11), b(11);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("parallel_for fills every slot and rethrows the lowest-index failure") {
  std::vector<int> out(1000, -1);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i % 97));
  std::atomic<int> visited{0};
  try {
    parallel_for(100, [&](std::size_t i) {
      ++visited;
      if (i == 30 || i == 70) throw std::runtime_error("fail " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "fail 30");
  }
  CHECK(visited == 100);
}

TEST_CASE("worker count follows the environment") {
  ::setenv("PROBEKIT_WORKERS", "3", 1);
  CHECK(worker_count() == 3);
  ::unsetenv("PROBEKIT_WORKERS");
  CHECK(worker_count() >= 1);
}

TEST_CASE("sha256 matches published test vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  probekit::testing::TempDir dir("sha");
  write_file(dir.path() / "f.txt", "abc");
  CHECK(sha256_file(dir.path() / "f.txt") == sha256_hex("abc"));
  CHECK(read_file(dir.path() / "f.txt") == "abc");
  CHECK_THROWS_AS(read_file(dir.path() / "missing"), DataError);
}

TEST_CASE("string helpers") {
  CHECK(to_lower_ascii("AbC-Ü") == "abc-Ü");
  CHECK(trim("  x y \t\n") == "x y");
  CHECK(split("a|b||c", '|') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(is_valid_utf8("caf\xC3\xA9"));
  CHECK_FALSE(is_valid_utf8("caf\xC3"));
  CHECK_FALSE(is_valid_utf8("\xC0\xAF"));  // overlong
  CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));  // surrogate
}

TEST_CASE("mean_std uses the population divisor") {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto [m, s] = mean_std(xs);
  CHECK(m == doctest::Approx(2.5));
  CHECK(s == doctest::Approx(std::sqrt(1.25)));
}
