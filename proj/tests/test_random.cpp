#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "rvlab/parallel.hpp"
#include "rvlab/random.hpp"

using namespace rvlab;

TEST_CASE("philox matches the Random123 known-answer vectors") {
  const auto zero = philox4x32_10({0, 0, 0, 0}, {0, 0});
  CHECK(zero[0] == 0x6627e8d5u);
  CHECK(zero[1] == 0xe169c58du);
  CHECK(zero[2] == 0xbc57ac4cu);
  CHECK(zero[3] == 0x9b00dbd8u);
  const auto ones = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(ones[0] == 0x408f276du);
  CHECK(ones[1] == 0x41c83b0eu);
  CHECK(ones[2] == 0xa20bc7c6u);
  CHECK(ones[3] == 0x6d5451fdu);
  const auto pi = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(pi[0] == 0xd16cfe09u);
  CHECK(pi[1] == 0x94fdccebu);
  CHECK(pi[2] == 0x5001e420u);
  CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and split deterministically") {
  Stream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Stream c(43);
  CHECK(Stream(42).next_u64() != c.next_u64());

  const Stream root(7, 3);
  Stream s1 = root.split(5);
  Stream consumed(7, 3);
  for (int i = 0; i < 17; ++i) consumed.uniform();
  Stream s2 = consumed.split(5);
  CHECK(s1.id() == s2.id());
  CHECK(s1.next_u64() == s2.next_u64());
  CHECK(root.split(5).id() != root.split(6).id());
}

TEST_CASE("split ids do not collide over many children") {
  const Stream root(1);
  std::set<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < 10000; ++i) ids.insert(root.split(i).id());
  CHECK(ids.size() == 10000);
}

TEST_CASE("uniforms lie in (0, 1] with the right moments") {
  Stream s(9);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(sum2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.005));
  const double lohi = s.uniform(2.0, 3.0);
  CHECK(lohi >= 2.0);
  CHECK(lohi < 3.0);
}

TEST_CASE("normals have unit variance and indices stay in range") {
  Stream s(10);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) ++hits[s.index(7)];
  for (int h : hits) CHECK(h == doctest::Approx(10000).epsilon(0.05));
  CHECK(s.index(1) == 0);
}

TEST_CASE("fork advances the parent and yields a distinct stream") {
  Stream s(11);
  Stream f1 = s.fork();
  Stream f2 = s.fork();
  CHECK(f1.id() != f2.id());
  Stream t(11);
  CHECK(t.fork().next_u64() == f1.next_u64());
}

TEST_CASE("parallel_for results do not depend on the worker count") {
  auto run = [](unsigned threads) {
    set_thread_count(threads);
    const Stream root(5);
    std::vector<double> out(1000);
    parallel_for(out.size(), [&](std::size_t i) {
      Stream s = root.split(i);
      out[i] = s.uniform() + s.normal();
    });
    return out;
  };
  const auto one = run(1);
  const auto four = run(4);
  set_thread_count(0);
  CHECK(one == four);
}

TEST_CASE("parallel_for propagates worker exceptions") {
  set_thread_count(3);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  set_thread_count(0);
}
