#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "bathy/error.hpp"
#include "bathy/pairing.hpp"
#include "test_util.hpp"

using namespace bathy;

namespace {

SampleSet make_set(std::size_t n) {
  SampleSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = 1.0 + static_cast<double>(i % 97) * 0.1;
    s.samples.push_back({static_cast<double>(i), 0.0, -d / 1.34, -d});
  }
  s.provenance.input = s.provenance.retained = n;
  return s;
}

bool same_sample(const DepthSample& a, const DepthSample& b) { return a == b; }

}  // namespace

TEST_CASE("reduce_to_reference takes z0 from the nearest image point within radius") {
  const PointCloud ref({{0, 0, -2.0}});
  const auto s = reduce_to_reference(PointCloud({{0.1, 0, -1.5}}), ref, 0.5);
  REQUIRE(s.size() == 1);
  CHECK(s.samples[0].z0 == -1.5);
  CHECK(s.samples[0].z == -2.0);
  CHECK(s.samples[0].x == 0.0);
  CHECK(s.provenance.conserved());

  const auto miss = reduce_to_reference(PointCloud({{0.9, 0, -1.5}}), ref, 0.5);
  CHECK(miss.empty());
  CHECK(miss.provenance.removed_unmatched == 1);
  CHECK(miss.provenance.input == 1);
  CHECK(miss.provenance.conserved());
}

TEST_CASE("reduce_to_reference argument errors") {
  const PointCloud one({{0, 0, -1}});
  CHECK_THROWS_AS(reduce_to_reference(PointCloud{}, one, 1.0), InputError);
  CHECK_THROWS_AS(reduce_to_reference(one, PointCloud{}, 1.0), InputError);
  CHECK_THROWS_AS(reduce_to_reference(one, one, 0.0), ConfigError);
  CHECK_THROWS_AS(reduce_to_reference(one, one, -1.0), ConfigError);
}

TEST_CASE("reduce_to_reference on dense clouds matches a brute-force nearest neighbour") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::uniform_real_distribution<double> z(-10.0, -1.0);
  PointCloud image;
  PointCloud ref;
  for (int i = 0; i < 10000; ++i) image.points.push_back({u(rng), u(rng), z(rng)});
  for (int i = 0; i < 1000; ++i) ref.points.push_back({u(rng), u(rng), z(rng)});
  const double radius = 0.6;
  const auto s = reduce_to_reference(image, ref, radius);
  CHECK(s.size() <= ref.size());
  CHECK(s.provenance.conserved());

  std::size_t k = 0;
  std::size_t unmatched = 0;
  for (const auto& r : ref.points) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < image.size(); ++i) {
      const double d2 = (image[i].x - r.x) * (image[i].x - r.x) + (image[i].y - r.y) * (image[i].y - r.y);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    if (best_d2 > radius * radius) {
      ++unmatched;
      continue;
    }
    REQUIRE(k < s.size());
    CHECK(s.samples[k].z0 == image[best].z);
    CHECK(s.samples[k].z == r.z);
    ++k;
  }
  CHECK(k == s.size());
  CHECK(unmatched == s.provenance.removed_unmatched);
}

TEST_CASE("filter_samples applies both outlier rules") {
  SampleSet raw;
  raw.samples = {{0, 0, -2.5, -2.0},   // apparent deeper than reference: rule A
                 {0, 0, 0.1, -1.0},    // above the surface: rule B
                 {0, 0, -1.5, -2.0},   // valid
                 {0, 0, -2.0, -2.0},   // equal depths: rule A
                 {0, 0, 0.0, -1.0}};   // exactly at the surface: rule B
  raw.provenance.input = raw.provenance.retained = raw.size();
  const auto f = filter_samples(raw);
  REQUIRE(f.size() == 1);
  CHECK(f.samples[0] == DepthSample{0, 0, -1.5, -2.0});
  CHECK(f.provenance.removed_rule_a == 2);
  CHECK(f.provenance.removed_rule_b == 2);
  CHECK(f.provenance.conserved());
}

TEST_CASE("filter_samples literal rule direction is switchable") {
  SampleSet raw;
  raw.samples = {{0, 0, -2.5, -2.0}, {0, 0, -1.5, -2.0}};
  raw.provenance.input = raw.provenance.retained = 2;
  const auto f = filter_samples(raw, {RuleADirection::kLiteral});
  REQUIRE(f.size() == 1);
  CHECK(f.samples[0].z0 == -2.5);
  CHECK(f.provenance.removed_rule_a == 1);
}

TEST_CASE("filter_samples property: survivors satisfy z < z0 < 0 and counts are conserved") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-12.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    SampleSet raw;
    for (int i = 0; i < 500; ++i) raw.samples.push_back({0, 0, u(rng), u(rng)});
    raw.provenance.input = raw.provenance.retained = raw.size();
    const auto f = filter_samples(raw);
    CHECK(f.provenance.conserved());
    CHECK(std::all_of(f.samples.begin(), f.samples.end(),
                      [](const DepthSample& s) { return s.z < s.z0 && s.z0 < 0.0; }));
    std::size_t expect_a = 0;
    std::size_t expect_b = 0;
    for (const auto& s : raw.samples) {
      if (s.z0 <= s.z) ++expect_a;
      else if (s.z0 >= 0.0) ++expect_b;
    }
    CHECK(f.provenance.removed_rule_a == expect_a);
    CHECK(f.provenance.removed_rule_b == expect_b);
  }
  SampleSet none;
  const auto e = filter_samples(none);
  CHECK(e.empty());
  CHECK(e.provenance.steps.back().find("EMPTY") != std::string::npos);
}

TEST_CASE("split_samples sizes follow round(fraction * n)") {
  const auto set = make_set(100);
  const auto [train, test] = split_samples(set, 0.30, 1);
  CHECK(train.size() == 30);
  CHECK(test.size() == 70);
  const auto [all, rest] = split_samples(set, 1.0, 1);
  CHECK(all.size() == 100);
  CHECK(rest.empty());
  const auto [five, other] = split_samples(make_set(1000), 0.05, 3);
  CHECK(five.size() == 50);
  CHECK(other.size() == 950);
  CHECK_THROWS_AS(split_samples(SampleSet{}, 0.3, 1), InputError);
  CHECK_THROWS_AS(split_samples(set, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_samples(set, 1.5, 1), ConfigError);
}

TEST_CASE("split_samples property: deterministic, disjoint and covering") {
  const auto set = make_set(257);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [a1, b1] = split_samples(set, 0.37, seed);
    const auto [a2, b2] = split_samples(set, 0.37, seed);
    CHECK(std::equal(a1.samples.begin(), a1.samples.end(), a2.samples.begin(), a2.samples.end(),
                     same_sample));
    CHECK(std::equal(b1.samples.begin(), b1.samples.end(), b2.samples.begin(), b2.samples.end(),
                     same_sample));
    std::multiset<double> xs;
    for (const auto& s : a1.samples) xs.insert(s.x);
    for (const auto& s : b1.samples) xs.insert(s.x);
    CHECK(xs.size() == set.size());
    CHECK(std::set<double>(xs.begin(), xs.end()).size() == set.size());
    CHECK(a1.provenance.conserved());
    CHECK(b1.provenance.conserved());
  }
  const auto [x, y] = split_samples(set, 0.5, 1);
  const auto [p, q] = split_samples(set, 0.5, 2);
  CHECK_FALSE(std::equal(x.samples.begin(), x.samples.end(), p.samples.begin(), p.samples.end(),
                         same_sample));
}

TEST_CASE("merge_sets takes all of a plus a seeded fraction of b") {
  const auto a = make_set(5000);
  const auto b = make_set(600000);
  const auto m = merge_sets(a, b, 0.01, 9);
  CHECK(m.size() == 11000);
  CHECK(std::equal(a.samples.begin(), a.samples.end(), m.samples.begin(), same_sample));
  CHECK(m.provenance.conserved());
  CHECK(m.provenance.steps.back().find("taken_from_b=6000") != std::string::npos);

  const auto small_b = make_set(40);
  CHECK(merge_sets(a, small_b, 1.0, 1).size() == 5040);
  const auto m1 = merge_sets(a, small_b, 0.5, 4);
  const auto m2 = merge_sets(a, small_b, 0.5, 4);
  CHECK(std::equal(m1.samples.begin(), m1.samples.end(), m2.samples.begin(), m2.samples.end(),
                   same_sample));
  CHECK_THROWS_AS(merge_sets(SampleSet{}, small_b, 0.5, 1), InputError);
  CHECK_THROWS_AS(merge_sets(a, small_b, 0.0, 1), ConfigError);
}

TEST_CASE("limit_depth keeps samples no deeper than the limit") {
  const auto set = make_set(200);
  const auto s = limit_depth(set, 5.57);
  CHECK_FALSE(s.empty());
  CHECK(std::all_of(s.samples.begin(), s.samples.end(),
                    [](const DepthSample& d) { return -d.z <= 5.57; }));
  CHECK(s.provenance.conserved());
}

TEST_CASE("sample files round-trip with provenance") {
  const auto dir = bathy::test::scratch("samples_io");
  SampleSet raw;
  raw.samples = {{1.5, 2.25, -1.5, -2.0}, {3, 4, 0.5, -1}, {0.1, 0.2, -0.75, -1.0000001}};
  raw.provenance.input = raw.provenance.retained = 3;
  raw.provenance.sources = {"image", "lidar"};
  const auto f = filter_samples(raw);
  write_samples(f, dir / "s.csv");
  CHECK(bathy::test::read_text(dir / "s.csv").rfind("x,y,z0,z\n", 0) == 0);
  const auto back = read_samples(dir / "s.csv");
  CHECK(std::equal(f.samples.begin(), f.samples.end(), back.samples.begin(), back.samples.end(),
                   same_sample));
  CHECK(back.provenance.removed_rule_b == 1);
  CHECK(back.provenance.sources == std::vector<std::string>{"image", "lidar"});
  CHECK(back.provenance.conserved());

  bathy::test::write_text(dir / "bad.csv", "x,y,z0,z\n1,2,3\n");
  CHECK_THROWS_AS(read_samples(dir / "bad.csv"), InputError);
}
