#include <doctest.h>

#include <cmath>
#include <random>

#include "bathy/error.hpp"
#include "bathy/svr.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bathy;
using bathy::test::scratch;
using bathy::test::write_text;

namespace {

SampleSet from_pairs(const std::vector<oracle::Pair>& d) {
  SampleSet s;
  for (const auto& p : d) s.samples.push_back({0.0, 0.0, p.z0, p.z});
  s.provenance.input = s.provenance.retained = s.size();
  return s;
}

std::vector<oracle::Pair> random_pairs(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> z0(-10.0, -0.5);
  std::uniform_real_distribution<double> slope(0.8, 1.6);
  std::uniform_real_distribution<double> bias(-0.5, 0.5);
  std::normal_distribution<double> noise(0.0, 0.2);
  std::bernoulli_distribution outlier(0.1);
  const double w = slope(rng);
  const double b = bias(rng);
  std::vector<oracle::Pair> d;
  for (int i = 0; i < n; ++i) {
    const double x = z0(rng);
    double y = w * x + b + noise(rng);
    if (outlier(rng)) y += 3.0 * noise(rng) / 0.2;
    d.push_back({x, y});
  }
  return d;
}

}  // namespace

TEST_CASE("hyperparameter validation") {
  CHECK_NOTHROW(SvrHyperparams{}.validate());
  CHECK_THROWS_AS((SvrHyperparams{0.0}).validate(), ConfigError);
  CHECK_THROWS_AS((SvrHyperparams{1.0, -0.1}).validate(), ConfigError);
  CHECK_THROWS_AS((SvrHyperparams{1.0, 0.0, 0.0}).validate(), ConfigError);
  CHECK_THROWS_AS((SvrHyperparams{1.0, 0.0, 1e-9, 0}).validate(), ConfigError);
  const auto s = from_pairs({{-1, -1.3}, {-2, -2.6}});
  CHECK_THROWS_AS(fit_svr(s, SvrHyperparams{-1.0}), ConfigError);
}

TEST_CASE("fit_svr recovers a line the samples lie on") {
  std::vector<oracle::Pair> d;
  for (int i = 0; i < 20; ++i) {
    const double z0 = -10.0 + 9.0 * i / 19.0;
    d.push_back({z0, 1.34 * z0});
  }
  const auto m = fit_svr(from_pairs(d), {1000.0, 0.01});
  CHECK(m.w >= 1.335);
  CHECK(m.w <= 1.345);
  for (const auto& p : d) CHECK(std::abs(p.z - (m.w * p.z0 + m.b)) <= 0.01 + 1e-9);
  // The flattest zero-slack line: residuals span 9*delta across z0 in
  // [-10, -1], so delta = 0.02 / 9 and the tube centre sits at -5.5 * delta.
  const double delta = 0.02 / 9.0;
  CHECK(m.w == doctest::Approx(1.34 - delta).epsilon(1e-8));
  CHECK(m.b == doctest::Approx(-5.5 * delta).epsilon(1e-6));
  CHECK(m.summary.converged);
  CHECK(m.summary.n_samples == 20);
  CHECK(m.kind == ModelKind::kSvr);
  CHECK(m.summary.warnings.empty());

  std::vector<oracle::Pair> ident;
  for (int i = 1; i <= 10; ++i) ident.push_back({-double(i), -double(i)});
  const auto id = fit_svr(from_pairs(ident), {1000.0, 0.0});
  CHECK(id.w == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(id.b == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("fit_svr rejects degenerate designs") {
  CHECK_THROWS_AS(fit_svr(from_pairs({{-1, -1.3}})), DegenerateDesign);
  CHECK_THROWS_AS(fit_svr(from_pairs({{-1, -1.3}, {-1, -1.4}, {-1, -1.2}})), DegenerateDesign);
  CHECK_THROWS_AS(fit_least_squares(from_pairs({{-2, -1}, {-2, -3}})), DegenerateDesign);
  CHECK_THROWS_AS(fit_svr(SampleSet{}), DegenerateDesign);
}

TEST_CASE("fit_svr with a wide tube picks the flattest covering line") {
  std::mt19937_64 rng(3);
  auto d = random_pairs(rng, 20);
  const double eps = 20.0;  // far wider than the data's spread
  const auto m = fit_svr(from_pairs(d), {1.0, eps});
  const auto g = oracle::grid_min(d, 0.0, 0.0, 1.0, eps, 201, 0.0);
  CHECK(std::abs(m.w) <= 1e-6);
  CHECK(oracle::hinge_objective(d, m.w, m.b, 1.0, eps) <= g.best + 1e-9);

  // A tube that covers the data only with a tilted line.
  std::vector<oracle::Pair> steep;
  for (int i = 0; i < 20; ++i) steep.push_back({-1.0 - i * 0.5, -1.3 - i * 0.65});
  const double e2 = 3.0;
  const auto s = fit_svr(from_pairs(steep), {1e4, e2});
  for (const auto& p : steep) CHECK(std::abs(p.z - (s.w * p.z0 + s.b)) <= e2 + 1e-6);
  // Flatter than the data line because the tube absorbs most of the slope.
  CHECK(s.w < 1.3);
  CHECK(s.w > 0.0);
  const auto gs = oracle::grid_min(steep, s.w, s.b, 1e4, e2);
  CHECK(oracle::hinge_objective(steep, s.w, s.b, 1e4, e2) <= gs.best * (1 + 1e-6));
}

TEST_CASE("fit_svr property: no grid point around the solution does better") {
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<int> size(2, 30);
  std::uniform_real_distribution<double> logc(-1.0, 3.0);
  std::uniform_real_distribution<double> eps(0.0, 0.3);
  int failures = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = random_pairs(rng, size(rng));
    const double c = std::pow(10.0, logc(rng));
    const double e = trial % 3 == 0 ? 0.0 : eps(rng);
    SampleSet s;
    try {
      s = from_pairs(d);
      const auto m = fit_svr(s, {c, e});
      const double mine = oracle::hinge_objective(d, m.w, m.b, c, e);
      CHECK(mine == doctest::Approx(m.summary.objective).epsilon(1e-12));
      const auto g = oracle::grid_min(d, m.w, m.b, c, e, 61);
      if (mine > g.best + 1e-6 * std::max(1.0, std::abs(g.best))) ++failures;
    } catch (const DegenerateDesign&) {
      continue;
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("fit_svr with eps=0 and large c beats least squares under the hinge loss") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_pairs(rng, 25);
    const auto s = from_pairs(d);
    const auto m = fit_svr(s, {1e6, 0.0});
    const auto l = fit_least_squares(s);
    CHECK(oracle::hinge_objective(d, m.w, m.b, 1e6, 0.0) <=
          oracle::hinge_objective(d, l.w, l.b, 1e6, 0.0) * (1 + 1e-12));
  }
}

TEST_CASE("fit_svr is invariant to duplicating samples with c halved") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto d = random_pairs(rng, 15);
    const auto m1 = fit_svr(from_pairs(d), {2.0, 0.05});
    auto twice = d;
    twice.insert(twice.end(), d.begin(), d.end());
    const auto m2 = fit_svr(from_pairs(twice), {1.0, 0.05});
    // The minimiser may be a flat segment; compare objectives, then (w, b).
    CHECK(m2.summary.objective == doctest::Approx(m1.summary.objective).epsilon(1e-9));
    CHECK(m2.w == doctest::Approx(m1.w).epsilon(1e-6));
  }
}

TEST_CASE("fit_svr is deterministic and reports non-convergence") {
  std::mt19937_64 rng(21);
  const auto d = random_pairs(rng, 30);
  const auto a = fit_svr(from_pairs(d));
  const auto b = fit_svr(from_pairs(d));
  CHECK(std::memcmp(&a.w, &b.w, sizeof(double)) == 0);
  CHECK(std::memcmp(&a.b, &b.b, sizeof(double)) == 0);
  CHECK(a.summary.iterations == b.summary.iterations);

  SvrHyperparams hp;
  hp.max_iter = 1;
  const auto m = fit_svr(from_pairs(d), hp);
  CHECK_FALSE(m.summary.converged);
  CHECK(m.summary.iterations == 1);
  CHECK(std::isfinite(m.w));
  CHECK_FALSE(m.summary.warnings.empty());
}

TEST_CASE("standardized training reports coefficients on raw depth") {
  std::mt19937_64 rng(4);
  const auto d = random_pairs(rng, 30);
  SvrHyperparams hp{5.0, 0.02};
  const auto raw = fit_svr(from_pairs(d), hp);
  hp.standardize = true;
  const auto st = fit_svr(from_pairs(d), hp);
  CHECK(st.x_scale != 1.0);
  CHECK(st.hyperparams.standardize);
  const double z0 = -7.5;
  CHECK(predict(st, z0) == doctest::Approx(st.w * z0 + st.b).epsilon(1e-14));
  // Different regularisation geometry, but both fit the same data closely.
  CHECK(std::abs(st.w - raw.w) < 0.2);
  const auto g = oracle::grid_min(d, st.w, st.b, hp.c, hp.epsilon, 41, 0.5);
  CHECK(g.best >= 0.0);
}

TEST_CASE("fit_least_squares examples and the normal-equation oracle") {
  const auto two = fit_least_squares(from_pairs({{-1, -1.34}, {-2, -2.68}}));
  CHECK(two.w == doctest::Approx(1.34).epsilon(1e-15));
  CHECK(std::abs(two.b) <= 1e-15);
  CHECK(two.kind == ModelKind::kLeastSquares);

  const auto flat = fit_least_squares(from_pairs({{-1, -3}, {-2, -3}, {-5, -3}}));
  CHECK(flat.w == 0.0);
  CHECK(flat.b == -3.0);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> z0(-12.0, -0.5);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<oracle::Pair> d;
  for (int i = 0; i < 100; ++i) {
    const double x = z0(rng);
    d.push_back({x, 1.3 * x - 0.05 + noise(rng)});
  }
  const auto m = fit_least_squares(from_pairs(d));
  const auto [w, b] = oracle::normal_equation(d);
  CHECK(std::abs(m.w - w) <= 1e-9);
  CHECK(std::abs(m.b - b) <= 1e-9);
}

TEST_CASE("predict and correct_cloud") {
  SvrModel m;
  m.w = 1.34;
  CHECK(predict(m, -10.0) == doctest::Approx(-13.4).epsilon(1e-15));
  CHECK_THROWS_AS(predict(m, std::nan("")), InputError);
  CHECK_THROWS_AS(predict(m, INFINITY), InputError);

  SvrModel id;
  for (double z : {-0.3, -7.25, -14.8}) CHECK(predict(id, z) == z);

  const auto c = correct_cloud(m, PointCloud({{0, 0, -2.0}, {1, 2, 3.2}, {4, 5, 0.0}}));
  REQUIRE(c.size() == 3);
  CHECK(c[0].z == doctest::Approx(-2.68).epsilon(1e-15));
  CHECK(c[1] == Point3{1, 2, 3.2});
  CHECK(c[2] == Point3{4, 5, 0.0});

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-20.0, 5.0);
  PointCloud big;
  for (int i = 0; i < 500; ++i) big.points.push_back({u(rng), u(rng), u(rng)});
  const auto same = correct_cloud(id, big);
  CHECK(same.points == big.points);
  const auto moved = correct_cloud(m, big);
  REQUIRE(moved.size() == big.size());
  for (std::size_t i = 0; i < big.size(); ++i) {
    CHECK(moved[i].x == big[i].x);
    CHECK(moved[i].y == big[i].y);
  }
}

TEST_CASE("predict property: affine") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-20.0, 0.0);
  std::uniform_real_distribution<double> wd(0.5, 2.0);
  for (int i = 0; i < 1000; ++i) {
    SvrModel m;
    m.w = wd(rng);
    m.b = u(rng) / 20.0;
    const double a = u(rng);
    const double b = u(rng);
    const double lhs = predict(m, a) + predict(m, b) - predict(m, 0.0);
    const double rhs = predict(m, a + b);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("model files round-trip and reject bad input") {
  const auto dir = scratch("svr_io");
  SvrModel m;
  m.w = 1.34;
  m.b = 0.02;
  m.hyperparams = {10.0, 0.05, 1e-10, 500, true};
  m.x_mean = -5.123456789012345;
  m.x_scale = 2.718281828459045;
  m.summary = {123, 4.56789, 77, true, {}};
  save_model(m, dir / "m.txt");
  const auto back = load_model(dir / "m.txt");
  CHECK(back.w == m.w);
  CHECK(back.b == m.b);
  CHECK(back.kind == m.kind);
  CHECK(back.hyperparams.c == 10.0);
  CHECK(back.hyperparams.epsilon == 0.05);
  CHECK(back.hyperparams.tol == 1e-10);
  CHECK(back.hyperparams.max_iter == 500);
  CHECK(back.hyperparams.standardize);
  CHECK(back.x_mean == m.x_mean);
  CHECK(back.x_scale == m.x_scale);
  CHECK(back.summary.n_samples == 123);
  CHECK(back.summary.objective == 4.56789);
  CHECK(back.summary.iterations == 77);
  CHECK(back.summary.converged);

  const auto text = bathy::test::read_text(dir / "m.txt");
  write_text(dir / "trunc.txt", text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_model(dir / "trunc.txt"), InputError);
  write_text(dir / "v9.txt", "version=9\n" + text.substr(text.find('\n') + 1));
  CHECK_THROWS_AS(load_model(dir / "v9.txt"), VersionError);
  write_text(dir / "junk.txt", text + "colour=blue\n");
  CHECK_THROWS_AS(load_model(dir / "junk.txt"), InputError);
  CHECK_THROWS_AS(load_model(dir / "absent.txt"), InputError);
}
