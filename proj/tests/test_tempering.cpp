#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ecc3/metrics.hpp"
#include "ecc3/rng.hpp"
#include "ecc3/synth.hpp"
#include "ecc3/tempering.hpp"

using namespace ecc3;

namespace {

SweepPoint pt(double h, double eff) {
  SweepPoint p;
  p.mean_entropy = h;
  p.efficiency = eff;
  return p;
}

std::pair<Dataset, Dataset> benchmark_split(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n = 3000;
  cfg.num_classes = 10;
  cfg.seed = seed;
  cfg.dirichlet_concentration = 0.3;
  cfg.base_distortion = {DistortionKind::sharpen, 0.25};
  Dataset data = generate(cfg);
  DatasetSplits splits = split_dataset(data, SplitRatios{1, 1, 4, 4}, seed);
  return {std::move(splits.cal), std::move(splits.test)};
}

}  // namespace

TEST_CASE("default grid shape") {
  const std::vector<double> grid = default_temperature_grid();
  REQUIRE(grid.size() == 40);
  CHECK(grid.front() == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(grid.back() == doctest::Approx(20.0).epsilon(1e-12));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i] > grid[i - 1]);
    // log spacing: constant ratio
    CHECK(grid[i] / grid[i - 1] ==
          doctest::Approx(grid[1] / grid[0]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(log_spaced_grid(0.0, 1.0, 10), Error);
  CHECK_THROWS_AS(log_spaced_grid(2.0, 1.0, 10), Error);
}

TEST_CASE("temper_dataset: T = 1 is the identity, blur raises entropy") {
  const auto [cal, test] = benchmark_split(4);
  const Dataset same = temper_dataset(test, 1.0);
  for (std::size_t i = 0; i < test.size(); ++i)
    CHECK(same.sample(i).probs.values() == test.sample(i).probs.values());

  const Dataset hot = temper_dataset(test, 4.0);
  double h_before = 0.0, h_after = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    h_before += entropy(test.sample(i).probs);
    h_after += entropy(hot.sample(i).probs);
  }
  CHECK(h_after > h_before);
  CHECK_THROWS_AS(temper_dataset(test, 0.0), Error);
}

TEST_CASE("temp_sweep: T = 1 reproduces the untempered pipeline exactly") {
  const auto [cal, test] = benchmark_split(7);
  const std::vector<double> grid = {1.0};
  const std::vector<SweepPoint> points =
      temp_sweep(cal, test, 0.1, grid, ScoreConfig{});
  REQUIRE(points.size() == 1);

  const CpResult cp = run_cp(cal, test, 0.1, ScoreConfig{});
  std::vector<std::size_t> labels(test.size());
  double h = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    labels[i] = test.sample(i).label;
    h += entropy(test.sample(i).probs);
  }
  CHECK(points[0].efficiency == efficiency(cp.sets));
  CHECK(points[0].coverage == coverage(cp.sets, labels));
  CHECK(points[0].mean_entropy == h / static_cast<double>(test.size()));
}

TEST_CASE("temp_sweep: entropy strictly increasing, argmax invariant") {
  const auto [cal, test] = benchmark_split(11);
  const std::vector<double> grid = log_spaced_grid(0.05, 20.0, 25);
  const std::vector<SweepPoint> points =
      temp_sweep(cal, test, 0.1, grid, ScoreConfig{});
  REQUIRE(points.size() == grid.size());
  for (std::size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].mean_entropy > points[i - 1].mean_entropy);
    CHECK(points[i].temperature == grid[i]);
  }

  // per-sample argmax across the grid
  std::vector<std::size_t> base_argmax(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& p = test.sample(i).probs;
    std::size_t amax = 0;
    for (std::size_t k = 1; k < p.num_classes(); ++k)
      if (p[k] > p[amax]) amax = k;
    base_argmax[i] = amax;
  }
  for (double t : {0.05, 0.8, 5.0, 20.0}) {
    const Dataset tempered = temper_dataset(test, t);
    for (std::size_t i = 0; i < tempered.size(); ++i) {
      const auto& p = tempered.sample(i).probs;
      std::size_t amax = 0;
      for (std::size_t k = 1; k < p.num_classes(); ++k)
        if (p[k] > p[amax]) amax = k;
      CHECK(amax == base_argmax[i]);
    }
  }
}

TEST_CASE("temp_sweep: coverage stays near 1 - alpha at every T") {
  const auto [cal, test] = benchmark_split(13);
  const std::vector<double> grid = log_spaced_grid(0.05, 20.0, 15);
  const std::vector<SweepPoint> points =
      temp_sweep(cal, test, 0.1, grid, ScoreConfig{});
  // n_cal = n_test = 1200; five-sigma band on the coverage estimate. The
  // upper side compares against the realized calibration level, because the
  // log-lift clamp ties scores at extreme temperatures and the quantile then
  // attains more than its nominal level.
  const double sigma = std::sqrt(0.9 * 0.1 / 1200.0) * std::sqrt(2.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const SweepPoint& p = points[i];
    CHECK(p.coverage >= 0.9 - 5.0 * sigma);

    const Dataset cal_t = temper_dataset(cal, grid[i]);
    std::vector<double> scores;
    for (const auto& s : cal_t.samples())
      scores.push_back(score(s.probs, s.label, ScoreConfig{}));
    const double eta = calibrate(scores, 0.1).eta_hat;
    double attained = 0.0;
    for (double s : scores)
      if (s <= eta) attained += 1.0;
    attained /= static_cast<double>(scores.size());
    CHECK(p.coverage <= attained + 5.0 * sigma);
  }
  CHECK_THROWS_AS(
      temp_sweep(cal, test, 0.1, std::vector<double>{}, ScoreConfig{}), Error);
  CHECK_THROWS_AS(
      temp_sweep(cal, test, 0.1, std::vector<double>{-1.0}, ScoreConfig{}),
      Error);
}

TEST_CASE("pareto_filter hand cases") {
  const std::vector<SweepPoint> points = {pt(1.0, 5.0), pt(2.0, 4.0),
                                          pt(2.0, 6.0)};
  const std::vector<SweepPoint> frontier = pareto_filter(points);
  REQUIRE(frontier.size() == 2);
  CHECK(frontier[0].mean_entropy == 1.0);
  CHECK(frontier[0].efficiency == 5.0);
  CHECK(frontier[1].mean_entropy == 2.0);
  CHECK(frontier[1].efficiency == 4.0);

  const std::vector<SweepPoint> single = {pt(1.5, 3.0)};
  CHECK(pareto_filter(single).size() == 1);

  const std::vector<SweepPoint> same(4, pt(1.0, 1.0));
  CHECK(pareto_filter(same).size() == 1);
  CHECK_THROWS_AS(pareto_filter(std::vector<SweepPoint>{}), Error);
}

TEST_CASE("pareto_filter output is non-dominated subset of input") {
  Rng rng(19);
  std::vector<SweepPoint> points;
  for (int i = 0; i < 60; ++i)
    points.push_back(pt(3.0 * rng.next_unit(), 10.0 * rng.next_unit()));
  const std::vector<SweepPoint> frontier = pareto_filter(points);
  CHECK(!frontier.empty());
  for (const auto& f : frontier) {
    bool found = false;
    for (const auto& p : points)
      if (p.mean_entropy == f.mean_entropy && p.efficiency == f.efficiency)
        found = true;
    CHECK(found);
    for (const auto& other : frontier) {
      const bool dominates = other.mean_entropy <= f.mean_entropy &&
                             other.efficiency <= f.efficiency &&
                             (other.mean_entropy < f.mean_entropy ||
                              other.efficiency < f.efficiency);
      CHECK_FALSE(dominates);
    }
  }
}

TEST_CASE("select_by_entropy") {
  const std::vector<SweepPoint> points = {pt(1.0, 5.0), pt(2.0, 4.0),
                                          pt(2.0, 6.0)};
  CHECK_FALSE(select_by_entropy(points, 0.5).has_value());
  const auto all = select_by_entropy(points, 10.0);
  REQUIRE(all.has_value());
  CHECK(all->efficiency == 4.0);
  const auto below = select_by_entropy(points, 1.5);
  REQUIRE(below.has_value());
  CHECK(below->mean_entropy == 1.0);
  CHECK(below->efficiency == 5.0);
  CHECK_THROWS_AS(select_by_entropy(points, 0.0), Error);
}
