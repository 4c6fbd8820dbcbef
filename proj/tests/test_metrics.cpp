#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ecc3/metrics.hpp"
#include "ecc3/rng.hpp"
#include "ecc3/synth.hpp"

using namespace ecc3;

namespace {

PredictionSet set_of(std::vector<std::size_t> members) {
  PredictionSet s;
  std::sort(members.begin(), members.end());
  s.members = std::move(members);
  return s;
}

PredictionSet full_set(std::size_t k) {
  std::vector<std::size_t> m(k);
  for (std::size_t i = 0; i < k; ++i) m[i] = i;
  return set_of(std::move(m));
}

// independent slab scan: every [lo, hi] index window over sorted projections
double brute_wsc_for_direction(const std::vector<double>& projection,
                               const std::vector<char>& covered,
                               double delta) {
  const std::size_t n = projection.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return projection[a] < projection[b];
  });
  const auto min_count = static_cast<std::size_t>(
      std::ceil(delta * static_cast<double>(n)));
  double worst = 1.0;
  for (std::size_t lo = 0; lo < n; ++lo) {
    std::size_t hits = 0;
    for (std::size_t hi = lo; hi < n; ++hi) {
      hits += covered[order[hi]];
      const std::size_t count = hi - lo + 1;
      if (count >= min_count)
        worst = std::min(worst, static_cast<double>(hits) /
                                    static_cast<double>(count));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("coverage") {
  const std::vector<PredictionSet> sets = {set_of({0}), set_of({1}),
                                           set_of({0, 1}), set_of({})};
  const std::vector<std::size_t> labels = {0, 1, 1, 0};
  CHECK(coverage(sets, labels) == doctest::Approx(0.75));

  const std::vector<PredictionSet> full(4, full_set(3));
  CHECK(coverage(full, labels) == doctest::Approx(1.0));
  const std::vector<PredictionSet> empty(4, set_of({}));
  CHECK(coverage(empty, labels) == doctest::Approx(0.0));

  CHECK_THROWS_AS(coverage(sets, std::vector<std::size_t>{0, 1}), Error);
}

TEST_CASE("efficiency and empty rate") {
  const std::vector<PredictionSet> sets = {set_of({0}), set_of({0, 1}),
                                           set_of({0, 1, 2}),
                                           set_of({0, 1, 2, 3})};
  CHECK(efficiency(sets) == doctest::Approx(2.5));
  const std::vector<PredictionSet> singles(5, set_of({2}));
  CHECK(efficiency(singles) == doctest::Approx(1.0));
  const std::vector<PredictionSet> sevens(3, full_set(7));
  CHECK(efficiency(sevens) == doctest::Approx(7.0));
  CHECK_THROWS_AS(efficiency(std::vector<PredictionSet>{}), Error);

  const std::vector<PredictionSet> some = {set_of({}), set_of({1}),
                                           set_of({})};
  CHECK(empty_set_rate(some) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("class coverage with absent classes") {
  const std::vector<PredictionSet> sets = {set_of({0}), set_of({0}),
                                           set_of({0}), set_of({1})};
  const std::vector<std::size_t> labels = {0, 0, 0, 0};
  const auto cov = class_coverage(sets, labels, 3);
  REQUIRE(cov[0].has_value());
  CHECK(*cov[0] == doctest::Approx(0.75));
  CHECK_FALSE(cov[1].has_value());
  CHECK_FALSE(cov[2].has_value());
}

TEST_CASE("coverage_distance") {
  std::vector<std::optional<double>> cov = {0.95, 0.92, 0.9};
  CHECK(coverage_distance(cov, 0.9, Norm::l1) == doctest::Approx(0.0));

  cov = {0.77, 0.85, 0.95};  // shortfalls 0.13 and 0.05
  CHECK(coverage_distance(cov, 0.9, Norm::l1) ==
        doctest::Approx(0.18).epsilon(1e-12));
  CHECK(coverage_distance(cov, 0.9, Norm::l2) ==
        doctest::Approx(std::sqrt(0.0169 + 0.0025)).epsilon(1e-12));
  CHECK(coverage_distance(cov, 0.9, Norm::l2) ==
        doctest::Approx(0.139).epsilon(1e-3));

  cov = {0.5, std::nullopt};
  CHECK(coverage_distance(cov, 0.9, Norm::l1) ==
        doctest::Approx(0.4).epsilon(1e-12));
  CHECK_THROWS_AS(coverage_distance(cov, 0.0, Norm::l1), Error);
}

TEST_CASE("wsc trivial cases") {
  SynthConfig synth;
  synth.n = 50;
  synth.num_classes = 4;
  synth.seed = 2;
  const Dataset d = generate(synth);
  std::vector<ProbVector> features;
  std::vector<std::size_t> labels;
  for (const auto& s : d.samples()) {
    features.push_back(s.probs);
    labels.push_back(s.label);
  }

  const std::vector<PredictionSet> full(50, full_set(4));
  CHECK(wsc(features, full, labels, WscConfig{0.25, 30, 1}) ==
        doctest::Approx(1.0));

  // delta = 1: the only slab is everything, so wsc == marginal coverage
  std::vector<PredictionSet> sets;
  Rng rng(4);
  for (std::size_t i = 0; i < 50; ++i)
    sets.push_back(rng.next_unit() < 0.6 ? set_of({labels[i]}) : set_of({}));
  const double marginal = coverage(sets, labels);
  CHECK(wsc(features, sets, labels, WscConfig{1.0, 20, 9}) ==
        doctest::Approx(marginal).epsilon(1e-12));

  CHECK_THROWS_AS(
      wsc(std::vector<ProbVector>{features[0]},
          std::vector<PredictionSet>{sets[0]}, std::vector<std::size_t>{0},
          WscConfig{}),
      Error);
}

TEST_CASE("wsc finds a planted low-coverage slab") {
  // 200 points on a K=2 simplex; the first coordinate is the projection up
  // to an affine map. Plant a cluster of 50 points (25%) with coverage 0.5.
  std::vector<ProbVector> features;
  std::vector<PredictionSet> sets;
  std::vector<std::size_t> labels;
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const bool planted = i < 50;
    // planted cluster lives in p0 in [0.0, 0.1]; the rest in [0.3, 1.0]
    const double p0 = planted ? 0.1 * rng.next_unit()
                              : 0.3 + 0.7 * rng.next_unit();
    features.push_back(ProbVector::from({p0, 1.0 - p0}));
    labels.push_back(0);
    const bool covered = planted ? (i % 2 == 0) : true;
    sets.push_back(covered ? set_of({0}) : set_of({}));
  }
  const double got = wsc(features, sets, labels, WscConfig{0.25, 200, 3});
  CHECK(got == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("wsc equals the brute-force slab scan") {
  SynthConfig synth;
  synth.n = 80;
  synth.num_classes = 5;
  synth.seed = 10;
  const Dataset d = generate(synth);
  std::vector<ProbVector> features;
  std::vector<std::size_t> labels;
  std::vector<PredictionSet> sets;
  Rng rng(20);
  for (const auto& s : d.samples()) {
    features.push_back(s.probs);
    labels.push_back(s.label);
    sets.push_back(rng.next_unit() < 0.7 ? set_of({s.label}) : set_of({}));
  }
  std::vector<char> covered(80);
  for (std::size_t i = 0; i < 80; ++i)
    covered[i] = sets[i].contains(labels[i]) ? 1 : 0;

  // replicate the direction stream, then compare against the independent scan
  const std::uint64_t seed = 31;
  const std::size_t n_dirs = 12;
  Rng dir_rng(seed);
  double expected = 1.0;
  for (std::size_t dir = 0; dir < n_dirs; ++dir) {
    std::vector<double> direction(5);
    double norm_sq = 0.0;
    for (auto& v : direction) {
      v = dir_rng.next_normal();
      norm_sq += v * v;
    }
    std::vector<double> projection(80);
    for (std::size_t i = 0; i < 80; ++i) {
      double t = 0.0;
      for (std::size_t k = 0; k < 5; ++k) t += direction[k] * features[i][k];
      projection[i] = t / std::sqrt(norm_sq);
    }
    expected =
        std::min(expected, brute_wsc_for_direction(projection, covered, 0.25));
  }
  CHECK(wsc(features, sets, labels, WscConfig{0.25, n_dirs, seed}) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("wsc never exceeds marginal coverage") {
  Rng rng(14);
  SynthConfig synth;
  synth.n = 60;
  synth.num_classes = 4;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    synth.seed = seed + 100;
    const Dataset d = generate(synth);
    std::vector<ProbVector> features;
    std::vector<std::size_t> labels;
    std::vector<PredictionSet> sets;
    for (const auto& s : d.samples()) {
      features.push_back(s.probs);
      labels.push_back(s.label);
      sets.push_back(rng.next_unit() < 0.8 ? set_of({s.label}) : set_of({}));
    }
    CHECK(wsc(features, sets, labels, WscConfig{0.3, 25, seed}) <=
          coverage(sets, labels) + 1e-12);
  }
}

TEST_CASE("sscv") {
  // one stratum at 0.8, another at 0.9, alpha = 0.1
  std::vector<PredictionSet> sets;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 10; ++i) {  // sizes 1: coverage 0.8
    sets.push_back(set_of({0}));
    labels.push_back(i < 8 ? 0 : 1);
  }
  for (int i = 0; i < 10; ++i) {  // sizes 2: coverage 0.9
    sets.push_back(set_of({0, 1}));
    labels.push_back(i < 9 ? 0 : 2);
  }
  CHECK(sscv(sets, labels, 0.1) == doctest::Approx(0.1).epsilon(1e-12));

  // single occupied stratum equals |marginal - (1-alpha)|
  std::vector<PredictionSet> singles;
  std::vector<std::size_t> lab2;
  for (int i = 0; i < 20; ++i) {
    singles.push_back(set_of({0}));
    lab2.push_back(i < 13 ? 0 : 1);
  }
  CHECK(sscv(singles, lab2, 0.1) ==
        doctest::Approx(std::abs(0.65 - 0.9)).epsilon(1e-12));

  // exactly at target everywhere: zero
  std::vector<PredictionSet> exact;
  std::vector<std::size_t> lab3;
  for (int i = 0; i < 10; ++i) {
    exact.push_back(set_of({0}));
    lab3.push_back(i < 9 ? 0 : 1);
  }
  CHECK(sscv(exact, lab3, 0.1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("default sscv bins clip to K") {
  CHECK(default_sscv_bins(20) ==
        std::vector<std::size_t>{1, 3, 6, 10, 20});
  CHECK(default_sscv_bins(10) == std::vector<std::size_t>{1, 3, 6, 10});
  CHECK(default_sscv_bins(5) == std::vector<std::size_t>{1, 3, 5});
  CHECK(default_sscv_bins(2) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("metrics are permutation invariant") {
  SynthConfig synth;
  synth.n = 120;
  synth.num_classes = 6;
  synth.seed = 77;
  const Dataset d = generate(synth);
  Rng rng(5);
  std::vector<PredictionSet> sets;
  std::vector<std::size_t> labels;
  for (const auto& s : d.samples()) {
    labels.push_back(s.label);
    sets.push_back(rng.next_unit() < 0.85 ? set_of({s.label, 0})
                                          : set_of({}));
  }
  const std::vector<std::size_t> perm = rng.permutation(120);
  std::vector<PredictionSet> sets_p(120);
  std::vector<std::size_t> labels_p(120);
  for (std::size_t i = 0; i < 120; ++i) {
    sets_p[perm[i]] = sets[i];
    labels_p[perm[i]] = labels[i];
  }
  CHECK(coverage(sets, labels) == coverage(sets_p, labels_p));
  CHECK(efficiency(sets) == efficiency(sets_p));
  CHECK(sscv(sets, labels, 0.1) == sscv(sets_p, labels_p, 0.1));
  const auto c1 = class_coverage(sets, labels, 6);
  const auto c2 = class_coverage(sets_p, labels_p, 6);
  for (std::size_t k = 0; k < 6; ++k) CHECK(c1[k] == c2[k]);
}

TEST_CASE("mean_std") {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const MeanStd ms = mean_std(xs);
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.std == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  const MeanStd single = mean_std(std::vector<double>{7.0});
  CHECK(single.mean == doctest::Approx(7.0));
  CHECK(single.std == 0.0);
}
