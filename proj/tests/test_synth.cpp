#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ecc3/conformal.hpp"
#include "ecc3/metrics.hpp"
#include "ecc3/synth.hpp"

using namespace ecc3;

TEST_CASE("generate is deterministic per seed") {
  SynthConfig cfg;
  cfg.n = 200;
  cfg.num_classes = 5;
  cfg.seed = 42;
  const Dataset a = generate(cfg);
  const Dataset b = generate(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.sample(i).probs.values() == b.sample(i).probs.values());
    CHECK(a.sample(i).label == b.sample(i).label);
    CHECK(a.oracle(i).values() == b.oracle(i).values());
  }
  cfg.seed = 43;
  const Dataset c = generate(cfg);
  CHECK(a.sample(0).probs.values() != c.sample(0).probs.values());
}

TEST_CASE("distortion none keeps base equal to oracle") {
  SynthConfig cfg;
  cfg.n = 100;
  cfg.num_classes = 4;
  cfg.seed = 7;
  cfg.base_distortion = {DistortionKind::none, 1.0};
  const Dataset d = generate(cfg);
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK(d.sample(i).probs.values() == d.oracle(i).values());
}

TEST_CASE("sharpening lowers mean entropy, blurring raises it") {
  SynthConfig cfg;
  cfg.n = 500;
  cfg.num_classes = 8;
  cfg.seed = 13;
  cfg.dirichlet_concentration = 1.0;

  cfg.base_distortion = {DistortionKind::sharpen, 0.25};
  const Dataset sharp = generate(cfg);
  cfg.base_distortion = {DistortionKind::blur, 4.0};
  const Dataset blur = generate(cfg);

  double h_oracle = 0.0, h_sharp = 0.0, h_blur = 0.0;
  for (std::size_t i = 0; i < sharp.size(); ++i) {
    h_oracle += entropy(sharp.oracle(i));
    h_sharp += entropy(sharp.sample(i).probs);
    h_blur += entropy(blur.sample(i).probs);
  }
  CHECK(h_sharp < h_oracle);
  CHECK(h_blur > h_oracle);
}

TEST_CASE("generated rows are valid simplex points") {
  SynthConfig cfg;
  cfg.n = 300;
  cfg.num_classes = 12;
  cfg.seed = 3;
  cfg.dirichlet_concentration = 0.1;
  cfg.base_distortion = {DistortionKind::logit_noise, 2.0};
  const Dataset d = generate(cfg);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK_NOTHROW(ProbVector::from(d.sample(i).probs.values()));
    CHECK_NOTHROW(ProbVector::from(d.oracle(i).values()));
    CHECK(d.sample(i).label < 12);
  }
}

TEST_CASE("class priors shape the label marginal") {
  SynthConfig cfg;
  cfg.n = 4000;
  cfg.num_classes = 10;
  cfg.seed = 11;
  cfg.dirichlet_concentration = 0.5;
  std::vector<double> priors(10, 0.05);
  priors[0] = 0.55;
  cfg.class_priors = priors;
  const Dataset d = imbalanced_variant(cfg);

  std::vector<double> counts(10, 0.0);
  for (const auto& s : d.samples()) counts[s.label] += 1.0;
  for (std::size_t k = 0; k < 10; ++k) {
    const double expected = 4000.0 * priors[k];
    const double sigma = std::sqrt(4000.0 * priors[k] * (1.0 - priors[k]));
    CHECK(std::abs(counts[k] - expected) <= 4.0 * sigma);
  }
}

TEST_CASE("imbalanced variant depresses rare-class coverage") {
  SynthConfig cfg;
  cfg.n = 8000;
  cfg.num_classes = 10;
  cfg.seed = 5;
  cfg.dirichlet_concentration = 0.3;
  cfg.base_distortion = {DistortionKind::none, 1.0};
  std::vector<double> priors(10, 0.05);
  priors[0] = 0.55;
  cfg.class_priors = priors;
  const Dataset d = imbalanced_variant(cfg);

  const DatasetSplits splits = split_dataset(d, SplitRatios{1, 1, 4, 4}, 3);
  const CpResult cp = run_cp(splits.cal, splits.test, 0.1, ScoreConfig{});
  std::vector<std::size_t> labels(splits.test.size());
  for (std::size_t i = 0; i < splits.test.size(); ++i)
    labels[i] = splits.test.sample(i).label;
  const auto by_class = class_coverage(cp.sets, labels, 10);

  double min_rare = 1.0;
  for (std::size_t k = 1; k < 10; ++k)
    if (by_class[k]) min_rare = std::min(min_rare, *by_class[k]);
  CHECK(min_rare < 0.9);
  // marginal coverage still honors the guarantee
  CHECK(coverage(cp.sets, labels) >= 0.885);
}

TEST_CASE("priors validation") {
  SynthConfig cfg;
  cfg.n = 10;
  cfg.num_classes = 3;
  cfg.class_priors = std::vector<double>{0.5, 0.5};  // wrong length
  CHECK_THROWS_AS(generate(cfg), Error);
  cfg.class_priors = std::vector<double>{0.5, 0.4, 0.2};  // sums to 1.1
  CHECK_THROWS_AS(generate(cfg), Error);
  cfg.class_priors.reset();
  CHECK_THROWS_AS(imbalanced_variant(cfg), Error);
}

TEST_CASE("distortion map validation") {
  Rng rng(1);
  const ProbVector p = ProbVector::from({0.6, 0.4});
  CHECK_THROWS_AS(distort(p, {DistortionKind::sharpen, 0.0}, rng), Error);
  CHECK_THROWS_AS(distort(p, {DistortionKind::logit_noise, -1.0}, rng),
                  Error);
  const ProbVector sharp = distort(p, {DistortionKind::sharpen, 0.5}, rng);
  CHECK(sharp[0] > p[0]);
}

TEST_CASE("class_sharpen tempers only the even classes") {
  Rng rng(1);
  const ProbVector p = ProbVector::from({0.4, 0.3, 0.2, 0.1});
  const ProbVector q = distort(p, {DistortionKind::class_sharpen, 0.25}, rng);
  // even classes get logits scaled by 1/0.25; odd logits unchanged
  std::vector<double> expected(4);
  double sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double logit = std::log(p[k]);
    expected[k] = std::exp(k % 2 == 0 ? logit / 0.25 : logit);
    sum += expected[k];
  }
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(q[k] == doctest::Approx(expected[k] / sum).epsilon(1e-12));
}

TEST_CASE("extra logit noise perturbs the base but not the oracle") {
  SynthConfig cfg;
  cfg.n = 60;
  cfg.num_classes = 5;
  cfg.seed = 4;
  cfg.base_distortion = {DistortionKind::none, 1.0};
  cfg.extra_logit_noise = 2.0;
  const Dataset d = generate(cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.sample(i).probs.values() != d.oracle(i).values()) any_diff = true;
    CHECK_NOTHROW(ProbVector::from(d.sample(i).probs.values()));
  }
  CHECK(any_diff);
}
