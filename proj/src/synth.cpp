#include "ecc3/synth.hpp"

#include <algorithm>
#include <cmath>

#include "ecc3/rng.hpp"

namespace ecc3 {

namespace {

constexpr double kLogClamp = 1e-12;

void validate(const SynthConfig& cfg) {
  if (cfg.num_classes < 2) throw_invalid("SynthConfig: K must be >= 2");
  if (cfg.n < 1) throw_invalid("SynthConfig: n must be >= 1");
  if (!(cfg.dirichlet_concentration > 0.0))
    throw_invalid("SynthConfig: concentration must be > 0");
  if (cfg.class_priors) {
    if (cfg.class_priors->size() != cfg.num_classes)
      throw_invalid("SynthConfig: priors size != K");
    double sum = 0.0;
    for (double w : *cfg.class_priors) {
      if (!(w > 0.0)) throw_invalid("SynthConfig: priors must be positive");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw_invalid("SynthConfig: priors must sum to 1");
  }
}

ProbVector draw_oracle(const SynthConfig& cfg, Rng& rng) {
  std::vector<double> draws(cfg.num_classes);
  double sum = 0.0;
  for (std::size_t k = 0; k < cfg.num_classes; ++k) {
    // Dirichlet mean matches the priors when given: alpha_k = c*K*w_k
    const double shape =
        cfg.class_priors
            ? cfg.dirichlet_concentration *
                  static_cast<double>(cfg.num_classes) * (*cfg.class_priors)[k]
            : cfg.dirichlet_concentration;
    draws[k] = rng.next_gamma(shape);
    sum += draws[k];
  }
  if (sum <= 0.0) {
    std::fill(draws.begin(), draws.end(),
              1.0 / static_cast<double>(cfg.num_classes));
  } else {
    for (double& v : draws) v /= sum;
  }
  return ProbVector::trusted(std::move(draws));
}

std::size_t draw_label(const ProbVector& oracle, Rng& rng) {
  const double u = rng.next_unit();
  double cum = 0.0;
  for (std::size_t k = 0; k < oracle.num_classes(); ++k) {
    cum += oracle[k];
    if (u < cum) return k;
  }
  return oracle.num_classes() - 1;
}

ProbVector temper(const ProbVector& p, double temperature) {
  std::vector<double> logits(p.num_classes());
  for (std::size_t k = 0; k < p.num_classes(); ++k)
    logits[k] = std::log(std::max(p[k], kLogClamp));
  return softmax_with_temperature(LogitVector::trusted(std::move(logits)),
                                  temperature);
}

ProbVector add_logit_noise(const ProbVector& p, double sigma, Rng& rng) {
  std::vector<double> logits(p.num_classes());
  for (std::size_t k = 0; k < p.num_classes(); ++k)
    logits[k] = std::log(std::max(p[k], kLogClamp)) + sigma * rng.next_normal();
  return softmax_with_temperature(LogitVector::trusted(std::move(logits)),
                                  1.0);
}

std::size_t argmax(const ProbVector& p) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.num_classes(); ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

}  // namespace

ProbVector distort(const ProbVector& oracle, const Distortion& d, Rng& noise) {
  switch (d.kind) {
    case DistortionKind::none:
      return oracle;
    case DistortionKind::sharpen:
    case DistortionKind::blur:
      if (!(d.param > 0.0)) throw_invalid("distort: temperature must be > 0");
      return temper(oracle, d.param);
    case DistortionKind::logit_noise:
      if (d.param < 0.0) throw_invalid("distort: sigma must be >= 0");
      return add_logit_noise(oracle, d.param, noise);
    case DistortionKind::class_sharpen: {
      if (!(d.param > 0.0)) throw_invalid("distort: temperature must be > 0");
      std::vector<double> logits(oracle.num_classes());
      for (std::size_t k = 0; k < logits.size(); ++k) {
        logits[k] = std::log(std::max(oracle[k], kLogClamp));
        if (k % 2 == 0) logits[k] /= d.param;
      }
      return softmax_with_temperature(LogitVector::trusted(std::move(logits)),
                                      1.0);
    }
  }
  throw_invalid("distort: unknown kind");
}

Dataset generate(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  std::vector<LabeledSample> samples;
  std::vector<ProbVector> oracle_rows;
  samples.reserve(cfg.n);
  oracle_rows.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    ProbVector oracle = draw_oracle(cfg, rng);
    const std::size_t label = draw_label(oracle, rng);
    ProbVector base = distort(oracle, cfg.base_distortion, rng);
    if (cfg.extra_logit_noise > 0.0)
      base = add_logit_noise(base, cfg.extra_logit_noise, rng);
    samples.push_back(LabeledSample{std::move(base), label});
    oracle_rows.push_back(std::move(oracle));
  }
  return Dataset(std::move(samples), std::move(oracle_rows));
}

Dataset imbalanced_variant(const SynthConfig& cfg) {
  validate(cfg);
  if (!cfg.class_priors)
    throw_invalid("imbalanced_variant: class priors required");

  const double mean_prior = 1.0 / static_cast<double>(cfg.num_classes);
  std::vector<bool> rare(cfg.num_classes);
  for (std::size_t k = 0; k < cfg.num_classes; ++k)
    rare[k] = (*cfg.class_priors)[k] < mean_prior;

  Rng rng(cfg.seed);
  std::vector<LabeledSample> samples;
  std::vector<ProbVector> oracle_rows;
  samples.reserve(cfg.n);
  oracle_rows.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    ProbVector oracle = draw_oracle(cfg, rng);
    const std::size_t label = draw_label(oracle, rng);
    ProbVector base = distort(oracle, cfg.base_distortion, rng);
    if (cfg.extra_logit_noise > 0.0)
      base = add_logit_noise(base, cfg.extra_logit_noise, rng);
    if (rare[argmax(oracle)]) {
      base = temper(base, cfg.rare_blur_temperature);
      base = add_logit_noise(base, cfg.rare_noise_sigma, rng);
    }
    samples.push_back(LabeledSample{std::move(base), label});
    oracle_rows.push_back(std::move(oracle));
  }
  return Dataset(std::move(samples), std::move(oracle_rows));
}

}  // namespace ecc3
