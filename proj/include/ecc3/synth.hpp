#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ecc3/dataset.hpp"
#include "ecc3/rng.hpp"

namespace ecc3 {

enum class DistortionKind { none, sharpen, blur, logit_noise, class_sharpen };

// sharpen/blur are tempered-softmax maps of the oracle (param = temperature,
// < 1 sharpens, > 1 blurs); logit_noise adds seeded Gaussian noise of the
// given sigma to the oracle log-probabilities; class_sharpen tempers only
// the even-indexed classes, a per-class miscalibration that no single global
// temperature can invert.
struct Distortion {
  DistortionKind kind = DistortionKind::none;
  double param = 1.0;
};

struct SynthConfig {
  std::size_t num_classes = 10;
  std::size_t n = 10000;
  double dirichlet_concentration = 0.1;
  Distortion base_distortion{DistortionKind::sharpen, 0.25};
  // seeded Gaussian logit noise composed on top of base_distortion; models
  // ranking errors that no temperature can undo
  double extra_logit_noise = 0.0;
  std::optional<std::vector<double>> class_priors;  // on the simplex
  std::uint64_t seed = 0;
  // imbalanced variant: extra degradation applied to samples whose oracle
  // argmax is a below-average-prior class
  double rare_blur_temperature = 3.0;
  double rare_noise_sigma = 3.0;
};

/// Draws per-sample oracle distributions from a Dirichlet (symmetric, or with
/// mean matching class_priors when given), samples the label from the oracle,
/// and produces the base-model vector by distorting the oracle. Samples are
/// i.i.d. and the dataset carries the oracle field.
Dataset generate(const SynthConfig& cfg);

/// Class-imbalanced benchmark: label marginals follow cfg.class_priors, and
/// samples whose oracle argmax is a rare class get additionally degraded base
/// vectors (blur plus logit noise), so rare-class coverage sits below 1-alpha
/// before correction. Degradation depends on the sample only through its
/// oracle, so exchangeability is preserved.
Dataset imbalanced_variant(const SynthConfig& cfg);

/// The distortion map itself (pure; noise drawn from `noise`, unused unless
/// kind == logit_noise).
ProbVector distort(const ProbVector& oracle, const Distortion& d,
                   Rng& noise);

}  // namespace ecc3
