#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ecc3/conformal.hpp"

namespace ecc3 {

enum class Norm { l1, l2 };

struct WscConfig {
  double delta = 0.25;          // minimum slab mass fraction
  std::size_t n_directions = 1000;
  std::uint64_t seed = 0;
};

/// Fraction of samples whose true label is inside its prediction set.
double coverage(std::span<const PredictionSet> sets,
                std::span<const std::size_t> labels);

/// Mean prediction-set size.
double efficiency(std::span<const PredictionSet> sets);

/// Fraction of empty prediction sets.
double empty_set_rate(std::span<const PredictionSet> sets);

/// Per-class hit fraction over the samples with that true class; classes
/// absent from `labels` yield nullopt.
std::vector<std::optional<double>> class_coverage(
    std::span<const PredictionSet> sets, std::span<const std::size_t> labels,
    std::size_t num_classes);

/// Norm of the shortfall vector max(0, target - cov_k), restricted to the
/// present classes below target.
double coverage_distance(std::span<const std::optional<double>> class_cov,
                         double target, Norm norm);

/// Worst-slab coverage: the minimum empirical coverage over axis projections
/// of `features` onto seeded random directions, scanning every interval that
/// holds at least a delta-fraction of the points. Always <= marginal
/// coverage because the full range is itself a candidate slab.
double wsc(std::span<const ProbVector> features,
           std::span<const PredictionSet> sets,
           std::span<const std::size_t> labels, const WscConfig& cfg);

/// Size-stratified coverage violation: max over non-empty set-size strata of
/// |stratum coverage - (1-alpha)|. `bin_uppers` holds inclusive stratum upper
/// edges in ascending order; empty means the default strata
/// {0-1, 2-3, 4-6, 7-10, 11-K} clipped to K.
double sscv(std::span<const PredictionSet> sets,
            std::span<const std::size_t> labels, double alpha,
            std::vector<std::size_t> bin_uppers = {});

std::vector<std::size_t> default_sscv_bins(std::size_t num_classes);

// One evaluation row: everything §-style experiment tables report per split.
struct EvalReport {
  double coverage = 0.0;
  double efficiency = 0.0;
  double mean_entropy = 0.0;  // nats, over the evaluated probability vectors
  std::vector<std::optional<double>> class_cov;
  double wsc = -1.0;  // -1 when not computed
  double sscv = 0.0;
  double empty_set_rate = 0.0;
};

struct EvalOptions {
  std::size_t wsc_directions = 0;  // 0 disables WSC
  double wsc_delta = 0.25;
  std::uint64_t wsc_seed = 0;
  std::vector<std::size_t> sscv_bins;  // empty = defaults
};

/// Assembles the full report for one calibrated run over a test set.
EvalReport evaluate(const Dataset& test_set,
                    std::span<const PredictionSet> sets, double alpha,
                    const EvalOptions& opts = {});

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample std (n-1); 0 when n < 2
};

MeanStd mean_std(std::span<const double> values);

}  // namespace ecc3
