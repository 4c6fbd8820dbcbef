#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ecc3/conformal.hpp"
#include "ecc3/dataset.hpp"

namespace ecc3 {

struct SweepPoint {
  double temperature = 1.0;
  double mean_entropy = 0.0;  // nats, over the tempered test probabilities
  double efficiency = 0.0;
  double coverage = 0.0;
};

/// 40-point log-spaced default grid over [0.05, 20].
std::vector<double> default_temperature_grid();
std::vector<double> log_spaced_grid(double lo, double hi, std::size_t n);

/// For each temperature: lift the stored probabilities to logits (ln p,
/// clamped at 1e-12), apply the tempered softmax, recalibrate on the
/// calibration split and evaluate on the test split. T = 1 is the identity
/// on probability inputs, so that grid point reproduces the untempered
/// pipeline bit for bit. Points come back in grid order.
std::vector<SweepPoint> temp_sweep(const Dataset& cal_set,
                                   const Dataset& test_set, double alpha,
                                   std::span<const double> t_grid,
                                   const ScoreConfig& cfg);

/// Non-dominated subset minimizing (mean_entropy, efficiency) jointly,
/// sorted by entropy ascending; exact duplicates collapse to one point.
std::vector<SweepPoint> pareto_filter(std::span<const SweepPoint> points);

/// Minimum-efficiency point with mean_entropy <= threshold, if any.
std::optional<SweepPoint> select_by_entropy(std::span<const SweepPoint> points,
                                            double threshold);

/// The tempered copy of a dataset (labels and oracle carried over).
Dataset temper_dataset(const Dataset& data, double temperature);

}  // namespace ecc3
