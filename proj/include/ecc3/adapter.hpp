#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "ecc3/dataset.hpp"

namespace ecc3 {

// Fully-connected correction network: base probability vector in, corrected
// logits/probabilities out. ReLU between layers, linear head, softmax at the
// end. Input and output widths both equal K.
struct AdapterParams {
  std::vector<std::size_t> layer_dims;        // [K, hidden..., K]
  std::vector<std::vector<double>> weights;   // per layer, row-major out x in
  std::vector<std::vector<double>> biases;    // per layer, length out
  bool input_log_probs = false;  // feed ln(p) instead of p for headroom

  static AdapterParams init(std::vector<std::size_t> dims, std::uint64_t seed,
                            bool input_log_probs = false);

  std::size_t num_layers() const { return weights.size(); }
  std::size_t num_classes() const { return layer_dims.front(); }
  std::size_t num_parameters() const;

  // Versioned little-endian binary format, magic "ECC3".
  std::vector<std::uint8_t> serialize() const;
  static AdapterParams deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static AdapterParams load(const std::string& path);
};

struct TrainConfig {
  double alpha = 0.1;
  double beta = 0.1;   // inefficiency weight
  double gamma = 4.0;  // focal exponent
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  std::size_t epochs = 200;
  std::size_t batch_size = 512;
  double sig_temp = 0.1;  // sigmoid temperature of the smooth set size
  double kappa = 1.0;     // hinge offset of the size loss
  bool conditional = false;
  bool input_log_probs = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double focal = 0.0;
  double ineff = 0.0;
  double cond = 0.0;  // mean smoothed per-class coverage; 0 when disabled
  double entropy_mean = 0.0;
};

struct Batch {
  std::vector<ProbVector> base;  // adapter inputs
  std::vector<std::size_t> labels;
};

// Gradient structure shaped like AdapterParams.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

std::pair<LogitVector, ProbVector> forward(const AdapterParams& params,
                                           const ProbVector& base);

double loss_ce(const ProbVector& pi_hat, std::size_t y);

// -(1 - p_y)^gamma * ln(p_y) for one-hot targets; gamma = 0 reproduces
// loss_ce exactly.
double loss_focal(const ProbVector& pi_hat, std::size_t y, double gamma);

// Piecewise-linear empirical quantile: fractional 1-based order-statistic
// index h = level * m, interpolated between the two bracketing order
// statistics and clamped to the extremes. Differentiable in the scores; the
// gradient is the interpolation weight, nonzero on at most two of them.
double smooth_quantile(std::span<const double> scores, double level);

struct SmoothQuantileGrad {
  double value = 0.0;
  std::vector<double> grad;  // d value / d score_i
};
SmoothQuantileGrad smooth_quantile_with_grad(std::span<const double> scores,
                                             double level);

// Batch-simulated CP size loss: the first half of the batch plays
// calibration (smooth quantile of its true-label scores at level
// (1-alpha)(1+1/m)), the second half plays test, and each test sample
// contributes max(0, smooth_size - kappa) with
// smooth_size = sum_k sigmoid((tau - V(x,k)) / sig_temp).
// The sort permutation inside the scores is a constant of the forward pass.
double loss_ineff(const std::vector<std::vector<double>>& pi_hat,
                  const std::vector<std::size_t>& labels,
                  const TrainConfig& cfg);

struct IneffGrad {
  double value = 0.0;
  std::vector<std::vector<double>> grad;  // per sample, per class
};
IneffGrad loss_ineff_with_grad(const std::vector<std::vector<double>>& pi_hat,
                               const std::vector<std::size_t>& labels,
                               const TrainConfig& cfg);

// Smoothed class-conditional coverage, negated: entry k is
// -(mean over pseudo-calibration samples of class k of
//   sigmoid((tau_s - V(x,y)) / sig_temp)), and 0 for classes absent from the
// batch (those are also excluded from the conditional average in
// total_loss).
std::vector<double> loss_cond(const std::vector<std::vector<double>>& pi_hat,
                              const std::vector<std::size_t>& labels,
                              std::size_t num_classes, double tau_s,
                              const TrainConfig& cfg);

// Full objective: focal over the whole batch, beta-weighted size loss over
// the pseudo-test half, and (when enabled) minus the mean smoothed class
// coverage of the pseudo-calibration half, so minimizing pushes per-class
// coverage up.
LossBreakdown total_loss(const Batch& batch, const AdapterParams& params,
                         const TrainConfig& cfg);

// Exact reverse-mode gradients of total_loss with respect to every weight
// and bias.
Gradients backward(const Batch& batch, const AdapterParams& params,
                   const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown train_loss;
  double val_coverage = 0.0;
  double val_efficiency = 0.0;
  double val_entropy = 0.0;
  double val_min_class_coverage = 0.0;
};

struct TrainResult {
  AdapterParams params;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = initial parameters
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) with decoupled weight decay,
// seeded shuffling, per-epoch validation CP (first half of the validation
// set calibrates, second half evaluates). Returns the snapshot with the best
// validation efficiency among epochs whose validation coverage is at least
// 1 - alpha - 0.01; if none qualifies, the highest-coverage epoch.
// Conditional runs instead pick the feasible epoch with the highest
// validation minimum class coverage (efficiency breaks ties), since an
// efficiency-greedy checkpoint would discard exactly what the conditional
// objective buys.
TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& cfg,
                  const std::vector<std::size_t>& hidden_dims = {128});

// Corrected copy of a dataset: every base vector replaced by the adapter
// output. Labels and oracle rows are carried over untouched.
Dataset apply_adapter(const AdapterParams& params, const Dataset& data);

}  // namespace ecc3
