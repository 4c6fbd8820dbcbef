#include "ecc3/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "ecc3/conformal.hpp"
#include "ecc3/rng.hpp"
#include "ecc3/scores.hpp"

namespace ecc3 {

namespace {

constexpr double kProbClamp = 1e-12;

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> input_features(const AdapterParams& params,
                                   std::span<const double> base) {
  std::vector<double> features(base.begin(), base.end());
  if (params.input_log_probs) {
    for (double& v : features) v = std::log(std::max(v, kProbClamp));
  }
  return features;
}

struct SampleFwd {
  std::vector<std::vector<double>> acts;  // layer inputs a_0 .. a_{L-1}
  std::vector<double> logits;
  std::vector<double> probs;
};

SampleFwd forward_sample(const AdapterParams& params,
                         std::span<const double> base) {
  const std::size_t layers = params.num_layers();
  SampleFwd fwd;
  fwd.acts.resize(layers);
  fwd.acts[0] = input_features(params, base);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = params.layer_dims[l];
    const std::size_t out = params.layer_dims[l + 1];
    const std::vector<double>& a = fwd.acts[l];
    std::vector<double> pre(out);
    for (std::size_t j = 0; j < out; ++j) {
      double z = params.biases[l][j];
      const double* row = params.weights[l].data() + j * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * a[i];
      pre[j] = z;
    }
    if (l + 1 < layers) {
      for (double& v : pre) v = v > 0.0 ? v : 0.0;
      fwd.acts[l + 1] = std::move(pre);
    } else {
      fwd.logits = std::move(pre);
    }
  }
  fwd.probs.resize(fwd.logits.size());
  softmax_raw(fwd.logits, fwd.probs);
  return fwd;
}

double focal_raw(std::span<const double> probs, std::size_t y, double gamma) {
  const double p = probs[y];
  const double log_p = std::log(std::max(p, kProbClamp));
  if (gamma == 0.0) return -log_p;
  const double one_minus = std::max(1.0 - p, 0.0);
  return -std::pow(one_minus, gamma) * log_p;
}

// d loss_focal / d p_y (the other classes have zero direct derivative
// under one-hot targets)
double focal_grad_py(double p, double gamma) {
  const double p_safe = std::max(p, kProbClamp);
  if (gamma == 0.0) return p > kProbClamp ? -1.0 / p_safe : 0.0;
  const double one_minus = std::max(1.0 - p, 0.0);
  const double log_p = std::log(p_safe);
  const double pow_base = gamma < 1.0 ? std::max(one_minus, kProbClamp)
                                      : one_minus;
  const double term1 = gamma * std::pow(pow_base, gamma - 1.0) * log_p;
  const double term2 =
      p > kProbClamp ? std::pow(one_minus, gamma) / p_safe : 0.0;
  return term1 - term2;
}

// dL/dz_j = p_j * (dL/dp_j - sum_k dL/dp_k p_k)
void softmax_backward(std::span<const double> probs,
                      std::span<const double> dp, std::span<double> dz) {
  double dot = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) dot += dp[k] * probs[k];
  for (std::size_t k = 0; k < probs.size(); ++k)
    dz[k] = probs[k] * (dp[k] - dot);
}

void mlp_backward(const AdapterParams& params, const SampleFwd& fwd,
                  std::vector<double> delta, Gradients& grads) {
  for (std::size_t l = params.num_layers(); l-- > 0;) {
    const std::size_t in = params.layer_dims[l];
    const std::size_t out = params.layer_dims[l + 1];
    const std::vector<double>& a = fwd.acts[l];
    for (std::size_t j = 0; j < out; ++j) {
      double* grow = grads.weights[l].data() + j * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += delta[j] * a[i];
      grads.biases[l][j] += delta[j];
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      const double* row = params.weights[l].data() + j * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += delta[j] * row[i];
    }
    for (std::size_t i = 0; i < in; ++i)
      if (fwd.acts[l][i] <= 0.0) prev[i] = 0.0;  // ReLU gate
    delta = std::move(prev);
  }
}

// True-label APS score from a precomputed descending sort.
double true_label_score(const SortedProbs& sp, std::size_t y) {
  const std::size_t rank = sp.rank_of_class[y];
  double cum = 0.0;
  for (std::size_t r = 0; r <= rank; ++r) cum += sp.sorted[r];
  return cum;
}

// Shared core for the inefficiency and conditional losses over a batch of
// (already corrected) probability arrays. When dp != nullptr, accumulates
// d(objective)/d(probs) into it, where objective =
//   beta * ineff - (conditional ? mean smoothed class coverage : 0).
struct CpSimulation {
  double ineff = 0.0;
  double cond_cov = 0.0;  // mean smoothed class coverage over present classes
  std::size_t present_classes = 0;
};

CpSimulation simulate_cp_loss(const std::vector<std::vector<double>>& probs,
                              const std::vector<std::size_t>& labels,
                              std::size_t num_classes, const TrainConfig& cfg,
                              bool with_cond,
                              std::vector<std::vector<double>>* dp) {
  const std::size_t batch = probs.size();
  if (batch < 4) throw_invalid("loss_ineff: batch must hold >= 4 samples");
  if (labels.size() != batch)
    throw_invalid("loss_ineff: labels/batch length mismatch");
  const std::size_t m = batch / 2;  // pseudo-calibration half
  const double inv_temp = 1.0 / cfg.sig_temp;

  std::vector<SortedProbs> sorted(batch);
  for (std::size_t i = 0; i < batch; ++i) sorted[i] = sort_desc_raw(probs[i]);

  std::vector<double> cal_scores(m);
  for (std::size_t i = 0; i < m; ++i)
    cal_scores[i] = true_label_score(sorted[i], labels[i]);

  const double level =
      (1.0 - cfg.alpha) * (1.0 + 1.0 / static_cast<double>(m));
  const SmoothQuantileGrad tau = smooth_quantile_with_grad(cal_scores, level);

  CpSimulation result;
  double dtau = 0.0;
  std::vector<double> dscore(m, 0.0);

  // size loss over the pseudo-test half
  const std::size_t n_test = batch - m;
  double ineff_sum = 0.0;
  for (std::size_t j = m; j < batch; ++j) {
    const SortedProbs& sp = sorted[j];
    std::vector<double> sig(num_classes);
    double cum = 0.0;
    double size = 0.0;
    for (std::size_t r = 0; r < num_classes; ++r) {
      cum += sp.sorted[r];
      sig[r] = sigmoid((tau.value - cum) * inv_temp);
      size += sig[r];
    }
    const double hinge = size - cfg.kappa;
    if (hinge > 0.0) {
      ineff_sum += hinge;
      if (dp) {
        const double w = cfg.beta / static_cast<double>(n_test);
        double suffix = 0.0;
        for (std::size_t r = num_classes; r-- > 0;) {
          const double g = w * sig[r] * (1.0 - sig[r]) * inv_temp;
          dtau += g;
          suffix += -g;  // d size / d V at rank r
          (*dp)[j][sp.class_at_rank[r]] += suffix;
        }
      }
    }
  }
  result.ineff = ineff_sum / static_cast<double>(n_test);

  if (with_cond) {
    std::vector<std::size_t> class_count(num_classes, 0);
    std::vector<double> class_cov(num_classes, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      ++class_count[labels[i]];
      class_cov[labels[i]] += sigmoid((tau.value - cal_scores[i]) * inv_temp);
    }
    double cov_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      if (class_count[k] == 0) continue;
      ++present;
      cov_sum += class_cov[k] / static_cast<double>(class_count[k]);
    }
    result.present_classes = present;
    result.cond_cov = present > 0 ? cov_sum / static_cast<double>(present)
                                  : 0.0;
    if (dp && present > 0) {
      // objective carries -mean coverage
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t y = labels[i];
        const double sig = sigmoid((tau.value - cal_scores[i]) * inv_temp);
        const double g = sig * (1.0 - sig) * inv_temp /
                         (static_cast<double>(present) *
                          static_cast<double>(class_count[y]));
        dtau += -g;
        dscore[i] += g;
      }
    }
  }

  if (dp) {
    // route the quantile gradient back to the pseudo-calibration scores
    for (std::size_t i = 0; i < m; ++i) dscore[i] += dtau * tau.grad[i];
    // and the score gradients into the probabilities (cumulative-sum
    // structure; the sort permutation is constant)
    for (std::size_t i = 0; i < m; ++i) {
      if (dscore[i] == 0.0) continue;
      const SortedProbs& sp = sorted[i];
      const std::size_t rank = sp.rank_of_class[labels[i]];
      for (std::size_t r = 0; r <= rank; ++r)
        (*dp)[i][sp.class_at_rank[r]] += dscore[i];
    }
  }
  return result;
}

void check_labels(const std::vector<std::size_t>& labels,
                  std::size_t num_classes) {
  for (std::size_t y : labels)
    if (y >= num_classes) throw_invalid("adapter: label out of range");
}

}  // namespace

void TrainConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw_invalid("TrainConfig: alpha must be in (0, 1)");
  if (beta < 0.0) throw_invalid("TrainConfig: beta must be >= 0");
  if (gamma < 0.0) throw_invalid("TrainConfig: gamma must be >= 0");
  if (!(learning_rate > 0.0)) throw_invalid("TrainConfig: learning_rate <= 0");
  if (weight_decay < 0.0) throw_invalid("TrainConfig: weight_decay < 0");
  if (!(sig_temp > 0.0)) throw_invalid("TrainConfig: sig_temp must be > 0");
  if (kappa < 0.0) throw_invalid("TrainConfig: kappa must be >= 0");
  if (batch_size < 4) throw_invalid("TrainConfig: batch_size must be >= 4");
}

AdapterParams AdapterParams::init(std::vector<std::size_t> dims,
                                  std::uint64_t seed, bool input_log_probs) {
  if (dims.size() < 2) throw_invalid("AdapterParams: need >= 2 layer dims");
  for (std::size_t d : dims)
    if (d == 0) throw_invalid("AdapterParams: zero layer width");
  AdapterParams params;
  params.layer_dims = std::move(dims);
  params.input_log_probs = input_log_probs;
  Rng rng(seed);
  const std::size_t layers = params.layer_dims.size() - 1;
  params.weights.resize(layers);
  params.biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = params.layer_dims[l];
    const std::size_t out = params.layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    params.weights[l].resize(in * out);
    for (double& w : params.weights[l])
      w = (2.0 * rng.next_unit() - 1.0) * bound;
    params.biases[l].assign(out, 0.0);
  }
  return params;
}

std::size_t AdapterParams::num_parameters() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < num_layers(); ++l)
    count += weights[l].size() + biases[l].size();
  return count;
}

std::pair<LogitVector, ProbVector> forward(const AdapterParams& params,
                                           const ProbVector& base) {
  if (base.num_classes() != params.num_classes())
    throw_invalid("forward: input width mismatch");
  SampleFwd fwd = forward_sample(params, base.span());
  return {LogitVector::trusted(std::move(fwd.logits)),
          ProbVector::trusted(std::move(fwd.probs))};
}

double loss_ce(const ProbVector& pi_hat, std::size_t y) {
  if (y >= pi_hat.num_classes()) throw_invalid("loss_ce: label out of range");
  return -std::log(std::max(pi_hat[y], kProbClamp));
}

double loss_focal(const ProbVector& pi_hat, std::size_t y, double gamma) {
  if (y >= pi_hat.num_classes())
    throw_invalid("loss_focal: label out of range");
  if (gamma < 0.0) throw_invalid("loss_focal: gamma must be >= 0");
  return focal_raw(pi_hat.span(), y, gamma);
}

SmoothQuantileGrad smooth_quantile_with_grad(std::span<const double> scores,
                                             double level) {
  if (scores.empty()) throw_invalid("smooth_quantile: empty scores");
  if (!(level > 0.0)) throw_invalid("smooth_quantile: level must be > 0");
  const std::size_t m = scores.size();

  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return scores[a] < scores[b];
  });

  SmoothQuantileGrad out;
  out.grad.assign(m, 0.0);
  const double h = level * static_cast<double>(m);  // fractional 1-based index
  if (h <= 1.0) {
    out.value = scores[order[0]];
    out.grad[order[0]] = 1.0;
  } else if (h >= static_cast<double>(m)) {
    out.value = scores[order[m - 1]];
    out.grad[order[m - 1]] = 1.0;
  } else {
    const auto lo = static_cast<std::size_t>(std::floor(h));  // 1-based
    const double frac = h - static_cast<double>(lo);
    out.value = (1.0 - frac) * scores[order[lo - 1]] +
                frac * scores[order[lo]];
    out.grad[order[lo - 1]] = 1.0 - frac;
    out.grad[order[lo]] = frac;
  }
  return out;
}

double smooth_quantile(std::span<const double> scores, double level) {
  return smooth_quantile_with_grad(scores, level).value;
}

double loss_ineff(const std::vector<std::vector<double>>& pi_hat,
                  const std::vector<std::size_t>& labels,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (pi_hat.empty()) throw_invalid("loss_ineff: empty batch");
  const std::size_t num_classes = pi_hat[0].size();
  check_labels(labels, num_classes);
  return simulate_cp_loss(pi_hat, labels, num_classes, cfg, false, nullptr)
      .ineff;
}

IneffGrad loss_ineff_with_grad(const std::vector<std::vector<double>>& pi_hat,
                               const std::vector<std::size_t>& labels,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (pi_hat.empty()) throw_invalid("loss_ineff: empty batch");
  const std::size_t num_classes = pi_hat[0].size();
  check_labels(labels, num_classes);
  std::vector<std::vector<double>> dp(
      pi_hat.size(), std::vector<double>(num_classes, 0.0));
  TrainConfig unit = cfg;
  unit.beta = 1.0;  // gradient of the bare inefficiency loss
  IneffGrad out;
  out.value =
      simulate_cp_loss(pi_hat, labels, num_classes, unit, false, &dp).ineff;
  out.grad = std::move(dp);
  return out;
}

std::vector<double> loss_cond(const std::vector<std::vector<double>>& pi_hat,
                              const std::vector<std::size_t>& labels,
                              std::size_t num_classes, double tau_s,
                              const TrainConfig& cfg) {
  if (pi_hat.size() != labels.size())
    throw_invalid("loss_cond: labels/batch length mismatch");
  check_labels(labels, num_classes);
  std::vector<double> negated(num_classes, 0.0);
  std::vector<std::size_t> count(num_classes, 0);
  const double inv_temp = 1.0 / cfg.sig_temp;
  for (std::size_t i = 0; i < pi_hat.size(); ++i) {
    const SortedProbs sp = sort_desc_raw(pi_hat[i]);
    const double v = true_label_score(sp, labels[i]);
    negated[labels[i]] -= sigmoid((tau_s - v) * inv_temp);
    ++count[labels[i]];
  }
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (count[k] > 0) negated[k] /= static_cast<double>(count[k]);
  }
  return negated;
}

namespace {

struct BatchEval {
  LossBreakdown breakdown;
  std::vector<SampleFwd> fwd;
};

BatchEval eval_batch(const Batch& batch, const AdapterParams& params,
                     const TrainConfig& cfg, Gradients* grads) {
  cfg.validate();
  const std::size_t n = batch.base.size();
  if (n < 4) throw_invalid("total_loss: batch must hold >= 4 samples");
  if (batch.labels.size() != n)
    throw_invalid("total_loss: labels/batch length mismatch");
  const std::size_t num_classes = params.num_classes();
  check_labels(batch.labels, num_classes);

  BatchEval eval;
  eval.fwd.reserve(n);
  std::vector<std::vector<double>> probs(n);
  double focal_sum = 0.0;
  double entropy_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (batch.base[i].num_classes() != num_classes)
      throw_invalid("total_loss: sample width mismatch");
    eval.fwd.push_back(forward_sample(params, batch.base[i].span()));
    probs[i] = eval.fwd.back().probs;
    focal_sum += focal_raw(probs[i], batch.labels[i], cfg.gamma);
    entropy_sum += entropy_raw(probs[i]);
  }

  std::vector<std::vector<double>> dp;
  if (grads) dp.assign(n, std::vector<double>(num_classes, 0.0));

  const CpSimulation sim =
      simulate_cp_loss(probs, batch.labels, num_classes, cfg, cfg.conditional,
                       grads ? &dp : nullptr);

  LossBreakdown& bd = eval.breakdown;
  bd.focal = focal_sum / static_cast<double>(n);
  bd.ineff = sim.ineff;
  bd.cond = cfg.conditional ? sim.cond_cov : 0.0;
  bd.entropy_mean = entropy_sum / static_cast<double>(n);
  bd.total = bd.focal + cfg.beta * bd.ineff - bd.cond;

  if (grads) {
    const double focal_w = 1.0 / static_cast<double>(n);
    std::vector<double> dz(num_classes);
    for (std::size_t i = 0; i < n; ++i) {
      dp[i][batch.labels[i]] +=
          focal_w * focal_grad_py(probs[i][batch.labels[i]], cfg.gamma);
      softmax_backward(probs[i], dp[i], dz);
      mlp_backward(params, eval.fwd[i], dz, *grads);
    }
  }
  return eval;
}

Gradients zero_gradients(const AdapterParams& params) {
  Gradients grads;
  grads.weights.resize(params.num_layers());
  grads.biases.resize(params.num_layers());
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    grads.weights[l].assign(params.weights[l].size(), 0.0);
    grads.biases[l].assign(params.biases[l].size(), 0.0);
  }
  return grads;
}

}  // namespace

LossBreakdown total_loss(const Batch& batch, const AdapterParams& params,
                         const TrainConfig& cfg) {
  return eval_batch(batch, params, cfg, nullptr).breakdown;
}

Gradients backward(const Batch& batch, const AdapterParams& params,
                   const TrainConfig& cfg) {
  Gradients grads = zero_gradients(params);
  const BatchEval eval = eval_batch(batch, params, cfg, &grads);
  if (!std::isfinite(eval.breakdown.total))
    throw_numeric("backward: non-finite loss");
  return grads;
}

namespace {

struct ValMetrics {
  double coverage = 0.0;
  double efficiency = 0.0;
  double entropy_mean = 0.0;
  double min_class_coverage = 0.0;
};

// Validation CP on corrected probabilities: the first half of the validation
// set calibrates, the second half is scored.
ValMetrics validate_epoch(const AdapterParams& params,
                          const Dataset& valid_set, double alpha) {
  const std::size_t n = valid_set.size();
  const std::size_t m = n / 2;
  const std::size_t num_classes = valid_set.num_classes();
  std::vector<double> cal_scores;
  cal_scores.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const SampleFwd fwd =
        forward_sample(params, valid_set.sample(i).probs.span());
    const SortedProbs sp = sort_desc_raw(fwd.probs);
    cal_scores.push_back(true_label_score(sp, valid_set.sample(i).label));
  }
  CalibrationResult cal = calibrate(cal_scores, alpha);
  cal.num_classes = num_classes;

  ValMetrics out;
  std::size_t hits = 0, sizes = 0;
  std::vector<std::size_t> class_count(num_classes, 0);
  std::vector<std::size_t> class_hits(num_classes, 0);
  for (std::size_t i = m; i < n; ++i) {
    const SampleFwd fwd =
        forward_sample(params, valid_set.sample(i).probs.span());
    out.entropy_mean += entropy_raw(fwd.probs);
    const PredictionSet set =
        predict_set(ProbVector::trusted(fwd.probs), cal);
    sizes += set.size();
    const std::size_t y = valid_set.sample(i).label;
    ++class_count[y];
    if (set.contains(y)) {
      ++hits;
      ++class_hits[y];
    }
  }
  const double n_eval = static_cast<double>(n - m);
  out.coverage = static_cast<double>(hits) / n_eval;
  out.efficiency = static_cast<double>(sizes) / n_eval;
  out.entropy_mean /= n_eval;
  out.min_class_coverage = 1.0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (class_count[k] == 0) continue;
    out.min_class_coverage =
        std::min(out.min_class_coverage,
                 static_cast<double>(class_hits[k]) /
                     static_cast<double>(class_count[k]));
  }
  return out;
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& cfg,
                  const std::vector<std::size_t>& hidden_dims) {
  cfg.validate();
  if (train_set.num_classes() != valid_set.num_classes())
    throw_invalid("train: class count mismatch between splits");
  if (cfg.epochs > 0 && valid_set.size() < 4)
    throw_invalid("train: validation set must hold >= 4 samples");

  const std::size_t num_classes = train_set.num_classes();
  std::vector<std::size_t> dims;
  dims.push_back(num_classes);
  for (std::size_t h : hidden_dims) dims.push_back(h);
  dims.push_back(num_classes);

  TrainResult result;
  result.params = AdapterParams::init(dims, cfg.seed, cfg.input_log_probs);
  if (cfg.epochs == 0) return result;

  Gradients m_state = zero_gradients(result.params);
  Gradients v_state = zero_gradients(result.params);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::size_t step = 0;

  Rng shuffle_rng(cfg.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  AdapterParams best = result.params;
  std::size_t best_epoch = 0;
  double best_eff = 0.0;
  double best_cov = -1.0;
  double best_min_class = -1.0;
  bool best_feasible = false;
  const double cov_floor = 1.0 - cfg.alpha - 0.01;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    LossBreakdown epoch_loss;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(start + cfg.batch_size, order.size());
      if (stop - start < 4) continue;  // leftover too small to split
      Batch batch;
      batch.base.reserve(stop - start);
      batch.labels.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        batch.base.push_back(train_set.sample(order[i]).probs);
        batch.labels.push_back(train_set.sample(order[i]).label);
      }

      Gradients grads = zero_gradients(result.params);
      const BatchEval eval = eval_batch(batch, result.params, cfg, &grads);
      if (!std::isfinite(eval.breakdown.total))
        throw_numeric("train: loss diverged at epoch " +
                      std::to_string(epoch));

      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t l = 0; l < result.params.num_layers(); ++l) {
        auto update = [&](std::vector<double>& theta,
                          const std::vector<double>& g,
                          std::vector<double>& m1, std::vector<double>& m2) {
          for (std::size_t i = 0; i < theta.size(); ++i) {
            m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * g[i];
            m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * g[i] * g[i];
            const double m_hat = m1[i] / bc1;
            const double v_hat = m2[i] / bc2;
            theta[i] -= cfg.learning_rate *
                            (m_hat / (std::sqrt(v_hat) + kEps)) +
                        cfg.learning_rate * cfg.weight_decay * theta[i];
          }
        };
        update(result.params.weights[l], grads.weights[l], m_state.weights[l],
               v_state.weights[l]);
        update(result.params.biases[l], grads.biases[l], m_state.biases[l],
               v_state.biases[l]);
      }

      epoch_loss.total += eval.breakdown.total;
      epoch_loss.focal += eval.breakdown.focal;
      epoch_loss.ineff += eval.breakdown.ineff;
      epoch_loss.cond += eval.breakdown.cond;
      epoch_loss.entropy_mean += eval.breakdown.entropy_mean;
      ++batches;
    }
    if (batches > 0) {
      const double inv = 1.0 / static_cast<double>(batches);
      epoch_loss.total *= inv;
      epoch_loss.focal *= inv;
      epoch_loss.ineff *= inv;
      epoch_loss.cond *= inv;
      epoch_loss.entropy_mean *= inv;
    }

    const ValMetrics val = validate_epoch(result.params, valid_set, cfg.alpha);
    result.history.push_back(EpochRecord{epoch, epoch_loss, val.coverage,
                                         val.efficiency, val.entropy_mean,
                                         val.min_class_coverage});

    const bool feasible = val.coverage >= cov_floor;
    bool better;
    if (!feasible) {
      better = !best_feasible && val.coverage > best_cov;
    } else if (!best_feasible) {
      better = true;
    } else if (cfg.conditional) {
      better = val.min_class_coverage > best_min_class ||
               (val.min_class_coverage == best_min_class &&
                val.efficiency < best_eff);
    } else {
      better = val.efficiency < best_eff;
    }
    if (better) {
      best = result.params;
      best_epoch = epoch;
      best_eff = val.efficiency;
      best_cov = val.coverage;
      best_min_class = val.min_class_coverage;
      best_feasible = best_feasible || feasible;
    }
  }

  result.params = std::move(best);
  result.best_epoch = best_epoch;
  return result;
}

Dataset apply_adapter(const AdapterParams& params, const Dataset& data) {
  std::vector<LabeledSample> corrected;
  corrected.reserve(data.size());
  for (const auto& s : data.samples()) {
    SampleFwd fwd = forward_sample(params, s.probs.span());
    corrected.push_back(
        LabeledSample{ProbVector::trusted(std::move(fwd.probs)), s.label});
  }
  std::optional<std::vector<ProbVector>> oracle;
  if (data.has_oracle()) oracle = data.oracle_all();
  return Dataset(std::move(corrected), std::move(oracle));
}

// ---------------------------------------------------------------------------
// serialization: "ECC3" | u32 version | u32 flags | u32 ndims | u32 dims[]
//                | per layer f64 weights row-major, f64 biases  (little-endian)
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'E', 'C', 'C', '3'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back((v >> (8 * b)) & 0xFF);
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int b = 0; b < 8; ++b) out.push_back((bits >> (8 * b)) & 0xFF);
}

struct ByteReader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size())
      throw_invalid("AdapterParams: truncated adapter file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
      v |= static_cast<std::uint32_t>(bytes[pos + b]) << (8 * b);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(bytes[pos + b]) << (8 * b);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
};

}  // namespace

std::vector<std::uint8_t> AdapterParams::serialize() const {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kFormatVersion);
  put_u32(out, input_log_probs ? 1u : 0u);
  put_u32(out, static_cast<std::uint32_t>(layer_dims.size()));
  for (std::size_t d : layer_dims)
    put_u32(out, static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < num_layers(); ++l) {
    for (double w : weights[l]) put_f64(out, w);
    for (double b : biases[l]) put_f64(out, b);
  }
  return out;
}

AdapterParams AdapterParams::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader reader{bytes};
  reader.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw_invalid("AdapterParams: bad magic, not an adapter file");
  reader.pos = 4;
  const std::uint32_t version = reader.u32();
  if (version != kFormatVersion)
    throw_invalid("AdapterParams: unsupported format version " +
                  std::to_string(version));
  const std::uint32_t flags = reader.u32();
  const std::uint32_t ndims = reader.u32();
  if (ndims < 2) throw_invalid("AdapterParams: bad layer count");

  AdapterParams params;
  params.input_log_probs = (flags & 1u) != 0;
  params.layer_dims.resize(ndims);
  for (auto& d : params.layer_dims) d = reader.u32();
  const std::size_t layers = ndims - 1;
  params.weights.resize(layers);
  params.biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    params.weights[l].resize(params.layer_dims[l] * params.layer_dims[l + 1]);
    for (double& w : params.weights[l]) w = reader.f64();
    params.biases[l].resize(params.layer_dims[l + 1]);
    for (double& b : params.biases[l]) b = reader.f64();
  }
  for (std::size_t l = 0; l < layers; ++l) {
    for (double w : params.weights[l])
      if (!std::isfinite(w)) throw_invalid("AdapterParams: non-finite weight");
    for (double b : params.biases[l])
      if (!std::isfinite(b)) throw_invalid("AdapterParams: non-finite bias");
  }
  return params;
}

void AdapterParams::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_config("AdapterParams: cannot open " + path);
  const std::vector<std::uint8_t> bytes = serialize();
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_config("AdapterParams: write failed for " + path);
}

AdapterParams AdapterParams::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_config("AdapterParams: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace ecc3
