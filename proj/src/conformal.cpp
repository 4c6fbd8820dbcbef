#include "ecc3/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecc3/rng.hpp"

namespace ecc3 {

bool PredictionSet::contains(std::size_t y) const {
  return std::binary_search(members.begin(), members.end(), y);
}

CalibrationResult calibrate(const std::vector<double>& scores, double alpha,
                            const ScoreConfig& cfg) {
  if (scores.empty()) throw_invalid("calibrate: empty score set");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw_invalid("calibrate: alpha must be in (0, 1)");
  for (double s : scores)
    if (!std::isfinite(s)) throw_invalid("calibrate: non-finite score");

  const std::size_t n = scores.size();
  const auto k = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(n + 1)));

  CalibrationResult result;
  result.alpha = alpha;
  result.n_cal = n;
  result.score_cfg = cfg;
  if (k > n) {
    result.eta_hat = std::numeric_limits<double>::infinity();
  } else {
    std::vector<double> sorted(scores);
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    result.eta_hat = sorted[k - 1];
  }
  return result;
}

PredictionSet predict_set(const ProbVector& p, const CalibrationResult& cal) {
  if (cal.num_classes != 0 && cal.num_classes != p.num_classes())
    throw_invalid("predict_set: class count differs from calibration");
  PredictionSet set;
  if (std::isinf(cal.eta_hat)) {
    set.members.resize(p.num_classes());
    for (std::size_t k = 0; k < p.num_classes(); ++k) set.members[k] = k;
    return set;
  }
  const std::vector<double> v = scores_all(p, cal.score_cfg);
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k] <= cal.eta_hat) set.members.push_back(k);
  return set;
}

DatasetSplits split_dataset(const Dataset& d, const SplitRatios& ratios,
                            std::uint64_t seed) {
  if (!(ratios.train > 0 && ratios.valid > 0 && ratios.cal > 0 &&
        ratios.test > 0))
    throw_invalid("split_dataset: ratios must be positive");
  const std::size_t n = d.size();
  if (n < 4) throw_invalid("split_dataset: need at least 4 samples");

  const double total = ratios.train + ratios.valid + ratios.cal + ratios.test;
  const double parts[4] = {ratios.train, ratios.valid, ratios.cal,
                           ratios.test};
  std::size_t sizes[4];
  std::size_t assigned = 0;
  for (int b = 0; b < 4; ++b) {
    sizes[b] = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * parts[b] / total + 1e-12));
    assigned += sizes[b];
  }
  sizes[3] += n - assigned;  // remainder onto the test block

  Rng rng(seed);
  const std::vector<std::size_t> perm = rng.permutation(n);

  std::vector<std::size_t> blocks[4];
  std::size_t pos = 0;
  for (int b = 0; b < 4; ++b) {
    blocks[b].assign(perm.begin() + pos, perm.begin() + pos + sizes[b]);
    pos += sizes[b];
  }
  return DatasetSplits{d.subset(blocks[0]), d.subset(blocks[1]),
                       d.subset(blocks[2]), d.subset(blocks[3])};
}

CpResult run_cp(const Dataset& cal_set, const Dataset& test_set, double alpha,
                const ScoreConfig& cfg, std::uint64_t seed) {
  if (cal_set.num_classes() != test_set.num_classes())
    throw_invalid("run_cp: class count mismatch between splits");
  cfg.validate(cal_set.num_classes());

  Rng rng(seed);
  std::vector<double> cal_scores;
  cal_scores.reserve(cal_set.size());
  for (const auto& s : cal_set.samples()) {
    cal_scores.push_back(cfg.randomized
                             ? scores_all_randomized(s.probs, cfg,
                                                     rng.next_unit())[s.label]
                             : score(s.probs, s.label, cfg));
  }

  CpResult result;
  result.calibration = calibrate(cal_scores, alpha, cfg);
  result.calibration.num_classes = cal_set.num_classes();

  result.sets.reserve(test_set.size());
  for (const auto& s : test_set.samples()) {
    if (cfg.randomized && !std::isinf(result.calibration.eta_hat)) {
      const std::vector<double> v =
          scores_all_randomized(s.probs, cfg, rng.next_unit());
      PredictionSet set;
      for (std::size_t k = 0; k < v.size(); ++k)
        if (v[k] <= result.calibration.eta_hat) set.members.push_back(k);
      result.sets.push_back(std::move(set));
    } else {
      result.sets.push_back(predict_set(s.probs, result.calibration));
    }
  }
  return result;
}

}  // namespace ecc3
