#pragma once

#include <cstdint>
#include <vector>

#include "ecc3/dataset.hpp"
#include "ecc3/scores.hpp"

namespace ecc3 {

// Split-conformal threshold: the k-th smallest calibration score with
// k = ceil((1-alpha)(n+1)), or +inf when k > n.
struct CalibrationResult {
  double eta_hat = 0.0;
  double alpha = 0.1;
  std::size_t n_cal = 0;
  std::size_t num_classes = 0;  // 0 when calibrated from raw scores
  ScoreConfig score_cfg;
};

struct PredictionSet {
  std::vector<std::size_t> members;  // ascending class indices
  std::size_t size() const { return members.size(); }
  bool contains(std::size_t y) const;
};

CalibrationResult calibrate(const std::vector<double>& scores, double alpha,
                            const ScoreConfig& cfg = {});

// Classes whose non-conformity score is <= eta_hat. May be empty; eta = +inf
// yields the full label set.
PredictionSet predict_set(const ProbVector& p, const CalibrationResult& cal);

struct SplitRatios {
  double train = 2.0, valid = 1.0, cal = 4.0, test = 3.0;
};

struct DatasetSplits {
  Dataset train, valid, cal, test;
};

// Seeded disjoint cover with sizes floor(n * r_i / sum(r)); the remainder
// goes to the test block. Same seed, same partition.
DatasetSplits split_dataset(const Dataset& d, const SplitRatios& ratios,
                            std::uint64_t seed);

struct CpResult {
  CalibrationResult calibration;
  std::vector<PredictionSet> sets;  // one per test sample
};

// The three-step procedure: score the calibration labels, take the quantile,
// build one set per test sample. `seed` only feeds the randomized score
// variant; the default deterministic scores ignore it.
CpResult run_cp(const Dataset& cal_set, const Dataset& test_set, double alpha,
                const ScoreConfig& cfg, std::uint64_t seed = 0);

}  // namespace ecc3
