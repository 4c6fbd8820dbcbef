#pragma once

#include <vector>

#include "ecc3/prob.hpp"

namespace ecc3 {

enum class ScoreKind { aps, raps };

struct ScoreConfig {
  ScoreKind kind = ScoreKind::aps;
  double raps_lambda = 0.1;  // rank penalty weight, >= 0
  std::size_t raps_kreg = 1; // first penalized rank (1-based), in [1, K]
  bool randomized = false;   // uniform smoothing of the last included class

  void validate(std::size_t num_classes) const;
};

// APS non-conformity score: cumulative sorted probability through the rank
// of class y. Deterministic under the ascending-index tie-break.
double aps_score(const ProbVector& p, std::size_t y);

// All K scores at once; component y equals aps_score(p, y).
std::vector<double> aps_scores_all(const ProbVector& p);

// Randomized variant: mass strictly above y's rank plus u times y's own
// probability, u in [0, 1).
double aps_score_randomized(const ProbVector& p, std::size_t y, double u);

// RAPS: APS plus lambda * max(0, rank(y) - k_reg) with 1-based ranks.
double raps_score(const ProbVector& p, std::size_t y, const ScoreConfig& cfg);

// Mean of aps_scores_all; always in [(K+1)/(2K), 1].
double avg_score(const ProbVector& p);

// Dispatch on cfg.kind (deterministic form).
double score(const ProbVector& p, std::size_t y, const ScoreConfig& cfg);
std::vector<double> scores_all(const ProbVector& p, const ScoreConfig& cfg);
std::vector<double> scores_all_randomized(const ProbVector& p,
                                          const ScoreConfig& cfg, double u);

}  // namespace ecc3
