#include "ecc3/scores.hpp"

#include <string>

namespace ecc3 {

void ScoreConfig::validate(std::size_t num_classes) const {
  if (kind == ScoreKind::raps) {
    if (raps_lambda < 0.0) throw_invalid("ScoreConfig: raps_lambda < 0");
    if (raps_kreg < 1 || raps_kreg > num_classes)
      throw_invalid("ScoreConfig: raps_kreg outside [1, K]");
  }
}

namespace {

void check_label(const ProbVector& p, std::size_t y) {
  if (y >= p.num_classes())
    throw_invalid("score: class index " + std::to_string(y) +
                  " out of range for K=" + std::to_string(p.num_classes()));
}

}  // namespace

double aps_score(const ProbVector& p, std::size_t y) {
  check_label(p, y);
  const SortedProbs sp = sort_desc(p);
  const std::size_t rank = sp.rank_of_class[y];
  double cum = 0.0;
  for (std::size_t r = 0; r <= rank; ++r) cum += sp.sorted[r];
  return cum;
}

std::vector<double> aps_scores_all(const ProbVector& p) {
  const SortedProbs sp = sort_desc(p);
  const std::size_t k_count = p.num_classes();
  std::vector<double> out(k_count);
  double cum = 0.0;
  for (std::size_t r = 0; r < k_count; ++r) {
    cum += sp.sorted[r];
    out[sp.class_at_rank[r]] = cum;
  }
  return out;
}

double aps_score_randomized(const ProbVector& p, std::size_t y, double u) {
  check_label(p, y);
  const SortedProbs sp = sort_desc(p);
  const std::size_t rank = sp.rank_of_class[y];
  double cum = 0.0;
  for (std::size_t r = 0; r < rank; ++r) cum += sp.sorted[r];
  return cum + u * sp.sorted[rank];
}

double raps_score(const ProbVector& p, std::size_t y, const ScoreConfig& cfg) {
  check_label(p, y);
  cfg.validate(p.num_classes());
  const SortedProbs sp = sort_desc(p);
  const std::size_t rank = sp.rank_of_class[y];
  double cum = 0.0;
  for (std::size_t r = 0; r <= rank; ++r) cum += sp.sorted[r];
  const std::size_t rank1 = rank + 1;  // 1-based in the penalty
  if (rank1 > cfg.raps_kreg)
    cum += cfg.raps_lambda * static_cast<double>(rank1 - cfg.raps_kreg);
  return cum;
}

double avg_score(const ProbVector& p) {
  const SortedProbs sp = sort_desc(p);
  const std::size_t k_count = p.num_classes();
  // mean of the cumulative sums == sum_k ((K-k+1)/K) * sorted[k-1]
  double total = 0.0;
  double cum = 0.0;
  for (std::size_t r = 0; r < k_count; ++r) {
    cum += sp.sorted[r];
    total += cum;
  }
  return total / static_cast<double>(k_count);
}

double score(const ProbVector& p, std::size_t y, const ScoreConfig& cfg) {
  return cfg.kind == ScoreKind::aps ? aps_score(p, y) : raps_score(p, y, cfg);
}

std::vector<double> scores_all(const ProbVector& p, const ScoreConfig& cfg) {
  std::vector<double> out = aps_scores_all(p);
  if (cfg.kind == ScoreKind::raps) {
    cfg.validate(p.num_classes());
    const SortedProbs sp = sort_desc(p);
    for (std::size_t k = 0; k < out.size(); ++k) {
      const std::size_t rank1 = sp.rank_of_class[k] + 1;
      if (rank1 > cfg.raps_kreg)
        out[k] += cfg.raps_lambda * static_cast<double>(rank1 - cfg.raps_kreg);
    }
  }
  return out;
}

std::vector<double> scores_all_randomized(const ProbVector& p,
                                          const ScoreConfig& cfg, double u) {
  const SortedProbs sp = sort_desc(p);
  const std::size_t k_count = p.num_classes();
  std::vector<double> out(k_count);
  double below = 0.0;
  for (std::size_t r = 0; r < k_count; ++r) {
    out[sp.class_at_rank[r]] = below + u * sp.sorted[r];
    below += sp.sorted[r];
  }
  if (cfg.kind == ScoreKind::raps) {
    cfg.validate(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::size_t rank1 = sp.rank_of_class[k] + 1;
      if (rank1 > cfg.raps_kreg)
        out[k] += cfg.raps_lambda * static_cast<double>(rank1 - cfg.raps_kreg);
    }
  }
  return out;
}

}  // namespace ecc3
