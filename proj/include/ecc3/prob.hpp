#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ecc3/error.hpp"

namespace ecc3 {

// A point on the K-simplex. Construction validates and, for small float
// drift (|sum-1| <= 1e-6, typical of exported float32 matrices), renormalizes
// by dividing by the sum; larger deviations are rejected.
class ProbVector {
 public:
  static constexpr double kSumTolerance = 1e-9;
  static constexpr double kRenormTolerance = 1e-6;

  static ProbVector from(std::vector<double> probs);

  // Skips validation; for values that satisfy the invariant by construction
  // (softmax output, normalized Dirichlet draws).
  static ProbVector trusted(std::vector<double> probs) {
    return ProbVector(std::move(probs));
  }

  std::size_t num_classes() const { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }
  const std::vector<double>& values() const { return probs_; }
  std::span<const double> span() const { return probs_; }

 private:
  explicit ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

// Raw pre-softmax scores; all entries must be finite, K >= 2.
class LogitVector {
 public:
  static LogitVector from(std::vector<double> logits);
  static LogitVector trusted(std::vector<double> logits) {
    return LogitVector(std::move(logits));
  }

  std::size_t num_classes() const { return logits_.size(); }
  double operator[](std::size_t k) const { return logits_[k]; }
  const std::vector<double>& values() const { return logits_; }

 private:
  explicit LogitVector(std::vector<double> logits)
      : logits_(std::move(logits)) {}
  std::vector<double> logits_;
};

// Descending sort of a probability vector with rank bookkeeping.
// rank_of_class[k] is the 0-based rank of class k; class_at_rank is the
// inverse permutation. Ties broken by ascending class index.
struct SortedProbs {
  std::vector<double> sorted;
  std::vector<std::size_t> rank_of_class;
  std::vector<std::size_t> class_at_rank;
};

// Shannon entropy in nats, with the 0*ln(0) = 0 convention. Range [0, ln K].
double entropy(const ProbVector& p);

// Entropy of a raw probability array (no simplex validation); used on hot
// paths where the invariant holds by construction.
double entropy_raw(std::span<const double> p);

// Temperature-scaled softmax, stabilized by max-logit subtraction. The
// argmax of the output matches the argmax of z (ties to the lowest index).
ProbVector softmax_with_temperature(const LogitVector& z, double temperature);

// Softmax on a raw logit array into `out` (same stabilization), T = 1.
void softmax_raw(std::span<const double> z, std::span<double> out);

SortedProbs sort_desc(const ProbVector& p);
SortedProbs sort_desc_raw(std::span<const double> p);

}  // namespace ecc3
