#pragma once

#include <map>
#include <string>
#include <vector>

#include "ecc3/conformal.hpp"
#include "ecc3/dataset.hpp"

namespace ecc3 {

// Calibration-tail samples: those whose true-label score is >= eta_hat.
// With continuous scores the tail holds roughly alpha*n samples.
struct TailSubset {
  std::vector<std::size_t> indices;
  double eta_hat = 0.0;
  double alpha = 0.1;
};

// One inequality audit. `holds` means lhs <= rhs + 1e-9; components carries
// every constant that enters the right-hand side so reports can be replayed
// term by term.
struct BoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double slack = 0.0;  // rhs - lhs
  std::map<std::string, double> components;
};

inline constexpr double kBoundSlackTolerance = 1e-9;

/// The constant ln(sum_{k=1..K} exp(-(k-1)/K)). Zero at K = 1, strictly
/// increasing in K, below ln(K) + 1. Half of it is the entropy where the
/// per-sample bound switches branches.
double c_k(std::size_t num_classes);

/// Per-sample bound: avg_score(p) <= min(C_K + 1 - H(p), 1 + H(p)).
/// components: C_K, H, branch_low (1 + H), branch_high (C_K + 1 - H),
/// active_branch (0 = low-entropy branch 1+H, 1 = high-entropy branch).
BoundReport prop1_check(const ProbVector& p);

TailSubset tail_subset(const Dataset& data, const CalibrationResult& cal);

/// Quantile bound: eta_hat <= E[avg_score | tail] + E[sqrt(2(H(oracle)+ln K))
/// | tail] + tau, which fails with probability at most
/// exp(-2 alpha tau^2 n / (1 - eta_hat)^2). Needs oracle distributions.
/// When eta_hat >= 1 the failure probability is reported as 1 and the
/// comparison is skipped (component skipped = 1).
BoundReport prop2_check(const Dataset& cal_set, double alpha, double tau,
                        const ScoreConfig& cfg);

/// Expected-size bound with the explicit constant chain:
///   E|C| / K <= (1-a)(1-2mu) E[H(p_hat) | tail]
///             + (1-a)(mu C_K - (K+1)/(2K)) + (1-a)(1-2mu) + C,
///   C = E[sqrt(2(H(oracle)+ln K)) | tail] + tau + 1,
///   mu = P(H(p_hat) >= C_K / 2 | tail).
/// The tail is taken over `test_set` (exchangeable with calibration).
BoundReport thm2_check(const Dataset& test_set, const CalibrationResult& cal,
                       double alpha, double tau);

/// Right-hand side of the expected-size bound as a function of its
/// components; used for the mu-monotonicity audit.
double thm2_rhs(double alpha, double mu, double entropy_tail_mean,
                double ck_value, std::size_t num_classes, double c_constant);

}  // namespace ecc3
