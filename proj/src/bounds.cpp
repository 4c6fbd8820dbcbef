#include "ecc3/bounds.hpp"

#include <cmath>
#include <limits>

#include "ecc3/metrics.hpp"

namespace ecc3 {

double c_k(std::size_t num_classes) {
  if (num_classes < 1) throw_invalid("c_k: K must be >= 1");
  const double k = static_cast<double>(num_classes);
  double sum = 0.0;
  for (std::size_t i = 1; i <= num_classes; ++i)
    sum += std::exp(-static_cast<double>(i - 1) / k);
  return std::log(sum);
}

BoundReport prop1_check(const ProbVector& p) {
  const double ck = c_k(p.num_classes());
  const double h = entropy(p);
  const double branch_low = 1.0 + h;        // tight when H < C_K / 2
  const double branch_high = ck + 1.0 - h;  // tight when H > C_K / 2

  BoundReport report;
  report.lhs = avg_score(p);
  report.rhs = std::min(branch_low, branch_high);
  report.slack = report.rhs - report.lhs;
  report.holds = report.lhs <= report.rhs + kBoundSlackTolerance;
  report.components["C_K"] = ck;
  report.components["H"] = h;
  report.components["branch_low"] = branch_low;
  report.components["branch_high"] = branch_high;
  report.components["active_branch"] = branch_high < branch_low ? 1.0 : 0.0;
  return report;
}

TailSubset tail_subset(const Dataset& data, const CalibrationResult& cal) {
  TailSubset tail;
  tail.eta_hat = cal.eta_hat;
  tail.alpha = cal.alpha;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.sample(i);
    if (score(s.probs, s.label, cal.score_cfg) >= cal.eta_hat)
      tail.indices.push_back(i);
  }
  return tail;
}

namespace {

// E[sqrt(2 (H(oracle) + ln K)) | tail]
double oracle_radius_mean(const Dataset& data, const TailSubset& tail) {
  const double log_k = std::log(static_cast<double>(data.num_classes()));
  double sum = 0.0;
  for (std::size_t i : tail.indices)
    sum += std::sqrt(2.0 * (entropy(data.oracle(i)) + log_k));
  return sum / static_cast<double>(tail.indices.size());
}

double hoeffding_failure_prob(double alpha, double tau, std::size_t n,
                              double eta_hat) {
  const double range = 1.0 - eta_hat;
  if (range <= 0.0) return 1.0;
  return std::exp(-2.0 * alpha * tau * tau * static_cast<double>(n) /
                  (range * range));
}

}  // namespace

BoundReport prop2_check(const Dataset& cal_set, double alpha, double tau,
                        const ScoreConfig& cfg) {
  if (!cal_set.has_oracle())
    throw_invalid("prop2_check: dataset has no oracle distributions");
  if (!(tau > 0.0)) throw_invalid("prop2_check: tau must be > 0");

  std::vector<double> scores;
  scores.reserve(cal_set.size());
  for (const auto& s : cal_set.samples())
    scores.push_back(score(s.probs, s.label, cfg));
  CalibrationResult cal = calibrate(scores, alpha, cfg);
  cal.num_classes = cal_set.num_classes();

  BoundReport report;
  report.components["eta_hat"] = cal.eta_hat;
  report.components["tau"] = tau;

  if (!(cal.eta_hat < 1.0)) {
    // Hoeffding range collapses; the statement carries no content here.
    report.lhs = cal.eta_hat;
    report.rhs = std::numeric_limits<double>::infinity();
    report.slack = std::numeric_limits<double>::infinity();
    report.holds = true;
    report.components["failure_prob"] = 1.0;
    report.components["skipped"] = 1.0;
    return report;
  }

  const TailSubset tail = tail_subset(cal_set, cal);
  if (tail.indices.empty()) throw_invalid("prop2_check: empty tail subset");

  double avg_sum = 0.0;
  for (std::size_t i : tail.indices)
    avg_sum += avg_score(cal_set.sample(i).probs);
  const double avg_tail = avg_sum / static_cast<double>(tail.indices.size());
  const double c_pi_k = oracle_radius_mean(cal_set, tail);

  report.lhs = cal.eta_hat;
  report.rhs = avg_tail + c_pi_k + tau;
  report.slack = report.rhs - report.lhs;
  report.holds = report.lhs <= report.rhs + kBoundSlackTolerance;
  report.components["avg_score_tail"] = avg_tail;
  report.components["C_pi_K"] = c_pi_k;
  report.components["tail_size"] = static_cast<double>(tail.indices.size());
  // evaluated at the realized eta_hat of this draw; the statement's own
  // threshold appears inside its probability
  report.components["failure_prob"] =
      hoeffding_failure_prob(alpha, tau, cal.n_cal, cal.eta_hat);
  report.components["skipped"] = 0.0;
  return report;
}

double thm2_rhs(double alpha, double mu, double entropy_tail_mean,
                double ck_value, std::size_t num_classes, double c_constant) {
  const double k = static_cast<double>(num_classes);
  const double one_minus_alpha = 1.0 - alpha;
  return one_minus_alpha * (1.0 - 2.0 * mu) * entropy_tail_mean +
         one_minus_alpha * (mu * ck_value - (k + 1.0) / (2.0 * k)) +
         one_minus_alpha * (1.0 - 2.0 * mu) + c_constant;
}

BoundReport thm2_check(const Dataset& test_set, const CalibrationResult& cal,
                       double alpha, double tau) {
  if (!test_set.has_oracle())
    throw_invalid("thm2_check: dataset has no oracle distributions");
  if (!(tau > 0.0)) throw_invalid("thm2_check: tau must be > 0");

  const TailSubset tail = tail_subset(test_set, cal);
  if (tail.indices.empty()) throw_invalid("thm2_check: empty tail subset");

  const std::size_t k_count = test_set.num_classes();
  const double ck = c_k(k_count);

  double entropy_sum = 0.0;
  std::size_t high_entropy = 0;
  for (std::size_t i : tail.indices) {
    const double h = entropy(test_set.sample(i).probs);
    entropy_sum += h;
    if (h >= 0.5 * ck) ++high_entropy;
  }
  const double tail_n = static_cast<double>(tail.indices.size());
  const double entropy_tail = entropy_sum / tail_n;
  const double mu = static_cast<double>(high_entropy) / tail_n;
  const double c_constant = oracle_radius_mean(test_set, tail) + tau + 1.0;

  double size_sum = 0.0;
  for (const auto& s : test_set.samples())
    size_sum += static_cast<double>(predict_set(s.probs, cal).size());
  const double mean_size = size_sum / static_cast<double>(test_set.size());

  BoundReport report;
  report.lhs = mean_size / static_cast<double>(k_count);
  report.rhs = thm2_rhs(alpha, mu, entropy_tail, ck, k_count, c_constant);
  report.slack = report.rhs - report.lhs;
  report.holds = report.lhs <= report.rhs + kBoundSlackTolerance;
  report.components["C_K"] = ck;
  report.components["mu"] = mu;
  report.components["tau"] = tau;
  report.components["C"] = c_constant;
  report.components["entropy_tail_mean"] = entropy_tail;
  report.components["mean_set_size"] = mean_size;
  report.components["tail_size"] = tail_n;
  report.components["eta_hat"] = cal.eta_hat;
  report.components["failure_prob"] =
      hoeffding_failure_prob(alpha, tau, cal.n_cal, cal.eta_hat);
  return report;
}

}  // namespace ecc3
