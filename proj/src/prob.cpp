#include "ecc3/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecc3/dataset.hpp"

namespace ecc3 {

ProbVector ProbVector::from(std::vector<double> probs) {
  if (probs.size() < 2) throw_invalid("ProbVector: K must be >= 2");
  double sum = 0.0;
  for (double v : probs) {
    if (!std::isfinite(v)) throw_invalid("ProbVector: non-finite entry");
    if (v < 0.0 || v > 1.0 + kRenormTolerance)
      throw_invalid("ProbVector: entry outside [0, 1]");
    sum += v;
  }
  const double dev = std::abs(sum - 1.0);
  if (dev > kRenormTolerance + 1e-12)  // boundary rows are still accepted
    throw_invalid("ProbVector: entries sum to " + std::to_string(sum));
  if (dev > 0.0) {
    for (double& v : probs) v /= sum;
  }
  return ProbVector(std::move(probs));
}

LogitVector LogitVector::from(std::vector<double> logits) {
  if (logits.size() < 2) throw_invalid("LogitVector: K must be >= 2");
  for (double v : logits)
    if (!std::isfinite(v)) throw_invalid("LogitVector: non-finite entry");
  return LogitVector(std::move(logits));
}

double entropy_raw(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h < 0.0 ? 0.0 : h;
}

double entropy(const ProbVector& p) { return entropy_raw(p.span()); }

void softmax_raw(std::span<const double> z, std::span<double> out) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = std::exp(z[k] - zmax);
    sum += out[k];
  }
  for (std::size_t k = 0; k < z.size(); ++k) out[k] /= sum;
}

ProbVector softmax_with_temperature(const LogitVector& z, double temperature) {
  if (!(temperature > 0.0))
    throw_invalid("softmax_with_temperature: T must be > 0");
  const std::size_t k_count = z.num_classes();
  std::vector<double> scaled(k_count);
  for (std::size_t k = 0; k < k_count; ++k) scaled[k] = z[k] / temperature;
  std::vector<double> out(k_count);
  softmax_raw(scaled, out);
  return ProbVector::trusted(std::move(out));
}

SortedProbs sort_desc_raw(std::span<const double> p) {
  const std::size_t k_count = p.size();
  SortedProbs result;
  result.class_at_rank.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) result.class_at_rank[k] = k;
  // stable: ties keep ascending class index
  std::stable_sort(result.class_at_rank.begin(), result.class_at_rank.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  result.sorted.resize(k_count);
  result.rank_of_class.resize(k_count);
  for (std::size_t r = 0; r < k_count; ++r) {
    result.sorted[r] = p[result.class_at_rank[r]];
    result.rank_of_class[result.class_at_rank[r]] = r;
  }
  return result;
}

SortedProbs sort_desc(const ProbVector& p) { return sort_desc_raw(p.span()); }

Dataset::Dataset(std::vector<LabeledSample> samples,
                 std::optional<std::vector<ProbVector>> oracle)
    : samples_(std::move(samples)), oracle_(std::move(oracle)) {
  if (samples_.empty()) throw_invalid("Dataset: no samples");
  num_classes_ = samples_[0].probs.num_classes();
  for (const auto& s : samples_) {
    if (s.probs.num_classes() != num_classes_)
      throw_invalid("Dataset: inconsistent class count");
    if (s.label >= num_classes_) throw_invalid("Dataset: label out of range");
  }
  if (oracle_) {
    if (oracle_->size() != samples_.size())
      throw_invalid("Dataset: oracle row count mismatch");
    for (const auto& o : *oracle_) {
      if (o.num_classes() != num_classes_)
        throw_invalid("Dataset: oracle class count mismatch");
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<LabeledSample> samples;
  samples.reserve(indices.size());
  for (std::size_t i : indices) samples.push_back(samples_[i]);
  std::optional<std::vector<ProbVector>> oracle;
  if (oracle_) {
    std::vector<ProbVector> rows;
    rows.reserve(indices.size());
    for (std::size_t i : indices) rows.push_back((*oracle_)[i]);
    oracle = std::move(rows);
  }
  return Dataset(std::move(samples), std::move(oracle));
}

}  // namespace ecc3
