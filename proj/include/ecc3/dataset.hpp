#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ecc3/prob.hpp"

namespace ecc3 {

struct LabeledSample {
  ProbVector probs;
  std::size_t label;  // in [0, K)
};

// Per-sample probability vectors plus labels. The oracle field carries the
// true conditional distributions when they are known (synthetic data only);
// bound checks that quantify over the oracle require it.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<LabeledSample> samples,
          std::optional<std::vector<ProbVector>> oracle = std::nullopt);

  std::size_t size() const { return samples_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  bool has_oracle() const { return oracle_.has_value(); }

  const LabeledSample& sample(std::size_t i) const { return samples_[i]; }
  const std::vector<LabeledSample>& samples() const { return samples_; }
  const ProbVector& oracle(std::size_t i) const { return (*oracle_)[i]; }
  const std::vector<ProbVector>& oracle_all() const { return *oracle_; }

  // New dataset holding the given sample indices, oracle rows included.
  Dataset subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<LabeledSample> samples_;
  std::optional<std::vector<ProbVector>> oracle_;
  std::size_t num_classes_ = 0;
};

}  // namespace ecc3
