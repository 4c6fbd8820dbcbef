#include "ecc3/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ecc3/rng.hpp"

namespace ecc3 {

double coverage(std::span<const PredictionSet> sets,
                std::span<const std::size_t> labels) {
  if (sets.size() != labels.size())
    throw_invalid("coverage: sets/labels length mismatch");
  if (sets.empty()) throw_invalid("coverage: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sets.size(); ++i)
    if (sets[i].contains(labels[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(sets.size());
}

double efficiency(std::span<const PredictionSet> sets) {
  if (sets.empty()) throw_invalid("efficiency: empty input");
  std::size_t total = 0;
  for (const auto& s : sets) total += s.size();
  return static_cast<double>(total) / static_cast<double>(sets.size());
}

double empty_set_rate(std::span<const PredictionSet> sets) {
  if (sets.empty()) throw_invalid("empty_set_rate: empty input");
  std::size_t empties = 0;
  for (const auto& s : sets)
    if (s.size() == 0) ++empties;
  return static_cast<double>(empties) / static_cast<double>(sets.size());
}

std::vector<std::optional<double>> class_coverage(
    std::span<const PredictionSet> sets, std::span<const std::size_t> labels,
    std::size_t num_classes) {
  if (sets.size() != labels.size())
    throw_invalid("class_coverage: sets/labels length mismatch");
  std::vector<std::size_t> counts(num_classes, 0), hits(num_classes, 0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::size_t y = labels[i];
    if (y >= num_classes) throw_invalid("class_coverage: label out of range");
    ++counts[y];
    if (sets[i].contains(y)) ++hits[y];
  }
  std::vector<std::optional<double>> out(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (counts[k] > 0)
      out[k] = static_cast<double>(hits[k]) / static_cast<double>(counts[k]);
  }
  return out;
}

double coverage_distance(std::span<const std::optional<double>> class_cov,
                         double target, Norm norm) {
  if (!(target > 0.0 && target < 1.0))
    throw_invalid("coverage_distance: target must be in (0, 1)");
  double acc = 0.0;
  for (const auto& cov : class_cov) {
    if (!cov) continue;
    const double shortfall = target - *cov;
    if (shortfall <= 0.0) continue;
    acc += norm == Norm::l1 ? shortfall : shortfall * shortfall;
  }
  return norm == Norm::l1 ? acc : std::sqrt(acc);
}

double wsc(std::span<const ProbVector> features,
           std::span<const PredictionSet> sets,
           std::span<const std::size_t> labels, const WscConfig& cfg) {
  const std::size_t n = features.size();
  if (n < 2) throw_invalid("wsc: need at least 2 samples");
  if (sets.size() != n || labels.size() != n)
    throw_invalid("wsc: input length mismatch");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0))
    throw_invalid("wsc: delta must be in (0, 1]");
  if (cfg.n_directions < 1) throw_invalid("wsc: need at least one direction");

  const std::size_t dim = features[0].num_classes();
  const auto min_count = static_cast<std::size_t>(
      std::ceil(cfg.delta * static_cast<double>(n)));

  std::vector<char> covered(n);
  for (std::size_t i = 0; i < n; ++i)
    covered[i] = sets[i].contains(labels[i]) ? 1 : 0;

  Rng rng(cfg.seed);
  double worst = 1.0;
  std::vector<double> projection(n);
  std::vector<std::size_t> order(n);
  std::vector<double> prefix(n + 1);

  for (std::size_t d = 0; d < cfg.n_directions; ++d) {
    std::vector<double> direction(dim);
    double norm_sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      direction[k] = rng.next_normal();
      norm_sq += direction[k] * direction[k];
    }
    const double inv_norm = 1.0 / std::sqrt(std::max(norm_sq, 1e-300));

    for (std::size_t i = 0; i < n; ++i) {
      double t = 0.0;
      for (std::size_t k = 0; k < dim; ++k) t += direction[k] * features[i][k];
      projection[i] = t * inv_norm;
    }
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return projection[a] < projection[b];
    });

    prefix[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      prefix[i + 1] = prefix[i] + covered[order[i]];

    // every contiguous window of >= min_count sorted points is a slab
    for (std::size_t lo = 0; lo + min_count <= n; ++lo) {
      for (std::size_t hi = lo + min_count; hi <= n; ++hi) {
        const double cov =
            (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
        if (cov < worst) worst = cov;
      }
    }
  }
  return worst;
}

std::vector<std::size_t> default_sscv_bins(std::size_t num_classes) {
  std::vector<std::size_t> uppers;
  for (std::size_t edge : {std::size_t{1}, std::size_t{3}, std::size_t{6},
                           std::size_t{10}}) {
    if (edge < num_classes) uppers.push_back(edge);
  }
  uppers.push_back(num_classes);
  return uppers;
}

double sscv(std::span<const PredictionSet> sets,
            std::span<const std::size_t> labels, double alpha,
            std::vector<std::size_t> bin_uppers) {
  if (sets.size() != labels.size())
    throw_invalid("sscv: sets/labels length mismatch");
  if (sets.empty()) throw_invalid("sscv: empty input");
  std::size_t num_classes = 0;
  for (const auto& s : sets)
    num_classes = std::max(num_classes, s.size());
  if (bin_uppers.empty())
    bin_uppers = default_sscv_bins(std::max(num_classes, std::size_t{1}));

  std::vector<std::size_t> count(bin_uppers.size(), 0);
  std::vector<std::size_t> hits(bin_uppers.size(), 0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::size_t size = sets[i].size();
    std::size_t bin = bin_uppers.size() - 1;
    for (std::size_t b = 0; b < bin_uppers.size(); ++b) {
      if (size <= bin_uppers[b]) {
        bin = b;
        break;
      }
    }
    ++count[bin];
    if (sets[i].contains(labels[i])) ++hits[bin];
  }

  double worst = 0.0;
  for (std::size_t b = 0; b < bin_uppers.size(); ++b) {
    if (count[b] == 0) continue;
    const double cov =
        static_cast<double>(hits[b]) / static_cast<double>(count[b]);
    worst = std::max(worst, std::abs(cov - (1.0 - alpha)));
  }
  return worst;
}

EvalReport evaluate(const Dataset& test_set,
                    std::span<const PredictionSet> sets, double alpha,
                    const EvalOptions& opts) {
  if (sets.size() != test_set.size())
    throw_invalid("evaluate: sets/dataset length mismatch");
  std::vector<std::size_t> labels(test_set.size());
  std::vector<ProbVector> probs;
  probs.reserve(test_set.size());
  double entropy_sum = 0.0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    labels[i] = test_set.sample(i).label;
    probs.push_back(test_set.sample(i).probs);
    entropy_sum += entropy(test_set.sample(i).probs);
  }

  EvalReport report;
  report.coverage = coverage(sets, labels);
  report.efficiency = efficiency(sets);
  report.mean_entropy = entropy_sum / static_cast<double>(test_set.size());
  report.class_cov = class_coverage(sets, labels, test_set.num_classes());
  report.sscv = sscv(sets, labels, alpha,
                     opts.sscv_bins.empty()
                         ? default_sscv_bins(test_set.num_classes())
                         : opts.sscv_bins);
  report.empty_set_rate = empty_set_rate(sets);
  if (opts.wsc_directions > 0) {
    report.wsc = wsc(probs, sets, labels,
                     WscConfig{opts.wsc_delta, opts.wsc_directions,
                               opts.wsc_seed});
  }
  return report;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace ecc3
