#include "ecc3/tempering.hpp"

#include <algorithm>
#include <cmath>

#include "ecc3/metrics.hpp"

namespace ecc3 {

namespace {
// guards log(0) only; a coarser clamp would quantize sharpened tails into
// exact ties and distort the high-temperature end of the sweep
constexpr double kLogClamp = 1e-300;
}

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > lo) || n < 2)
    throw_invalid("log_spaced_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> grid(n);
  const double log_lo = std::log(lo), log_hi = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    grid[i] = std::exp(log_lo + t * (log_hi - log_lo));
  }
  return grid;
}

std::vector<double> default_temperature_grid() {
  return log_spaced_grid(0.05, 20.0, 40);
}

Dataset temper_dataset(const Dataset& data, double temperature) {
  if (!(temperature > 0.0)) throw_invalid("temper_dataset: T must be > 0");
  if (temperature == 1.0) return data;  // ln then softmax is the identity
  std::vector<LabeledSample> samples;
  samples.reserve(data.size());
  for (const auto& s : data.samples()) {
    std::vector<double> logits(s.probs.num_classes());
    for (std::size_t k = 0; k < logits.size(); ++k)
      logits[k] = std::log(std::max(s.probs[k], kLogClamp));
    samples.push_back(LabeledSample{
        softmax_with_temperature(LogitVector::trusted(std::move(logits)),
                                 temperature),
        s.label});
  }
  std::optional<std::vector<ProbVector>> oracle;
  if (data.has_oracle()) oracle = data.oracle_all();
  return Dataset(std::move(samples), std::move(oracle));
}

std::vector<SweepPoint> temp_sweep(const Dataset& cal_set,
                                   const Dataset& test_set, double alpha,
                                   std::span<const double> t_grid,
                                   const ScoreConfig& cfg) {
  if (t_grid.empty()) throw_invalid("temp_sweep: empty temperature grid");
  for (double t : t_grid)
    if (!(t > 0.0)) throw_invalid("temp_sweep: temperatures must be > 0");

  std::vector<SweepPoint> points;
  points.reserve(t_grid.size());
  for (double t : t_grid) {
    const Dataset cal_t = temper_dataset(cal_set, t);
    const Dataset test_t = temper_dataset(test_set, t);
    const CpResult cp = run_cp(cal_t, test_t, alpha, cfg);

    SweepPoint pt;
    pt.temperature = t;
    std::vector<std::size_t> labels(test_t.size());
    double entropy_sum = 0.0;
    for (std::size_t i = 0; i < test_t.size(); ++i) {
      labels[i] = test_t.sample(i).label;
      entropy_sum += entropy(test_t.sample(i).probs);
    }
    pt.mean_entropy = entropy_sum / static_cast<double>(test_t.size());
    pt.efficiency = efficiency(cp.sets);
    pt.coverage = coverage(cp.sets, labels);
    points.push_back(pt);
  }
  return points;
}

std::vector<SweepPoint> pareto_filter(std::span<const SweepPoint> points) {
  if (points.empty()) throw_invalid("pareto_filter: empty input");
  std::vector<SweepPoint> result;
  for (const SweepPoint& cand : points) {
    bool dominated = false;
    for (const SweepPoint& other : points) {
      const bool leq = other.mean_entropy <= cand.mean_entropy &&
                       other.efficiency <= cand.efficiency;
      const bool strict = other.mean_entropy < cand.mean_entropy ||
                          other.efficiency < cand.efficiency;
      if (leq && strict) {
        dominated = true;
        break;
      }
    }
    if (!dominated) result.push_back(cand);
  }
  std::sort(result.begin(), result.end(),
            [](const SweepPoint& a, const SweepPoint& b) {
              if (a.mean_entropy != b.mean_entropy)
                return a.mean_entropy < b.mean_entropy;
              return a.temperature < b.temperature;
            });
  // collapse exact (entropy, efficiency) duplicates
  result.erase(std::unique(result.begin(), result.end(),
                           [](const SweepPoint& a, const SweepPoint& b) {
                             return a.mean_entropy == b.mean_entropy &&
                                    a.efficiency == b.efficiency;
                           }),
               result.end());
  return result;
}

std::optional<SweepPoint> select_by_entropy(std::span<const SweepPoint> points,
                                            double threshold) {
  if (!(threshold > 0.0))
    throw_invalid("select_by_entropy: threshold must be > 0");
  std::optional<SweepPoint> best;
  for (const SweepPoint& pt : points) {
    if (pt.mean_entropy > threshold) continue;
    if (!best || pt.efficiency < best->efficiency) best = pt;
  }
  return best;
}

}  // namespace ecc3
