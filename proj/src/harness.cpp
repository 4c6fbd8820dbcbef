#include "ecc3/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ecc3/rng.hpp"

namespace ecc3 {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_size_list(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string fmt_double_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(xs[i]);
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const KvConfig& kv,
                                         const std::string& key,
                                         std::vector<std::size_t> fallback) {
  if (!kv.has(key)) return fallback;
  std::vector<std::size_t> out;
  for (double v : kv.get_double_list(key)) {
    if (v < 0.0 || v != std::floor(v))
      throw_config("config key '" + key + "': expected integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

Distortion parse_distortion(const std::string& text) {
  const std::size_t colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  double param = 1.0;
  if (colon != std::string::npos) {
    try {
      param = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw_config("synth_distortion: bad parameter in '" + text + "'");
    }
  }
  if (kind == "none") return {DistortionKind::none, 1.0};
  if (kind == "sharpen") return {DistortionKind::sharpen, param};
  if (kind == "blur") return {DistortionKind::blur, param};
  if (kind == "logit_noise") return {DistortionKind::logit_noise, param};
  if (kind == "class_sharpen") return {DistortionKind::class_sharpen, param};
  throw_config("synth_distortion: unknown kind '" + kind + "'");
}

std::string format_distortion(const Distortion& d) {
  switch (d.kind) {
    case DistortionKind::none:
      return "none";
    case DistortionKind::sharpen:
      return "sharpen:" + fmt_double(d.param);
    case DistortionKind::blur:
      return "blur:" + fmt_double(d.param);
    case DistortionKind::logit_noise:
      return "logit_noise:" + fmt_double(d.param);
    case DistortionKind::class_sharpen:
      return "class_sharpen:" + fmt_double(d.param);
  }
  return "none";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv) {
  ExperimentConfig cfg;
  cfg.probs_path = kv.get_optional_string("probs_path");
  cfg.labels_path = kv.get_optional_string("labels_path");
  cfg.oracle_path = kv.get_optional_string("oracle_path");
  cfg.out_dir = kv.get_string("out_dir", cfg.out_dir);

  cfg.alpha = kv.get_double("alpha", cfg.alpha);
  const std::string score = kv.get_string("score", "aps");
  if (score == "aps") {
    cfg.score_cfg.kind = ScoreKind::aps;
  } else if (score == "raps") {
    cfg.score_cfg.kind = ScoreKind::raps;
  } else {
    throw_config("config key 'score': expected aps or raps");
  }
  cfg.score_cfg.raps_lambda =
      kv.get_double("raps_lambda", cfg.score_cfg.raps_lambda);
  cfg.score_cfg.raps_kreg = kv.get_size("raps_kreg", cfg.score_cfg.raps_kreg);
  cfg.score_cfg.randomized =
      kv.get_bool("randomized", cfg.score_cfg.randomized);

  if (kv.has("split_ratios")) {
    const std::vector<double> parts = kv.get_double_list("split_ratios");
    if (parts.size() != 4)
      throw_config("split_ratios: expected train:valid:cal:test");
    cfg.ratios = SplitRatios{parts[0], parts[1], parts[2], parts[3]};
  }
  cfg.n_splits = kv.get_size("n_splits", cfg.n_splits);
  cfg.seed = kv.get_u64("seed", cfg.seed);

  cfg.train_cfg.beta = kv.get_double("beta", cfg.train_cfg.beta);
  cfg.train_cfg.gamma = kv.get_double("gamma", cfg.train_cfg.gamma);
  cfg.train_cfg.learning_rate =
      kv.get_double("learning_rate", cfg.train_cfg.learning_rate);
  cfg.train_cfg.weight_decay =
      kv.get_double("weight_decay", cfg.train_cfg.weight_decay);
  cfg.train_cfg.epochs = kv.get_size("epochs", cfg.train_cfg.epochs);
  cfg.train_cfg.batch_size =
      kv.get_size("batch_size", cfg.train_cfg.batch_size);
  cfg.train_cfg.sig_temp = kv.get_double("sig_temp", cfg.train_cfg.sig_temp);
  cfg.train_cfg.kappa = kv.get_double("kappa", cfg.train_cfg.kappa);
  cfg.train_cfg.conditional =
      kv.get_bool("conditional", cfg.train_cfg.conditional);
  cfg.input_log_probs = kv.get_bool("input_log_probs", cfg.input_log_probs);
  cfg.train_cfg.input_log_probs = cfg.input_log_probs;
  cfg.train_cfg.alpha = cfg.alpha;
  cfg.train_cfg.seed = cfg.seed;
  cfg.hidden_dims = parse_size_list(kv, "hidden_dims", cfg.hidden_dims);
  cfg.repeats = kv.get_size("repeats", cfg.repeats);
  if (cfg.repeats < 1) throw_config("repeats must be >= 1");

  if (kv.has("sweep_grid")) {
    const std::string text = kv.get_string("sweep_grid", "");
    if (text.rfind("log:", 0) == 0) {
      double lo = 0, hi = 0, n = 0;
      if (std::sscanf(text.c_str(), "log:%lf:%lf:%lf", &lo, &hi, &n) != 3)
        throw_config("sweep_grid: expected log:<lo>:<hi>:<n>");
      cfg.sweep_grid = log_spaced_grid(lo, hi, static_cast<std::size_t>(n));
    } else {
      cfg.sweep_grid = kv.get_double_list("sweep_grid");
    }
  }
  cfg.entropy_threshold = kv.get_optional_double("entropy_threshold");
  cfg.adapter_path = kv.get_optional_string("adapter_path");

  cfg.wsc_directions = kv.get_size("wsc_directions", cfg.wsc_directions);
  cfg.wsc_delta = kv.get_double("wsc_delta", cfg.wsc_delta);

  cfg.tau = kv.get_double("tau", cfg.tau);
  cfg.bound_trials = kv.get_size("bound_trials", cfg.bound_trials);
  cfg.prop1_samples = kv.get_size("prop1_samples", cfg.prop1_samples);
  cfg.prop1_class_counts =
      parse_size_list(kv, "prop1_class_counts", cfg.prop1_class_counts);
  cfg.strict = kv.get_bool("strict", cfg.strict);

  cfg.synth.num_classes = kv.get_size("synth_k", cfg.synth.num_classes);
  cfg.synth.n = kv.get_size("synth_n", cfg.synth.n);
  cfg.synth.dirichlet_concentration =
      kv.get_double("synth_concentration", cfg.synth.dirichlet_concentration);
  cfg.synth.base_distortion =
      parse_distortion(kv.get_string("synth_distortion", "sharpen:0.25"));
  cfg.synth.extra_logit_noise =
      kv.get_double("synth_noise", cfg.synth.extra_logit_noise);
  if (cfg.synth.extra_logit_noise < 0.0)
    throw_config("synth_noise must be >= 0");
  if (kv.has("synth_priors")) {
    cfg.synth.class_priors = kv.get_double_list("synth_priors");
  }
  cfg.synth.rare_blur_temperature =
      kv.get_double("synth_rare_blur", cfg.synth.rare_blur_temperature);
  cfg.synth.rare_noise_sigma =
      kv.get_double("synth_rare_noise", cfg.synth.rare_noise_sigma);
  cfg.synth.seed = cfg.seed;
  cfg.synth_imbalanced = kv.get_bool("synth_imbalanced", cfg.synth_imbalanced);
  return cfg;
}

KvConfig ExperimentConfig::to_kv() const {
  KvConfig kv;
  if (probs_path) kv.set("probs_path", *probs_path);
  if (labels_path) kv.set("labels_path", *labels_path);
  if (oracle_path) kv.set("oracle_path", *oracle_path);
  kv.set("out_dir", out_dir);
  kv.set("alpha", fmt_double(alpha));
  kv.set("score", score_cfg.kind == ScoreKind::aps ? "aps" : "raps");
  kv.set("raps_lambda", fmt_double(score_cfg.raps_lambda));
  kv.set("raps_kreg", std::to_string(score_cfg.raps_kreg));
  kv.set("randomized", score_cfg.randomized ? "true" : "false");
  kv.set("split_ratios", fmt_double(ratios.train) + ":" +
                             fmt_double(ratios.valid) + ":" +
                             fmt_double(ratios.cal) + ":" +
                             fmt_double(ratios.test));
  kv.set("n_splits", std::to_string(n_splits));
  kv.set("seed", std::to_string(seed));
  kv.set("beta", fmt_double(train_cfg.beta));
  kv.set("gamma", fmt_double(train_cfg.gamma));
  kv.set("learning_rate", fmt_double(train_cfg.learning_rate));
  kv.set("weight_decay", fmt_double(train_cfg.weight_decay));
  kv.set("epochs", std::to_string(train_cfg.epochs));
  kv.set("batch_size", std::to_string(train_cfg.batch_size));
  kv.set("sig_temp", fmt_double(train_cfg.sig_temp));
  kv.set("kappa", fmt_double(train_cfg.kappa));
  kv.set("conditional", train_cfg.conditional ? "true" : "false");
  kv.set("input_log_probs", input_log_probs ? "true" : "false");
  kv.set("hidden_dims", fmt_size_list(hidden_dims));
  kv.set("repeats", std::to_string(repeats));
  if (!sweep_grid.empty()) kv.set("sweep_grid", fmt_double_list(sweep_grid));
  if (entropy_threshold)
    kv.set("entropy_threshold", fmt_double(*entropy_threshold));
  if (adapter_path) kv.set("adapter_path", *adapter_path);
  kv.set("wsc_directions", std::to_string(wsc_directions));
  kv.set("wsc_delta", fmt_double(wsc_delta));
  kv.set("tau", fmt_double(tau));
  kv.set("bound_trials", std::to_string(bound_trials));
  kv.set("prop1_samples", std::to_string(prop1_samples));
  kv.set("prop1_class_counts", fmt_size_list(prop1_class_counts));
  kv.set("strict", strict ? "true" : "false");
  kv.set("synth_k", std::to_string(synth.num_classes));
  kv.set("synth_n", std::to_string(synth.n));
  kv.set("synth_concentration", fmt_double(synth.dirichlet_concentration));
  kv.set("synth_distortion", format_distortion(synth.base_distortion));
  kv.set("synth_noise", fmt_double(synth.extra_logit_noise));
  if (synth.class_priors)
    kv.set("synth_priors", fmt_double_list(*synth.class_priors));
  kv.set("synth_rare_blur", fmt_double(synth.rare_blur_temperature));
  kv.set("synth_rare_noise", fmt_double(synth.rare_noise_sigma));
  kv.set("synth_imbalanced", synth_imbalanced ? "true" : "false");
  return kv;
}

Dataset load_or_generate(const ExperimentConfig& cfg) {
  if (cfg.probs_path) {
    if (!cfg.labels_path)
      throw_config("labels_path is required when probs_path is given");
    return ingest(*cfg.probs_path, *cfg.labels_path, cfg.oracle_path);
  }
  SynthConfig synth = cfg.synth;
  synth.seed = cfg.seed;
  return cfg.synth_imbalanced ? imbalanced_variant(synth) : generate(synth);
}

namespace {

struct Pool {
  Dataset train, valid, pool;
  std::size_t n_cal = 0, n_test = 0;
};

Dataset concat(const Dataset& a, const Dataset& b) {
  std::vector<LabeledSample> samples;
  samples.reserve(a.size() + b.size());
  for (const auto& s : a.samples()) samples.push_back(s);
  for (const auto& s : b.samples()) samples.push_back(s);
  std::optional<std::vector<ProbVector>> oracle;
  if (a.has_oracle() && b.has_oracle()) {
    std::vector<ProbVector> rows;
    rows.reserve(a.size() + b.size());
    for (const auto& o : a.oracle_all()) rows.push_back(o);
    for (const auto& o : b.oracle_all()) rows.push_back(o);
    oracle = std::move(rows);
  }
  return Dataset(std::move(samples), std::move(oracle));
}

Pool make_pool(const Dataset& data, const ExperimentConfig& cfg) {
  DatasetSplits splits = split_dataset(data, cfg.ratios, cfg.seed);
  Pool pool;
  pool.n_cal = splits.cal.size();
  pool.n_test = splits.test.size();
  pool.pool = concat(splits.cal, splits.test);
  pool.train = std::move(splits.train);
  pool.valid = std::move(splits.valid);
  return pool;
}

// One conformal replica: reshuffle the cal/test pool with seed + index.
std::pair<Dataset, Dataset> replica_split(const Dataset& pool,
                                          std::size_t n_cal,
                                          std::size_t n_test,
                                          std::uint64_t replica_seed) {
  Rng rng(replica_seed);
  const std::vector<std::size_t> perm = rng.permutation(pool.size());
  std::vector<std::size_t> cal_idx(perm.begin(), perm.begin() + n_cal);
  std::vector<std::size_t> test_idx(perm.begin() + n_cal,
                                    perm.begin() + n_cal + n_test);
  return {pool.subset(cal_idx), pool.subset(test_idx)};
}

SplitRecord make_record(std::size_t split_index, std::size_t repeat,
                        const ExperimentConfig& cfg, const Dataset& test_set,
                        const CpResult& cp) {
  EvalOptions opts;
  opts.wsc_directions = cfg.wsc_directions;
  opts.wsc_delta = cfg.wsc_delta;
  opts.wsc_seed = cfg.seed + split_index;

  SplitRecord rec;
  rec.split_index = split_index;
  rec.repeat = repeat;
  rec.eta_hat = cp.calibration.eta_hat;
  rec.eval = evaluate(test_set, cp.sets, cfg.alpha, opts);
  double min_cov = 1.0;
  for (const auto& cov : rec.eval.class_cov)
    if (cov && *cov < min_cov) min_cov = *cov;
  rec.min_class_coverage = min_cov;
  rec.coverage_distance_l1 =
      coverage_distance(rec.eval.class_cov, 1.0 - cfg.alpha, Norm::l1);
  rec.coverage_distance_l2 =
      coverage_distance(rec.eval.class_cov, 1.0 - cfg.alpha, Norm::l2);
  return rec;
}

std::vector<SplitRecord> evaluate_pool(const Pool& pool,
                                       const ExperimentConfig& cfg,
                                       std::size_t repeat) {
  std::vector<SplitRecord> records;
  records.reserve(cfg.n_splits);
  for (std::size_t i = 1; i <= cfg.n_splits; ++i) {
    const auto [cal_set, test_set] =
        replica_split(pool.pool, pool.n_cal, pool.n_test, cfg.seed + i);
    const CpResult cp =
        run_cp(cal_set, test_set, cfg.alpha, cfg.score_cfg, cfg.seed + i);
    records.push_back(make_record(i, repeat, cfg, test_set, cp));
  }
  return records;
}

void aggregate_records(RunReport& report) {
  if (report.splits.empty()) return;
  auto collect = [&](auto getter) {
    std::vector<double> values;
    values.reserve(report.splits.size());
    for (const auto& rec : report.splits) values.push_back(getter(rec));
    return values;
  };
  report.aggregate["coverage"] =
      mean_std(collect([](const SplitRecord& r) { return r.eval.coverage; }));
  report.aggregate["efficiency"] = mean_std(
      collect([](const SplitRecord& r) { return r.eval.efficiency; }));
  report.aggregate["mean_entropy"] = mean_std(
      collect([](const SplitRecord& r) { return r.eval.mean_entropy; }));
  report.aggregate["sscv"] =
      mean_std(collect([](const SplitRecord& r) { return r.eval.sscv; }));
  report.aggregate["empty_set_rate"] = mean_std(
      collect([](const SplitRecord& r) { return r.eval.empty_set_rate; }));
  report.aggregate["eta_hat"] =
      mean_std(collect([](const SplitRecord& r) { return r.eta_hat; }));
  report.aggregate["min_class_coverage"] = mean_std(
      collect([](const SplitRecord& r) { return r.min_class_coverage; }));
  report.aggregate["coverage_distance_l1"] = mean_std(
      collect([](const SplitRecord& r) { return r.coverage_distance_l1; }));
  report.aggregate["coverage_distance_l2"] = mean_std(
      collect([](const SplitRecord& r) { return r.coverage_distance_l2; }));
  if (report.splits.front().eval.wsc >= 0.0) {
    report.aggregate["wsc"] =
        mean_std(collect([](const SplitRecord& r) { return r.eval.wsc; }));
  }
}

RunReport new_report(const ExperimentConfig& cfg, const std::string& command) {
  RunReport report;
  report.command = command;
  report.seed = cfg.seed;
  report.effective_config = cfg.to_kv();
  report.config_hash = fnv1a_hex(report.effective_config.canonical_text());
  return report;
}

Dataset maybe_correct(const ExperimentConfig& cfg, const Dataset& data) {
  if (!cfg.adapter_path) return data;
  const AdapterParams params = AdapterParams::load(*cfg.adapter_path);
  return apply_adapter(params, data);
}

}  // namespace

RunReport cmd_evaluate(const ExperimentConfig& cfg) {
  RunReport report = new_report(cfg, "evaluate");
  const Dataset data = load_or_generate(cfg);
  Pool pool = make_pool(data, cfg);
  pool.pool = maybe_correct(cfg, pool.pool);
  report.splits = evaluate_pool(pool, cfg, 0);
  aggregate_records(report);
  return report;
}

RunReport cmd_train(const ExperimentConfig& cfg) {
  RunReport report = new_report(cfg, "train");
  const Dataset data = load_or_generate(cfg);
  const Pool pool = make_pool(data, cfg);

  std::filesystem::create_directories(cfg.out_dir);
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    TrainConfig tcfg = cfg.train_cfg;
    tcfg.alpha = cfg.alpha;
    tcfg.seed = cfg.seed + r;
    const TrainResult trained =
        train(pool.train, pool.valid, tcfg, cfg.hidden_dims);

    const std::string file =
        cfg.out_dir + "/" +
        (r == 0 ? std::string("adapter.ecc3")
                : "adapter_r" + std::to_string(r + 1) + ".ecc3");
    trained.params.save(file);
    report.adapter_files.push_back(file);
    report.histories.push_back(trained.history);
    report.stats["best_epoch_r" + std::to_string(r + 1)] =
        static_cast<double>(trained.best_epoch);

    Pool corrected = pool;
    corrected.pool = apply_adapter(trained.params, pool.pool);
    std::vector<SplitRecord> records = evaluate_pool(corrected, cfg, r);
    report.splits.insert(report.splits.end(), records.begin(), records.end());
  }
  aggregate_records(report);
  return report;
}

RunReport cmd_sweep(const ExperimentConfig& cfg) {
  RunReport report = new_report(cfg, "sweep");
  const Dataset data = load_or_generate(cfg);
  Pool pool = make_pool(data, cfg);
  pool.pool = maybe_correct(cfg, pool.pool);

  // sweep on the first conformal replica, so a {1.0} grid reproduces the
  // first evaluate record
  const auto [cal_set, test_set] =
      replica_split(pool.pool, pool.n_cal, pool.n_test, cfg.seed + 1);
  const std::vector<double> grid =
      cfg.sweep_grid.empty() ? default_temperature_grid() : cfg.sweep_grid;
  report.sweep = temp_sweep(cal_set, test_set, cfg.alpha, grid, cfg.score_cfg);
  report.pareto = pareto_filter(report.sweep);
  if (cfg.entropy_threshold) {
    report.entropy_selection =
        select_by_entropy(report.sweep, *cfg.entropy_threshold);
    report.stats["entropy_threshold"] = *cfg.entropy_threshold;
  }
  report.stats["grid_points"] = static_cast<double>(grid.size());
  return report;
}

RunReport cmd_verify_bounds(const ExperimentConfig& cfg) {
  RunReport report = new_report(cfg, "verify-bounds");
  bool all_ok = true;

  // per-sample bound fuzz over random simplex points
  Rng rng(cfg.seed);
  std::size_t violations = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  double crossing_err = 0.0;
  for (std::size_t num_classes : cfg.prop1_class_counts) {
    for (std::size_t s = 0; s < cfg.prop1_samples; ++s) {
      std::vector<double> draws(num_classes);
      double sum = 0.0;
      for (auto& v : draws) {
        v = rng.next_gamma(1.0);
        sum += v;
      }
      for (auto& v : draws) v /= sum;
      const BoundReport check =
          prop1_check(ProbVector::trusted(std::move(draws)));
      if (!check.holds) ++violations;
      min_slack = std::min(min_slack, check.slack);
    }
    // deterministic probes: one-hot and uniform
    std::vector<double> onehot(num_classes, 0.0);
    onehot[0] = 1.0;
    std::vector<double> uniform(num_classes,
                                1.0 / static_cast<double>(num_classes));
    for (auto& probe : {onehot, uniform}) {
      const BoundReport check = prop1_check(ProbVector::trusted(probe));
      if (!check.holds) ++violations;
      min_slack = std::min(min_slack, check.slack);
    }
    // the two branch expressions cross where C_K + 1 - H == 1 + H
    const double ck = c_k(num_classes);
    double lo = 0.0, hi = std::log(static_cast<double>(num_classes));
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (ck + 1.0 - mid > 1.0 + mid)
        lo = mid;
      else
        hi = mid;
    }
    crossing_err =
        std::max(crossing_err, std::abs(0.5 * (lo + hi) - 0.5 * ck));
  }
  report.stats["prop1_samples_per_k"] =
      static_cast<double>(cfg.prop1_samples);
  report.stats["prop1_violations"] = static_cast<double>(violations);
  report.stats["prop1_min_slack"] = min_slack;
  report.stats["prop1_branch_crossing_max_error"] = crossing_err;
  if (violations > 0 || crossing_err > 1e-9) all_ok = false;

  // tightness probe the reports can be audited against
  report.bounds["prop1_onehot_k2"] =
      prop1_check(ProbVector::from({1.0, 0.0}));

  const Dataset data = load_or_generate(cfg);
  if (!data.has_oracle() || cfg.bound_trials == 0) {
    report.stats["oracle_checks_skipped"] = 1.0;
  } else {
    const Pool pool = make_pool(data, cfg);
    std::size_t prop2_holds = 0, thm2_holds = 0;
    double prop2_fp_sum = 0.0, thm2_fp_sum = 0.0;
    for (std::size_t t = 1; t <= cfg.bound_trials; ++t) {
      const auto [cal_set, test_set] =
          replica_split(pool.pool, pool.n_cal, pool.n_test, cfg.seed + t);

      const BoundReport prop2 =
          prop2_check(cal_set, cfg.alpha, cfg.tau, cfg.score_cfg);
      if (prop2.holds) ++prop2_holds;
      prop2_fp_sum += prop2.components.at("failure_prob");
      if (t == cfg.bound_trials) report.bounds["prop2"] = prop2;

      std::vector<double> cal_scores;
      cal_scores.reserve(cal_set.size());
      for (const auto& s : cal_set.samples())
        cal_scores.push_back(score(s.probs, s.label, cfg.score_cfg));
      CalibrationResult cal = calibrate(cal_scores, cfg.alpha, cfg.score_cfg);
      cal.num_classes = cal_set.num_classes();
      const BoundReport thm2 = thm2_check(test_set, cal, cfg.alpha, cfg.tau);
      if (thm2.holds) ++thm2_holds;
      thm2_fp_sum += thm2.components.at("failure_prob");
      if (t == cfg.bound_trials) report.bounds["thm2"] = thm2;
    }
    const double trials = static_cast<double>(cfg.bound_trials);
    auto admit = [&](double holds, double fp_mean) {
      // allowed failure rate plus a 3-sigma binomial margin
      const double sigma = std::sqrt(std::max(fp_mean * (1.0 - fp_mean), 0.0) /
                                     trials);
      return holds / trials >= 1.0 - fp_mean - 3.0 * sigma - 1e-12;
    };
    report.stats["bound_trials"] = trials;
    report.stats["prop2_holds_rate"] =
        static_cast<double>(prop2_holds) / trials;
    report.stats["prop2_mean_failure_prob"] = prop2_fp_sum / trials;
    report.stats["thm2_holds_rate"] = static_cast<double>(thm2_holds) / trials;
    report.stats["thm2_mean_failure_prob"] = thm2_fp_sum / trials;
    if (!admit(static_cast<double>(prop2_holds), prop2_fp_sum / trials))
      all_ok = false;
    if (!admit(static_cast<double>(thm2_holds), thm2_fp_sum / trials))
      all_ok = false;
  }

  report.bounds_ok = all_ok;
  return report;
}

RunReport cmd_synth_gen(const ExperimentConfig& cfg) {
  RunReport report = new_report(cfg, "synth-gen");
  SynthConfig synth = cfg.synth;
  synth.seed = cfg.seed;
  const Dataset data =
      cfg.synth_imbalanced ? imbalanced_variant(synth) : generate(synth);

  std::filesystem::create_directories(cfg.out_dir);
  std::vector<std::vector<double>> probs, oracle;
  std::vector<std::size_t> labels;
  probs.reserve(data.size());
  oracle.reserve(data.size());
  labels.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    probs.push_back(data.sample(i).probs.values());
    oracle.push_back(data.oracle(i).values());
    labels.push_back(data.sample(i).label);
  }
  write_csv_matrix(cfg.out_dir + "/probs.csv", probs);
  write_labels(cfg.out_dir + "/labels.csv", labels);
  write_csv_matrix(cfg.out_dir + "/oracle.csv", oracle);

  report.stats["n"] = static_cast<double>(data.size());
  report.stats["k"] = static_cast<double>(data.num_classes());
  return report;
}

RunReport run_command(const ExperimentConfig& cfg, const std::string& name) {
  RunReport report;
  if (name == "evaluate") {
    report = cmd_evaluate(cfg);
  } else if (name == "train") {
    report = cmd_train(cfg);
  } else if (name == "sweep") {
    report = cmd_sweep(cfg);
  } else if (name == "verify-bounds") {
    report = cmd_verify_bounds(cfg);
  } else if (name == "synth-gen") {
    report = cmd_synth_gen(cfg);
  } else {
    throw_config("unknown command '" + name + "'");
  }
  write_outputs(report, cfg.out_dir);
  if (cfg.strict && !report.bounds_ok)
    throw Error(ErrorKind::bound, "bound check violated under strict mode");
  return report;
}

namespace {

ordered_json json_of_bound(const BoundReport& b) {
  ordered_json j;
  j["lhs"] = b.lhs;
  j["rhs"] = b.rhs;
  j["holds"] = b.holds;
  j["slack"] = b.slack;
  ordered_json comps;
  for (const auto& [key, value] : b.components) comps[key] = value;
  j["components"] = comps;
  return j;
}

ordered_json json_of_sweep_point(const SweepPoint& p) {
  ordered_json j;
  j["temperature"] = p.temperature;
  j["mean_entropy"] = p.mean_entropy;
  j["efficiency"] = p.efficiency;
  j["coverage"] = p.coverage;
  return j;
}

}  // namespace

std::string RunReport::to_json_text() const {
  ordered_json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["command"] = command;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  ordered_json config_json;
  for (const auto& [key, value] : effective_config.entries())
    config_json[key] = value;
  j["config"] = config_json;

  if (!aggregate.empty()) {
    ordered_json agg;
    for (const auto& [key, ms] : aggregate)
      agg[key] = {{"mean", ms.mean}, {"std", ms.std}};
    j["aggregate"] = agg;
  }

  if (!splits.empty()) {
    ordered_json rows = ordered_json::array();
    for (const auto& rec : splits) {
      ordered_json row;
      row["split"] = rec.split_index;
      row["repeat"] = rec.repeat;
      row["eta_hat"] = rec.eta_hat;
      row["coverage"] = rec.eval.coverage;
      row["efficiency"] = rec.eval.efficiency;
      row["mean_entropy"] = rec.eval.mean_entropy;
      row["sscv"] = rec.eval.sscv;
      row["empty_set_rate"] = rec.eval.empty_set_rate;
      row["min_class_coverage"] = rec.min_class_coverage;
      row["coverage_distance_l1"] = rec.coverage_distance_l1;
      row["coverage_distance_l2"] = rec.coverage_distance_l2;
      if (rec.eval.wsc >= 0.0) row["wsc"] = rec.eval.wsc;
      ordered_json class_cov = ordered_json::array();
      for (const auto& cov : rec.eval.class_cov) {
        if (cov)
          class_cov.push_back(*cov);
        else
          class_cov.push_back(nullptr);
      }
      row["class_coverage"] = class_cov;
      rows.push_back(row);
    }
    j["splits"] = rows;
  }

  if (!histories.empty()) {
    ordered_json reps = ordered_json::array();
    for (const auto& history : histories) {
      ordered_json rows = ordered_json::array();
      for (const auto& rec : history) {
        ordered_json row;
        row["epoch"] = rec.epoch;
        row["total"] = rec.train_loss.total;
        row["focal"] = rec.train_loss.focal;
        row["ineff"] = rec.train_loss.ineff;
        row["cond"] = rec.train_loss.cond;
        row["entropy_mean"] = rec.train_loss.entropy_mean;
        row["val_coverage"] = rec.val_coverage;
        row["val_efficiency"] = rec.val_efficiency;
        row["val_entropy"] = rec.val_entropy;
        row["val_min_class_coverage"] = rec.val_min_class_coverage;
        rows.push_back(row);
      }
      reps.push_back(rows);
    }
    j["loss_history"] = reps;
  }
  if (!adapter_files.empty()) j["adapter_files"] = adapter_files;

  if (!sweep.empty()) {
    ordered_json rows = ordered_json::array();
    for (const auto& p : sweep) rows.push_back(json_of_sweep_point(p));
    j["sweep"] = rows;
    ordered_json pareto_rows = ordered_json::array();
    for (const auto& p : pareto) pareto_rows.push_back(json_of_sweep_point(p));
    j["pareto"] = pareto_rows;
    j["entropy_selection"] =
        entropy_selection ? json_of_sweep_point(*entropy_selection)
                          : ordered_json(nullptr);
  }

  if (!bounds.empty()) {
    ordered_json bj;
    for (const auto& [key, value] : bounds) bj[key] = json_of_bound(value);
    j["bounds"] = bj;
    j["bounds_ok"] = bounds_ok;
  }
  if (!stats.empty()) {
    ordered_json sj;
    for (const auto& [key, value] : stats) sj[key] = value;
    j["stats"] = sj;
  }
  return j.dump(2) + "\n";
}

std::string RunReport::summary() const {
  std::ostringstream out;
  out << command << " (seed " << seed << ", config " << config_hash << ")\n";
  for (const auto& [key, ms] : aggregate) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-22s %.4f +- %.4f\n", key.c_str(),
                  ms.mean, ms.std);
    out << buf;
  }
  if (!sweep.empty()) {
    out << "  sweep points: " << sweep.size()
        << ", pareto points: " << pareto.size() << "\n";
    if (entropy_selection) {
      char buf[128];
      std::snprintf(buf, sizeof(buf),
                    "  entropy selection: T=%.4f entropy=%.4f "
                    "efficiency=%.4f coverage=%.4f\n",
                    entropy_selection->temperature,
                    entropy_selection->mean_entropy,
                    entropy_selection->efficiency,
                    entropy_selection->coverage);
      out << buf;
    }
  }
  for (const auto& [key, value] : stats) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-22s %.6g\n", key.c_str(), value);
    out << buf;
  }
  if (!bounds.empty())
    out << "  bounds_ok: " << (bounds_ok ? "true" : "false") << "\n";
  if (!adapter_files.empty()) out << "  adapter: " << adapter_files[0] << "\n";
  return out.str();
}

void write_outputs(const RunReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/report.json");
    if (!out) throw_config("cannot write " + out_dir + "/report.json");
    out << report.to_json_text();
  }
  char buf[256];
  if (!report.splits.empty()) {
    // split,repeat,eta_hat,coverage,efficiency,mean_entropy,wsc,sscv,
    // empty_set_rate,min_class_coverage,cd_l1,cd_l2
    std::ofstream out(out_dir + "/splits.csv");
    for (const auto& rec : report.splits) {
      std::snprintf(buf, sizeof(buf),
                    "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                    "%.17g,%.17g,%.17g\n",
                    rec.split_index, rec.repeat, rec.eta_hat,
                    rec.eval.coverage, rec.eval.efficiency,
                    rec.eval.mean_entropy, rec.eval.wsc, rec.eval.sscv,
                    rec.eval.empty_set_rate, rec.min_class_coverage,
                    rec.coverage_distance_l1, rec.coverage_distance_l2);
      out << buf;
    }
  }
  if (!report.sweep.empty()) {
    // temperature,entropy,efficiency,coverage — one row per grid point
    std::ofstream out(out_dir + "/sweep.csv");
    for (const auto& p : report.sweep) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n",
                    p.temperature, p.mean_entropy, p.efficiency, p.coverage);
      out << buf;
    }
    std::ofstream pareto_out(out_dir + "/pareto.csv");
    for (const auto& p : report.pareto) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n",
                    p.temperature, p.mean_entropy, p.efficiency, p.coverage);
      pareto_out << buf;
    }
  }
  if (!report.histories.empty()) {
    // repeat,epoch,total,focal,ineff,cond,entropy_mean,val_coverage,
    // val_efficiency,val_entropy,val_min_class_coverage
    std::ofstream out(out_dir + "/loss_history.csv");
    for (std::size_t r = 0; r < report.histories.size(); ++r) {
      for (const auto& rec : report.histories[r]) {
        std::snprintf(buf, sizeof(buf),
                      "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g\n",
                      r + 1, rec.epoch, rec.train_loss.total,
                      rec.train_loss.focal, rec.train_loss.ineff,
                      rec.train_loss.cond, rec.train_loss.entropy_mean,
                      rec.val_coverage, rec.val_efficiency, rec.val_entropy,
                      rec.val_min_class_coverage);
        out << buf;
      }
    }
  }
}

}  // namespace ecc3
