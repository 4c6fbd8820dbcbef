// Command-line front end. Everything goes through the C API in ecc3.h; the
// core library is never touched directly.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecc3.h"

namespace {

struct ConfigDeleter {
  void operator()(ecc3_config* cfg) const { ecc3_config_destroy(cfg); }
};
struct ReportDeleter {
  void operator()(ecc3_report* report) const { ecc3_report_destroy(report); }
};

int status_to_exit_code(ecc3_status status) {
  switch (status) {
    case ECC3_OK:
      return 0;
    case ECC3_ERR_NUMERIC:
      return 3;
    case ECC3_ERR_BOUND:
      return 4;
    case ECC3_ERR_ARGUMENT:
    case ECC3_ERR_CONFIG:
    default:
      return 2;
  }
}

struct CommonOptions {
  std::string config_path;
  std::string alpha, beta, gamma, seed, score, out_dir;
  std::vector<std::string> sets;  // raw key=value overrides
  bool strict = false;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Config file (key = value)");
  cmd->add_option("--alpha", opts.alpha, "Miscoverage rate");
  cmd->add_option("--beta", opts.beta, "Inefficiency loss weight");
  cmd->add_option("--gamma", opts.gamma, "Focal exponent");
  cmd->add_option("--seed", opts.seed, "Master seed");
  cmd->add_option("--score", opts.score, "Score function: aps or raps");
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--set", opts.sets,
                  "Extra key=value override (repeatable)");
  cmd->add_flag("--strict", opts.strict,
                "Exit 4 when a bound check is violated");
}

int run(const std::string& command, const CommonOptions& opts) {
  std::unique_ptr<ecc3_config, ConfigDeleter> cfg(ecc3_config_create());
  ecc3_status status = ECC3_OK;

  if (!opts.config_path.empty())
    status = ecc3_config_load_file(cfg.get(), opts.config_path.c_str());
  auto set = [&](const char* key, const std::string& value) {
    if (status == ECC3_OK && !value.empty())
      status = ecc3_config_set(cfg.get(), key, value.c_str());
  };
  set("alpha", opts.alpha);
  set("beta", opts.beta);
  set("gamma", opts.gamma);
  set("seed", opts.seed);
  set("score", opts.score);
  set("out_dir", opts.out_dir);
  if (opts.strict) set("strict", "true");
  for (const std::string& kv : opts.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                   kv.c_str());
      return 2;
    }
    set(kv.substr(0, eq).c_str(), kv.substr(eq + 1));
  }
  if (status != ECC3_OK) {
    std::fprintf(stderr, "error: %s\n", ecc3_last_error());
    return status_to_exit_code(status);
  }

  ecc3_report* raw = nullptr;
  status = ecc3_run(cfg.get(), command.c_str(), &raw);
  std::unique_ptr<ecc3_report, ReportDeleter> report(raw);
  if (status != ECC3_OK) {
    std::fprintf(stderr, "error: %s\n", ecc3_last_error());
    return status_to_exit_code(status);
  }
  std::fputs(ecc3_report_summary(report.get()), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("ecc3 ") + ecc3_version() +
               " — conformal prediction with entropy-aware correction"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"evaluate", "Repeated-split conformal evaluation of the base model"},
      {"train", "Train the correction adapter, then evaluate it"},
      {"sweep", "Temperature sweep with Pareto frontier extraction"},
      {"verify-bounds", "Numerical audit of the efficiency-entropy bounds"},
      {"synth-gen", "Generate the synthetic benchmark as CSV files"},
  };

  std::vector<std::unique_ptr<CommonOptions>> option_blocks;
  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    option_blocks.push_back(std::make_unique<CommonOptions>());
    add_common_options(sub, *option_blocks.back());
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (app.get_subcommand(commands[i].first)->parsed())
      return run(commands[i].first, *option_blocks[i]);
  }
  std::fprintf(stderr, "error: no subcommand given\n");
  return 2;
}
