// Exercises the shared library strictly through the public C header.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "ecc3.h"

namespace {

std::string temp_dir(const std::string& tag) {
  const auto dir =
      std::filesystem::temp_directory_path() / ("ecc3_capi_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

struct Config {
  ecc3_config* ptr;
  Config() : ptr(ecc3_config_create()) {}
  ~Config() { ecc3_config_destroy(ptr); }
};

struct Report {
  ecc3_report* ptr = nullptr;
  ~Report() { ecc3_report_destroy(ptr); }
};

void set_tiny(ecc3_config* cfg, const std::string& out_dir) {
  ecc3_config_set(cfg, "synth_n", "1200");
  ecc3_config_set(cfg, "synth_k", "5");
  ecc3_config_set(cfg, "n_splits", "4");
  ecc3_config_set(cfg, "wsc_directions", "0");
  ecc3_config_set(cfg, "seed", "9");
  ecc3_config_set(cfg, "out_dir", out_dir.c_str());
}

}  // namespace

TEST_CASE("version and argument guards") {
  CHECK(std::strlen(ecc3_version()) >= 5);
  CHECK(ecc3_config_set(nullptr, "a", "b") == ECC3_ERR_ARGUMENT);
  CHECK(ecc3_run(nullptr, "evaluate", nullptr) == ECC3_ERR_ARGUMENT);
  double value = 0.0;
  CHECK(ecc3_report_metric(nullptr, "coverage.mean", &value) ==
        ECC3_ERR_ARGUMENT);
}

TEST_CASE("evaluate through the C API") {
  const std::string dir = temp_dir("eval");
  Config cfg;
  set_tiny(cfg.ptr, dir);

  Report report;
  REQUIRE(ecc3_run(cfg.ptr, "evaluate", &report.ptr) == ECC3_OK);
  REQUIRE(report.ptr != nullptr);

  const std::string json = ecc3_report_json(report.ptr);
  CHECK(json.find("\"coverage\"") != std::string::npos);
  CHECK(json.find("\"config_hash\"") != std::string::npos);
  CHECK(std::filesystem::exists(dir + "/report.json"));

  double cov = 0.0;
  REQUIRE(ecc3_report_metric(report.ptr, "coverage.mean", &cov) == ECC3_OK);
  CHECK(cov > 0.75);
  CHECK(cov < 1.0);
  double std_dev = -1.0;
  REQUIRE(ecc3_report_metric(report.ptr, "coverage.std", &std_dev) == ECC3_OK);
  CHECK(std_dev >= 0.0);
  CHECK(ecc3_report_metric(report.ptr, "nonsense", &cov) ==
        ECC3_ERR_ARGUMENT);
  CHECK(std::strlen(ecc3_report_summary(report.ptr)) > 0);
}

TEST_CASE("re-running a config reproduces the report bytes") {
  const std::string dir = temp_dir("determinism");
  Config cfg;
  set_tiny(cfg.ptr, dir);
  Report first, second;
  REQUIRE(ecc3_run(cfg.ptr, "evaluate", &first.ptr) == ECC3_OK);
  REQUIRE(ecc3_run(cfg.ptr, "evaluate", &second.ptr) == ECC3_OK);
  CHECK(std::string(ecc3_report_json(first.ptr)) ==
        std::string(ecc3_report_json(second.ptr)));
}

TEST_CASE("config files merge with overrides") {
  const std::string dir = temp_dir("file");
  const std::string cfg_path = dir + "/run.cfg";
  {
    std::ofstream out(cfg_path);
    out << "synth_n = 1000\nsynth_k = 4\nn_splits = 3\nseed = 2\n"
        << "wsc_directions = 0\nout_dir = " << dir << "\n";
  }
  Config cfg;
  REQUIRE(ecc3_config_load_file(cfg.ptr, cfg_path.c_str()) == ECC3_OK);
  REQUIRE(ecc3_config_set(cfg.ptr, "alpha", "0.2") == ECC3_OK);
  Report report;
  REQUIRE(ecc3_run(cfg.ptr, "evaluate", &report.ptr) == ECC3_OK);
  double cov = 0.0;
  REQUIRE(ecc3_report_metric(report.ptr, "coverage.mean", &cov) == ECC3_OK);
  CHECK(cov > 0.7);

  CHECK(ecc3_config_load_file(cfg.ptr, "/nonexistent/cfg") ==
        ECC3_ERR_CONFIG);
  CHECK(std::strlen(ecc3_last_error()) > 0);
}

TEST_CASE("unknown command and bad config map to status codes") {
  const std::string dir = temp_dir("errors");
  Config cfg;
  set_tiny(cfg.ptr, dir);
  Report report;
  CHECK(ecc3_run(cfg.ptr, "explode", &report.ptr) == ECC3_ERR_CONFIG);
  CHECK(report.ptr == nullptr);
  CHECK(std::strlen(ecc3_last_error()) > 0);

  ecc3_config_set(cfg.ptr, "alpha", "1.5");
  CHECK(ecc3_run(cfg.ptr, "evaluate", &report.ptr) == ECC3_ERR_CONFIG);
}
