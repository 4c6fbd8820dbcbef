#include "ecc3.h"

#include <exception>
#include <memory>
#include <string>

#include "ecc3/harness.hpp"

struct ecc3_config {
  ecc3::KvConfig kv;
};

struct ecc3_report {
  ecc3::RunReport report;
  std::string json_text;
  std::string summary_text;
};

namespace {

thread_local std::string g_last_error;

ecc3_status set_error(ecc3_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

ecc3_status from_exception(const std::exception& e) {
  if (const auto* err = dynamic_cast<const ecc3::Error*>(&e)) {
    switch (err->kind()) {
      case ecc3::ErrorKind::config:
        return set_error(ECC3_ERR_CONFIG, err->what());
      case ecc3::ErrorKind::numeric:
        return set_error(ECC3_ERR_NUMERIC, err->what());
      case ecc3::ErrorKind::bound:
        return set_error(ECC3_ERR_BOUND, err->what());
      case ecc3::ErrorKind::invalid:
        return set_error(ECC3_ERR_CONFIG, err->what());
    }
  }
  return set_error(ECC3_ERR_CONFIG, e.what());
}

}  // namespace

extern "C" {

const char* ecc3_version(void) { return ecc3::kToolVersion; }

const char* ecc3_last_error(void) { return g_last_error.c_str(); }

ecc3_config* ecc3_config_create(void) { return new ecc3_config(); }

void ecc3_config_destroy(ecc3_config* cfg) { delete cfg; }

ecc3_status ecc3_config_load_file(ecc3_config* cfg, const char* path) {
  if (!cfg || !path)
    return set_error(ECC3_ERR_ARGUMENT, "null config or path");
  try {
    const ecc3::KvConfig loaded = ecc3::KvConfig::parse_file(path);
    for (const auto& [key, value] : loaded.entries()) cfg->kv.set(key, value);
    return ECC3_OK;
  } catch (const std::exception& e) {
    return from_exception(e);
  }
}

ecc3_status ecc3_config_set(ecc3_config* cfg, const char* key,
                            const char* value) {
  if (!cfg || !key || !value)
    return set_error(ECC3_ERR_ARGUMENT, "null config, key or value");
  cfg->kv.set(key, value);
  return ECC3_OK;
}

ecc3_status ecc3_run(const ecc3_config* cfg, const char* command,
                     ecc3_report** out) {
  if (!cfg || !command || !out)
    return set_error(ECC3_ERR_ARGUMENT, "null config, command or out");
  *out = nullptr;
  try {
    const ecc3::ExperimentConfig experiment =
        ecc3::ExperimentConfig::from_kv(cfg->kv);
    auto report = std::make_unique<ecc3_report>();
    report->report = ecc3::run_command(experiment, command);
    report->json_text = report->report.to_json_text();
    report->summary_text = report->report.summary();
    *out = report.release();
    return ECC3_OK;
  } catch (const std::exception& e) {
    return from_exception(e);
  }
}

void ecc3_report_destroy(ecc3_report* report) { delete report; }

const char* ecc3_report_json(const ecc3_report* report) {
  return report ? report->json_text.c_str() : "";
}

const char* ecc3_report_summary(const ecc3_report* report) {
  return report ? report->summary_text.c_str() : "";
}

ecc3_status ecc3_report_metric(const ecc3_report* report, const char* key,
                               double* out) {
  if (!report || !key || !out)
    return set_error(ECC3_ERR_ARGUMENT, "null report, key or out");
  const std::string name(key);
  const std::size_t dot = name.rfind('.');
  if (dot != std::string::npos) {
    const std::string metric = name.substr(0, dot);
    const std::string field = name.substr(dot + 1);
    const auto it = report->report.aggregate.find(metric);
    if (it != report->report.aggregate.end()) {
      if (field == "mean") {
        *out = it->second.mean;
        return ECC3_OK;
      }
      if (field == "std") {
        *out = it->second.std;
        return ECC3_OK;
      }
    }
  }
  const auto stat = report->report.stats.find(name);
  if (stat != report->report.stats.end()) {
    *out = stat->second;
    return ECC3_OK;
  }
  return set_error(ECC3_ERR_ARGUMENT, "unknown metric '" + name + "'");
}

}  // extern "C"
