/*
 * ecc3 — conformal prediction toolkit with entropy-aware correction.
 *
 * C interface of the shared library. All state lives behind opaque handles;
 * every function returns an ecc3_status, with ECC3_OK meaning success.
 * Handles are not thread-safe individually, but independent handles may be
 * used from different threads. Error messages are thread-local; call
 * ecc3_last_error() right after a failing call.
 */

#ifndef ECC3_H
#define ECC3_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ecc3_status {
  ECC3_OK = 0,
  ECC3_ERR_ARGUMENT = 1, /* null handle / bad usage of this API */
  ECC3_ERR_CONFIG = 2,   /* ill-formed config, unreadable or invalid input */
  ECC3_ERR_NUMERIC = 3,  /* numerical failure (training divergence, ...) */
  ECC3_ERR_BOUND = 4     /* bound-check violation under strict mode */
} ecc3_status;

typedef struct ecc3_config ecc3_config;
typedef struct ecc3_report ecc3_report;

/* Library version string, e.g. "1.0.0". */
const char* ecc3_version(void);

/* Message of the last error raised on this thread; empty string if none. */
const char* ecc3_last_error(void);

/* --- configuration ------------------------------------------------------ */

/* Fresh config with built-in defaults. Free with ecc3_config_destroy. */
ecc3_config* ecc3_config_create(void);
void ecc3_config_destroy(ecc3_config* cfg);

/* Merge a flat key = value config file into cfg. */
ecc3_status ecc3_config_load_file(ecc3_config* cfg, const char* path);

/* Set one key (same keys as the config file). */
ecc3_status ecc3_config_set(ecc3_config* cfg, const char* key,
                            const char* value);

/* --- commands ------------------------------------------------------------ */

/*
 * Run one subcommand: "evaluate", "train", "sweep", "verify-bounds" or
 * "synth-gen". Outputs (report.json and CSV tables) are written into the
 * configured out_dir; on success *out receives a report handle that must be
 * freed with ecc3_report_destroy.
 */
ecc3_status ecc3_run(const ecc3_config* cfg, const char* command,
                     ecc3_report** out);

/* --- report inspection ---------------------------------------------------- */

void ecc3_report_destroy(ecc3_report* report);

/* Full JSON document; the pointer stays valid until the report is freed. */
const char* ecc3_report_json(const ecc3_report* report);

/* Short human-readable summary, same lifetime as the report. */
const char* ecc3_report_summary(const ecc3_report* report);

/*
 * Aggregate metric lookup, e.g. "coverage.mean", "efficiency.std", or a
 * scalar stat such as "prop1_violations". Returns ECC3_ERR_ARGUMENT when the
 * key is unknown.
 */
ecc3_status ecc3_report_metric(const ecc3_report* report, const char* key,
                               double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ECC3_H */
