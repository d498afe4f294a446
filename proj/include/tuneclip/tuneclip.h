/* Copyright 2026 The tuneclip Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the tuneclip library.
 *
 * Every fallible call returns a tc_status. On failure, tc_last_error()
 * returns a message for the calling thread that stays valid until that
 * thread's next library call. Objects are opaque and owned by the caller;
 * release them with the matching *_destroy function (NULL is accepted).
 */

#ifndef TUNECLIP_TUNECLIP_H_
#define TUNECLIP_TUNECLIP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(TUNECLIP_BUILDING)
#define TC_API __attribute__((visibility("default")))
#else
#define TC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tc_status {
  TC_OK = 0,
  TC_ERR_CONFIG = 1,
  TC_ERR_PARSE = 2,
  TC_ERR_SCHEMA = 3,
  TC_ERR_SHAPE = 4,
  TC_ERR_NUMERIC = 5,
  TC_ERR_NORMALIZATION = 6,
  TC_ERR_STATE = 7,
  TC_ERR_TRAINING = 8,
  TC_ERR_IO = 9,
  TC_ERR_CHECKSUM = 10,
  TC_ERR_VERSION = 11,
  TC_ERR_CONFIG_HASH = 12,
  TC_ERR_REFUSED = 13,
  TC_ERR_ASSERTION = 14,
  TC_ERR_INVALID_ARGUMENT = 15,
  TC_ERR_INTERNAL = 16
} tc_status;

TC_API const char* tc_version(void);
TC_API const char* tc_last_error(void);
TC_API const char* tc_status_name(tc_status status);

/* ------------------------------------------------------------------------
 * Run configuration: `key = value` settings, see tc_config_key_name(). */

typedef struct tc_config tc_config;

TC_API tc_status tc_config_create(tc_config** out);
TC_API void tc_config_destroy(tc_config* cfg);
TC_API tc_status tc_config_load_file(tc_config* cfg, const char* path);
TC_API tc_status tc_config_set(tc_config* cfg, const char* key, const char* value);
/* Copies the value and its terminating NUL into buf when it fits; *len
 * always receives the value length without the NUL. */
TC_API tc_status tc_config_get(const tc_config* cfg, const char* key, char* buf, size_t cap, size_t* len);
/* 1 when the key was assigned by a file or tc_config_set, else 0. */
TC_API int tc_config_is_set(const tc_config* cfg, const char* key);
TC_API tc_status tc_config_validate(const tc_config* cfg);
TC_API size_t tc_config_key_count(void);
TC_API const char* tc_config_key_name(size_t index);
TC_API const char* tc_config_key_help(size_t index);

/* ------------------------------------------------------------------------
 * Datasets */

typedef struct tc_dataset tc_dataset;

/* Full dataset from the config's generator settings and data seed. */
TC_API tc_status tc_dataset_generate(const tc_config* cfg, tc_dataset** out);
TC_API tc_status tc_dataset_load(const char* path, tc_dataset** out);
TC_API tc_status tc_dataset_save(const tc_dataset* data, const char* path);
TC_API size_t tc_dataset_size(const tc_dataset* data);
TC_API void tc_dataset_destroy(tc_dataset* data);

/* ------------------------------------------------------------------------
 * Checkpoints */

typedef struct tc_checkpoint tc_checkpoint;

/* Prepares the data and pretrains the starting weights. */
TC_API tc_status tc_pretrain(const tc_config* cfg, tc_checkpoint** out);
/* With cfg non-NULL the checkpoint must match its dims and config hash
 * (the hash check is skipped when force is nonzero). */
TC_API tc_status tc_checkpoint_load(const char* path, const tc_config* cfg, int force, tc_checkpoint** out);
TC_API tc_status tc_checkpoint_save(const tc_checkpoint* ckpt, const char* path);
TC_API size_t tc_checkpoint_parameter_count(const tc_checkpoint* ckpt);
TC_API const char* tc_checkpoint_stage(const tc_checkpoint* ckpt);
TC_API void tc_checkpoint_destroy(tc_checkpoint* ckpt);

/* ------------------------------------------------------------------------
 * Reports: text plus named numbers returned by the commands below. */

typedef struct tc_report tc_report;

TC_API const char* tc_report_text(const tc_report* report);
/* 1 when every assertion recorded in the report held. */
TC_API int tc_report_passed(const tc_report* report);
TC_API tc_status tc_report_get(const tc_report* report, const char* name, double* value);
TC_API void tc_report_destroy(tc_report* report);

/* Runs the configured arm and writes its artifacts under output_dir. */
TC_API tc_status tc_run(const tc_config* cfg, tc_report** out);
/* Gradient suite against central differences; seed from the config. */
TC_API tc_status tc_grad_check(const tc_config* cfg, size_t cases, tc_report** out);
/* Full-batch estimator against the exact gradient on n generated pairs. When
 * json_path is non-NULL the exact reports are written there. */
TC_API tc_status tc_oracle_check(const tc_config* cfg, size_t n, const char* json_path, tc_report** out);
TC_API tc_status tc_exp_coldstart(const tc_config* cfg, tc_report** out);
TC_API tc_status tc_exp_margin(const tc_config* cfg, tc_report** out);
TC_API tc_status tc_exp_osr_scaling(const tc_config* cfg, tc_report** out);
/* Held-out Recall@k and false-negative statistics of a checkpoint's weights
 * on the config's data split. */
TC_API tc_status tc_evaluate(const tc_config* cfg, const tc_checkpoint* ckpt, size_t k, tc_report** out);
/* Summary of a metrics CSV written by tc_run. */
TC_API tc_status tc_report_metrics(const char* csv_path, tc_report** out);

#ifdef __cplusplus
}
#endif

#endif /* TUNECLIP_TUNECLIP_H_ */
