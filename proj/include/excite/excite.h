#ifndef EXCITE_EXCITE_H
#define EXCITE_EXCITE_H

#include <stddef.h>
#include <stdint.h>

#if defined(EXCITE_BUILDING_LIBRARY)
#define EXCITE_API __attribute__((visibility("default")))
#else
#define EXCITE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; the CLI uses them as exit codes. */
typedef enum excite_status {
  EXCITE_OK = 0,
  EXCITE_ERROR_INTERNAL = 1,
  EXCITE_ERROR_CONFIG = 2,
  EXCITE_ERROR_INPUT = 3,
  EXCITE_ERROR_NUMERIC = 4,
  EXCITE_ERROR_INVALID_ARGUMENT = 5
} excite_status;

typedef enum excite_stage {
  EXCITE_STAGE_TOPICS = 0,
  EXCITE_STAGE_EVENTS = 1,
  EXCITE_STAGE_FIT = 2,
  EXCITE_STAGE_ALL = 3
} excite_stage;

typedef struct excite_pipeline excite_pipeline;
typedef struct excite_network excite_network;
typedef struct excite_process_set excite_process_set;
typedef struct excite_posterior excite_posterior;

EXCITE_API const char* excite_version(void);
EXCITE_API const char* excite_status_string(excite_status status);
/* Message of the last failure on the calling thread; empty after success. */
EXCITE_API const char* excite_last_error(void);

/* Pipeline. Overrides apply before the run; out_dir may be NULL. */
EXCITE_API excite_status excite_pipeline_create(const char* config_path, excite_pipeline** out);
EXCITE_API void excite_pipeline_destroy(excite_pipeline* pipeline);
EXCITE_API excite_status excite_pipeline_set_output_dir(excite_pipeline* pipeline, const char* dir);
EXCITE_API excite_status excite_pipeline_set_seed(excite_pipeline* pipeline, uint64_t seed);
EXCITE_API excite_status excite_pipeline_set_lenient(excite_pipeline* pipeline, int lenient);
EXCITE_API excite_status excite_pipeline_set_events_path(excite_pipeline* pipeline, const char* path);
EXCITE_API excite_status excite_pipeline_run(excite_pipeline* pipeline, excite_stage stage);
/* Results of the last run. Strings stay valid until the next run. */
EXCITE_API size_t excite_pipeline_output_count(const excite_pipeline* pipeline);
EXCITE_API const char* excite_pipeline_output(const excite_pipeline* pipeline, size_t index);
EXCITE_API size_t excite_pipeline_warning_count(const excite_pipeline* pipeline);
EXCITE_API const char* excite_pipeline_warning(const excite_pipeline* pipeline, size_t index);
EXCITE_API const char* excite_pipeline_manifest_path(const excite_pipeline* pipeline);

/* Hawkes network. Kernels are uniform mixtures of the boxcar basis with the
   given upper edges (NULL selects 8, 32, 96). */
EXCITE_API excite_status excite_network_load(const char* json_path, excite_network** out);
EXCITE_API excite_status excite_network_create(size_t processes, const char* const* labels, const double* lambda0,
                                               const double* weights_row_major, const size_t* basis_edges,
                                               size_t n_edges, excite_network** out);
EXCITE_API void excite_network_destroy(excite_network* net);
EXCITE_API size_t excite_network_size(const excite_network* net);
EXCITE_API excite_status excite_spectral_radius(const excite_network* net, double* out);

/* Event streams on a bucket grid. */
EXCITE_API excite_status excite_simulate(const excite_network* net, size_t n_buckets, uint64_t seed,
                                         excite_process_set** out);
EXCITE_API excite_status excite_process_set_read(const char* csv_path, excite_process_set** out);
EXCITE_API excite_status excite_process_set_write(const excite_process_set* set, const char* csv_path);
EXCITE_API void excite_process_set_destroy(excite_process_set* set);
EXCITE_API size_t excite_process_set_size(const excite_process_set* set);
EXCITE_API size_t excite_process_set_buckets(const excite_process_set* set);
EXCITE_API const char* excite_process_set_label(const excite_process_set* set, size_t process);
EXCITE_API size_t excite_process_set_event_count(const excite_process_set* set, size_t process);
/* Copies up to capacity bucket indices; returns the stream's event count. */
EXCITE_API size_t excite_process_set_events(const excite_process_set* set, size_t process, size_t* buckets,
                                            size_t capacity);

EXCITE_API excite_status excite_intensity(const excite_network* net, const excite_process_set* set, size_t process,
                                          size_t bucket, double* out);
EXCITE_API excite_status excite_log_likelihood(const excite_network* net, const excite_process_set* set,
                                               double* out);

/* Posterior inference. */
typedef struct excite_fit_options {
  size_t iterations;
  size_t burn_in;
  size_t thinning;
  double lambda0_shape;
  double lambda0_rate;
  double weight_shape;
  double weight_rate;
  double impulse_concentration;
  uint64_t seed;
  const size_t* basis_edges; /* NULL selects 8, 32, 96 */
  size_t n_basis_edges;
} excite_fit_options;

EXCITE_API excite_fit_options excite_fit_options_default(void);
EXCITE_API excite_status excite_fit(const excite_process_set* set, const excite_fit_options* options,
                                    excite_posterior** out);
EXCITE_API void excite_posterior_destroy(excite_posterior* posterior);
EXCITE_API size_t excite_posterior_size(const excite_posterior* posterior);
EXCITE_API size_t excite_posterior_samples(const excite_posterior* posterior);
EXCITE_API double excite_posterior_mean_weight(const excite_posterior* posterior, size_t from, size_t to);
EXCITE_API double excite_posterior_mean_lambda0(const excite_posterior* posterior, size_t process);
EXCITE_API excite_status excite_posterior_ci90(const excite_posterior* posterior, size_t from, size_t to,
                                               double* lower, double* upper);
EXCITE_API excite_status excite_posterior_write_json(const excite_posterior* posterior, const char* path);
EXCITE_API excite_status excite_posterior_write_weights_csv(const excite_posterior* posterior, const char* path);
EXCITE_API excite_status excite_posterior_write_heatmap(const excite_posterior* posterior, const char* path,
                                                        const char* title);

#ifdef __cplusplus
}
#endif

#endif
