#ifndef EPG_EPG_H
#define EPG_EPG_H

/*
 * C interface to the epidemic population game library.
 *
 * Every fallible call returns an epg_status. On failure the message and the
 * error kind are kept per thread and can be read with epg_last_error() and
 * epg_last_error_kind() until the next failing call on the same thread.
 * Strings returned through char** must be released with epg_string_free().
 */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(EPG_BUILDING_LIBRARY)
#    define EPG_API __declspec(dllexport)
#  else
#    define EPG_API __declspec(dllimport)
#  endif
#else
#  define EPG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum epg_status {
  EPG_OK = 0,
  EPG_ERR_ARGUMENT = 1,     /* null handle or bad call argument */
  EPG_ERR_VALIDATION = 2,   /* scenario or model validation failed */
  EPG_ERR_INTEGRATION = 3,  /* integrator failure or invariant breach */
  EPG_ERR_PRECONDITION = 4, /* bound preconditions do not hold */
  EPG_ERR_IO = 5,
  EPG_ERR_INTERNAL = 6
} epg_status;

typedef struct epg_scenario epg_scenario;
typedef struct epg_trajectory epg_trajectory;

typedef struct epg_sample {
  double t;
  double I;
  double R;
  double B;
  double q;
  double reward_cost;
  double lyapunov;
} epg_sample;

typedef struct epg_bound_options {
  double tol;      /* tolerance on pi*; <= 0 selects 1e-4 */
  int oracle_grid; /* 0 disables the grid oracle column */
  /* Nonzero: evaluate pi* at alpha = upsilon^2 beta_tilde^2 / 2 instead of
   * the level certified for the scenario's initial state. */
  int use_beta_tilde;
  double beta_tilde;
} epg_bound_options;

EPG_API const char* epg_version(void);
EPG_API const char* epg_last_error(void);
/* Name of the failing error kind, e.g. "BudgetOutOfRange"; "" if none. */
EPG_API const char* epg_last_error_kind(void);
EPG_API void epg_string_free(char* s);

EPG_API epg_status epg_scenario_load(const char* path, epg_scenario** out);
EPG_API epg_status epg_scenario_parse(const char* json_text, epg_scenario** out);
EPG_API void epg_scenario_free(epg_scenario* scenario);
EPG_API epg_status epg_scenario_clone(const epg_scenario* scenario, epg_scenario** out);
/* Dotted path into the scenario tree, e.g. "run.t_end" or "profile.beta.0".
 * The scenario is re-validated; on failure it is left unchanged. */
EPG_API epg_status epg_scenario_set_number(epg_scenario* scenario, const char* key, double value);
EPG_API epg_status epg_scenario_get_number(const epg_scenario* scenario, const char* key,
                                           double* value);
EPG_API epg_status epg_scenario_to_json(const epg_scenario* scenario, char** json_out);
EPG_API epg_status epg_scenario_save(const epg_scenario* scenario, const char* path);

EPG_API epg_status epg_design_report(const epg_scenario* scenario, char** json_out);
/* Writes the scenario with its design report embedded under "design_report". */
EPG_API epg_status epg_design_embed(const epg_scenario* scenario, const char* path);

EPG_API epg_status epg_simulate(const epg_scenario* scenario, epg_trajectory** out);
EPG_API void epg_trajectory_free(epg_trajectory* trajectory);
EPG_API size_t epg_trajectory_size(const epg_trajectory* trajectory);
EPG_API epg_status epg_trajectory_sample(const epg_trajectory* trajectory, size_t index,
                                         epg_sample* out);
EPG_API epg_status epg_trajectory_write_csv(const epg_trajectory* trajectory, const char* path);
EPG_API epg_status epg_trajectory_write_svg(const epg_trajectory* trajectory, const char* path,
                                            const char* title);
EPG_API epg_status epg_trajectory_summary(const epg_trajectory* trajectory, char** json_out);

/* Anytime-bound program at the scenario's design with the given upsilon. */
EPG_API epg_status epg_pi_star(const epg_scenario* scenario, double upsilon, double alpha,
                               double tol, double* out);
EPG_API epg_status epg_bound_table(const epg_scenario* scenario, const double* upsilons,
                                   size_t count, const epg_bound_options* options,
                                   const char* csv_path, const char* svg_path, char** json_out);
/* Largest upsilon whose certified bound on I/I* stays at or below target. */
EPG_API epg_status epg_select_upsilon(const epg_scenario* scenario, double target,
                                      double* upsilon, double* bound, double* floor);

/* threads == 0 picks the hardware concurrency. Returns EPG_ERR_INTEGRATION if
 * any job failed; per-job details are in json_out and summary.csv. */
EPG_API epg_status epg_sweep(const char* manifest_path, const char* out_dir, unsigned threads,
                             char** json_out);

#ifdef __cplusplus
}
#endif

#endif
