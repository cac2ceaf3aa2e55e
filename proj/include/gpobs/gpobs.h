#ifndef GPOBS_H
#define GPOBS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GPOBS_API __declspec(dllexport)
#else
#define GPOBS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gpobs_status {
  GPOBS_OK = 0,
  GPOBS_ERR_INVALID_ARGUMENT = 1,
  GPOBS_ERR_DIMENSION = 2,
  GPOBS_ERR_PARSE = 3,
  GPOBS_ERR_IO = 4,
  GPOBS_ERR_UNSTABLE = 5,
  GPOBS_ERR_SINGULAR = 6,
  GPOBS_ERR_INTERNAL = 7
} gpobs_status;

typedef struct gpobs_scenario gpobs_scenario;
typedef struct gpobs_design gpobs_design;
typedef struct gpobs_synth_result gpobs_synth_result;
typedef struct gpobs_trajectory gpobs_trajectory;
typedef struct gpobs_audit_report gpobs_audit_report;
typedef struct gpobs_accuracy gpobs_accuracy;

/* Message of the last failed call on this thread; empty when none. */
GPOBS_API const char* gpobs_last_error(void);
GPOBS_API const char* gpobs_version(void);
GPOBS_API const char* gpobs_status_name(gpobs_status status);
/* Releases strings returned through char** out-parameters. */
GPOBS_API void gpobs_string_free(char* text);

/* Scenarios */
GPOBS_API gpobs_status gpobs_scenario_load(const char* path, gpobs_scenario** out);
GPOBS_API gpobs_status gpobs_scenario_parse(const char* text, const char* source, gpobs_scenario** out);
GPOBS_API void gpobs_scenario_free(gpobs_scenario* scenario);
GPOBS_API gpobs_status gpobs_scenario_serialize(const gpobs_scenario* scenario, char** text);
GPOBS_API gpobs_status gpobs_scenario_dims(const gpobs_scenario* scenario, size_t* n, size_t* m, size_t* n_z,
                                           size_t* agents);
GPOBS_API gpobs_status gpobs_scenario_name(const gpobs_scenario* scenario, char** name);
/* present is set to 0 when the scenario carries no budget. */
GPOBS_API gpobs_status gpobs_scenario_budget(const gpobs_scenario* scenario, int* present, double* epsilon,
                                             double* delta, double* rho);
GPOBS_API gpobs_status gpobs_scenario_set_budget(gpobs_scenario* scenario, double epsilon, double delta, double rho);
GPOBS_API gpobs_status gpobs_scenario_run(const gpobs_scenario* scenario, size_t* horizon, uint64_t* seed);
GPOBS_API int gpobs_scenario_has_fixture(const gpobs_scenario* scenario);
/* Scenario dp_scale, or rho / epsilon of the budget, or 1. */
GPOBS_API gpobs_status gpobs_scenario_dp_scale(const gpobs_scenario* scenario, double* scale);

/* Designs */
typedef enum gpobs_provenance {
  GPOBS_PROVENANCE_SYNTHESIZED = 0,
  GPOBS_PROVENANCE_LOADED_FIXTURE = 1,
  GPOBS_PROVENANCE_NON_PRIVATE = 2
} gpobs_provenance;

typedef struct gpobs_design_info {
  double gamma;
  double eta;
  double alpha;
  double beta;
  gpobs_provenance provenance;
} gpobs_design_info;

/* Certifies the scenario's gain block. */
GPOBS_API gpobs_status gpobs_design_from_fixture(const gpobs_scenario* scenario, gpobs_design** out);
/* Reads a design file (gain block) and certifies it against the scenario. */
GPOBS_API gpobs_status gpobs_design_load(const gpobs_scenario* scenario, const char* path, gpobs_design** out);
/* gain is row-major n x m. */
GPOBS_API gpobs_status gpobs_design_from_gain(const gpobs_scenario* scenario, const double* gain, size_t len,
                                              double alpha, gpobs_design** out);
GPOBS_API void gpobs_design_free(gpobs_design* design);
GPOBS_API gpobs_status gpobs_design_info_get(const gpobs_design* design, gpobs_design_info* info);
GPOBS_API gpobs_status gpobs_design_gain(const gpobs_design* design, double* buffer, size_t len);
GPOBS_API gpobs_status gpobs_design_serialize(const gpobs_design* design, char** text);

/* Synthesis */
typedef enum gpobs_mask_mode {
  GPOBS_MASK_NONE = 0,
  GPOBS_MASK_PATTERN = 1,
  GPOBS_MASK_SCENARIO = 2 /* scenario mask when present, else none */
} gpobs_mask_mode;

typedef enum gpobs_synth_status {
  GPOBS_SYNTH_CERTIFIED = 0,
  GPOBS_SYNTH_UNCERTIFIED = 1,
  GPOBS_SYNTH_INFEASIBLE_BUDGET = 2
} gpobs_synth_status;

typedef struct gpobs_synth_options {
  int private_mode;
  gpobs_mask_mode mask;
  size_t max_sweeps;
  uint64_t seed;
  size_t random_starts;
  int sigma_min;
  int literal_alpha;
} gpobs_synth_options;

typedef struct gpobs_synth_summary {
  gpobs_synth_status status;
  double gamma;
  double gamma_direct;
  double eta;
  double eta_direct;
  double alpha;
  int has_budget;
  double budget_lhs;
  double budget_bound;
  double budget_residual;
  size_t evaluations;
} gpobs_synth_summary;

GPOBS_API void gpobs_synth_options_init(gpobs_synth_options* options);
GPOBS_API gpobs_status gpobs_synthesize(const gpobs_scenario* scenario, const gpobs_synth_options* options,
                                        gpobs_synth_result** out);
/* Certifies a design and evaluates the scenario budget against it. */
GPOBS_API gpobs_status gpobs_certify(const gpobs_scenario* scenario, const gpobs_design* design,
                                     const gpobs_synth_options* options, gpobs_synth_result** out);
/* Bisects delta (relative tolerance rel_tol) for the smallest certified private design. */
GPOBS_API gpobs_status gpobs_min_feasible_delta(const gpobs_scenario* scenario, const gpobs_synth_options* options,
                                                double rel_tol, double* delta, gpobs_synth_result** out);
GPOBS_API void gpobs_synth_result_free(gpobs_synth_result* result);
GPOBS_API gpobs_status gpobs_synth_result_summary(const gpobs_synth_result* result, gpobs_synth_summary* summary);
GPOBS_API gpobs_status gpobs_synth_result_report(const gpobs_synth_result* result, char** text);
GPOBS_API gpobs_status gpobs_synth_result_design(const gpobs_synth_result* result, gpobs_design** out);
GPOBS_API const char* gpobs_synth_status_name(gpobs_synth_status status);

/* Simulation */
GPOBS_API gpobs_status gpobs_simulate(const gpobs_scenario* scenario, const gpobs_design* design, size_t horizon,
                                      uint64_t seed, gpobs_trajectory** out);
/* Gain of the design with alpha = 1 on DP-perturbed measurements. */
GPOBS_API gpobs_status gpobs_dp_baseline(const gpobs_scenario* scenario, const gpobs_design* design, double scale,
                                         size_t horizon, uint64_t seed, gpobs_trajectory** out);
GPOBS_API void gpobs_trajectory_free(gpobs_trajectory* trajectory);
GPOBS_API size_t gpobs_trajectory_length(const gpobs_trajectory* trajectory);
GPOBS_API gpobs_status gpobs_trajectory_csv(const gpobs_trajectory* trajectory, char** text);
GPOBS_API gpobs_status gpobs_trajectory_containment(const gpobs_trajectory* trajectory, int* ok,
                                                    double* worst_slack, size_t* worst_step);
/* Released bounds and widths at step k, each of length n_z. */
GPOBS_API gpobs_status gpobs_trajectory_output(const gpobs_trajectory* trajectory, size_t k, double* z_lo,
                                               double* z_hi, double* z_true, size_t len);

/* Audit */
typedef enum gpobs_adjacency {
  GPOBS_ADJ_BOUNDARY = 0,
  GPOBS_ADJ_INTERIOR = 1,
  GPOBS_ADJ_SINGLE_AGENT = 2
} gpobs_adjacency;

typedef struct gpobs_audit_options {
  size_t pairs;
  size_t horizon;
  uint64_t seed;
  gpobs_adjacency mode;
  size_t agent; /* 0-based, single-agent mode only */
} gpobs_audit_options;

GPOBS_API void gpobs_audit_options_init(gpobs_audit_options* options);
GPOBS_API gpobs_status gpobs_audit(const gpobs_scenario* scenario, const gpobs_design* design,
                                   const gpobs_audit_options* options, gpobs_audit_report** out);
GPOBS_API void gpobs_audit_report_free(gpobs_audit_report* report);
GPOBS_API gpobs_status gpobs_audit_report_text(const gpobs_audit_report* report, char** text);
GPOBS_API gpobs_status gpobs_audit_report_csv(const gpobs_audit_report* report, char** text);
GPOBS_API gpobs_status gpobs_audit_report_summary(const gpobs_audit_report* report, size_t* violations,
                                                  double* worst, int* corner_exact);

/* Accuracy loss between a non-private and a private design */
GPOBS_API gpobs_status gpobs_accuracy_compute(const gpobs_scenario* scenario, const gpobs_design* np,
                                      const gpobs_design* gp, size_t horizon, uint64_t seed, gpobs_accuracy** out);
GPOBS_API void gpobs_accuracy_free(gpobs_accuracy* accuracy);
/* CSV `k,closed_form,simulated,abs_diff,steady` for k = 0 .. horizon. */
GPOBS_API gpobs_status gpobs_accuracy_csv(const gpobs_accuracy* accuracy, char** text);
GPOBS_API gpobs_status gpobs_accuracy_summary(const gpobs_accuracy* accuracy, double* steady, double* max_mismatch);

/* Left-hand side of the privacy budget constraint and its bound exp(-epsilon) delta. */
GPOBS_API gpobs_status gpobs_privacy_lhs(const gpobs_scenario* scenario, const gpobs_design* design, int sigma_min,
                                         int literal_alpha, double* lhs, double* bound);

#ifdef __cplusplus
}
#endif

#endif
