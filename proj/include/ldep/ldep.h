/*
 * C interface to the linear dilation-erosion perceptron library.
 *
 * All objects are opaque handles created by the library and released with
 * the matching *_free function. Every call that can fail returns an
 * ldep_status; on failure a message describing the last error of the calling
 * thread is available from ldep_last_error().
 */
#ifndef LDEP_LDEP_H_
#define LDEP_LDEP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LDEP_BUILDING_LIBRARY)
#    define LDEP_API __declspec(dllexport)
#  else
#    define LDEP_API __declspec(dllimport)
#  endif
#else
#  define LDEP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ldep_status {
  LDEP_OK = 0,
  LDEP_ERR_INVALID_ARGUMENT = 1,
  LDEP_ERR_DIMENSION = 2,
  LDEP_ERR_IO = 3,
  LDEP_ERR_PARSE = 4,
  LDEP_ERR_VERSION = 5,
  LDEP_ERR_SHAPE = 6,
  LDEP_ERR_SOLVER = 7,
  LDEP_ERR_INTERNAL = 8
} ldep_status;

typedef struct ldep_model ldep_model;
typedef struct ldep_dataset ldep_dataset;
typedef struct ldep_train_report ldep_train_report;

LDEP_API const char* ldep_version(void);
LDEP_API const char* ldep_last_error(void);
LDEP_API const char* ldep_status_string(ldep_status status);

/* ---- models ---------------------------------------------------------- */

/* W is n1 x n and M is n2 x n, both row-major. */
LDEP_API ldep_status ldep_model_create(size_t n, size_t n1, size_t n2, const double* W,
                                       const double* a, const double* M, const double* b,
                                       ldep_model** out);
LDEP_API void ldep_model_free(ldep_model* model);
LDEP_API ldep_status ldep_model_dims(const ldep_model* model, size_t* n, size_t* n1, size_t* n2);
/* Any output pointer may be NULL. Buffers must hold n1*n, n1, n2*n, n2 values. */
LDEP_API ldep_status ldep_model_params(const ldep_model* model, double* W, double* a, double* M,
                                       double* b);
LDEP_API ldep_status ldep_model_decision(const ldep_model* model, const double* x, size_t n,
                                         double* tau);
/* label is +1 when tau >= 0, else -1. */
LDEP_API ldep_status ldep_model_predict(const ldep_model* model, const double* x, size_t n,
                                        int* label);
/* Metadata is written to model files as "meta <key> <value>" records. */
LDEP_API ldep_status ldep_model_set_meta(ldep_model* model, const char* key, const char* value);
LDEP_API ldep_status ldep_model_save(const ldep_model* model, const char* path);
LDEP_API ldep_status ldep_model_load(const char* path, ldep_model** out);

/* ---- datasets -------------------------------------------------------- */

LDEP_API ldep_status ldep_dataset_create(size_t m, size_t n, const double* X, const int* labels,
                                         ldep_dataset** out);
LDEP_API void ldep_dataset_free(ldep_dataset* data);
/* expected_dim == 0 infers the feature count from the first data row. */
LDEP_API ldep_status ldep_dataset_load_csv(const char* path, size_t expected_dim,
                                           ldep_dataset** out);
LDEP_API ldep_status ldep_dataset_save_csv(const ldep_dataset* data, const char* path);
LDEP_API ldep_status ldep_dataset_dims(const ldep_dataset* data, size_t* m, size_t* n);
/* Copies out row-major features (m*n values) and labels (m values); either may be NULL. */
LDEP_API ldep_status ldep_dataset_data(const ldep_dataset* data, double* X, int* labels);

typedef struct ldep_mixture_params {
  double negative_means[2][2];
  double positive_means[2][2];
  double variance;
} ldep_mixture_params;

LDEP_API void ldep_mixture_params_default(ldep_mixture_params* params);
/* params may be NULL for the defaults. */
LDEP_API ldep_status ldep_generate_mixture(size_t train_count, size_t test_count,
                                           const ldep_mixture_params* params, uint64_t seed,
                                           ldep_dataset** train, ldep_dataset** test);

/* ---- training -------------------------------------------------------- */

typedef struct ldep_train_options {
  double C;
  double alpha;
  double lambda_w;
  double lambda_m;
  int n1;
  int n2;
  /* penalty schedule */
  double tau0;
  double mu;
  double tau_max;
  int max_iters;
  double tol_obj;
  double tol_slack;
  /* subproblem solver */
  double solver_eps_abs;
  double solver_eps_rel;
  int solver_max_iter;
  uint64_t seed;
  int restarts;
  int parallel_restarts;
  int standardize;
} ldep_train_options;

LDEP_API void ldep_train_options_default(ldep_train_options* options);

/* On LDEP_OK both outputs are set. A run that ends in solver failure still
 * returns the model and report but with status LDEP_ERR_SOLVER. */
LDEP_API ldep_status ldep_train(const ldep_dataset* data, const ldep_train_options* options,
                                ldep_model** model, ldep_train_report** report);

typedef enum ldep_train_status {
  LDEP_TRAIN_CONVERGED = 0,
  LDEP_TRAIN_MAX_ITERS = 1,
  LDEP_TRAIN_SOLVER_FAILURE = 2
} ldep_train_status;

typedef struct ldep_iteration {
  double objective;
  double penalized_objective;
  double slack_sum;
  double tau;
  int solver_status; /* 0 solved, 1 max_iter, 2 infeasible */
  int solver_iterations;
  int step_accepted;
} ldep_iteration;

LDEP_API void ldep_train_report_free(ldep_train_report* report);
LDEP_API ldep_train_status ldep_train_report_status(const ldep_train_report* report);
LDEP_API size_t ldep_train_report_iterations(const ldep_train_report* report);
LDEP_API ldep_status ldep_train_report_iteration(const ldep_train_report* report, size_t index,
                                                 ldep_iteration* out);
LDEP_API double ldep_train_report_final_objective(const ldep_train_report* report);
LDEP_API double ldep_train_report_wall_time(const ldep_train_report* report);
LDEP_API uint64_t ldep_train_report_seed(const ldep_train_report* report);

/* ---- evaluation ------------------------------------------------------ */

typedef struct ldep_confusion {
  size_t true_pos;
  size_t true_neg;
  size_t false_pos;
  size_t false_neg;
  double accuracy;
} ldep_confusion;

LDEP_API ldep_status ldep_evaluate(const ldep_model* model, const ldep_dataset* data,
                                   ldep_confusion* out);

/* Writes "x,y,tau,label" rows for a steps x steps grid; 2-feature models only. */
LDEP_API ldep_status ldep_export_grid(const ldep_model* model, double xmin, double xmax,
                                      double ymin, double ymax, int steps, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* LDEP_LDEP_H_ */
