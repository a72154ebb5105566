#include "ldep/ldep.h"

#include "ldep/ccp_trainer.hpp"
#include "ldep/dataio.hpp"
#include "ldep/error.hpp"

#include <algorithm>
#include <exception>
#include <new>
#include <string>

struct ldep_model {
  ldep::ModelFile file;
};

struct ldep_dataset {
  ldep::Dataset data;
};

struct ldep_train_report {
  ldep::TrainReport report;
};

namespace {

thread_local std::string g_last_error;

ldep_status to_status(ldep::ErrorKind k) {
  switch (k) {
    case ldep::ErrorKind::InvalidArgument: return LDEP_ERR_INVALID_ARGUMENT;
    case ldep::ErrorKind::DimensionMismatch: return LDEP_ERR_DIMENSION;
    case ldep::ErrorKind::Io: return LDEP_ERR_IO;
    case ldep::ErrorKind::Parse: return LDEP_ERR_PARSE;
    case ldep::ErrorKind::Version: return LDEP_ERR_VERSION;
    case ldep::ErrorKind::Shape: return LDEP_ERR_SHAPE;
    case ldep::ErrorKind::Solver: return LDEP_ERR_SOLVER;
  }
  return LDEP_ERR_INTERNAL;
}

ldep_status fail(ldep_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class F>
ldep_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const ldep::Error& e) {
    return fail(to_status(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(LDEP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LDEP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LDEP_ERR_INTERNAL, "unknown error");
  }
}

ldep_status null_arg(const char* name) {
  return fail(LDEP_ERR_INVALID_ARGUMENT, std::string(name) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* ldep_version(void) { return "1.0.0"; }

const char* ldep_last_error(void) { return g_last_error.c_str(); }

const char* ldep_status_string(ldep_status status) {
  switch (status) {
    case LDEP_OK: return "ok";
    case LDEP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LDEP_ERR_DIMENSION: return "dimension mismatch";
    case LDEP_ERR_IO: return "i/o error";
    case LDEP_ERR_PARSE: return "parse error";
    case LDEP_ERR_VERSION: return "unsupported version";
    case LDEP_ERR_SHAPE: return "shape error";
    case LDEP_ERR_SOLVER: return "solver failure";
    case LDEP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

ldep_status ldep_model_create(size_t n, size_t n1, size_t n2, const double* W, const double* a,
                              const double* M, const double* b, ldep_model** out) {
  if (!W || !a || !M || !b) return null_arg("parameter buffers");
  if (!out) return null_arg("out");
  return guarded([&] {
    using ldep::Matrix;
    using ldep::Vector;
    const auto rn = static_cast<Eigen::Index>(n);
    const auto r1 = static_cast<Eigen::Index>(n1);
    const auto r2 = static_cast<Eigen::Index>(n2);
    auto m = new ldep_model{{ldep::LDepModel(Matrix(Eigen::Map<const Matrix>(W, r1, rn)),
                                             Vector(Eigen::Map<const Vector>(a, r1)),
                                             Matrix(Eigen::Map<const Matrix>(M, r2, rn)),
                                             Vector(Eigen::Map<const Vector>(b, r2))),
                             {}}};
    *out = m;
    return LDEP_OK;
  });
}

void ldep_model_free(ldep_model* model) { delete model; }

ldep_status ldep_model_dims(const ldep_model* model, size_t* n, size_t* n1, size_t* n2) {
  if (!model) return null_arg("model");
  const auto& m = model->file.model;
  if (n) *n = static_cast<size_t>(m.input_dim());
  if (n1) *n1 = static_cast<size_t>(m.dilation_rows());
  if (n2) *n2 = static_cast<size_t>(m.erosion_rows());
  return LDEP_OK;
}

ldep_status ldep_model_params(const ldep_model* model, double* W, double* a, double* M,
                              double* b) {
  if (!model) return null_arg("model");
  const auto& m = model->file.model;
  if (W) std::copy(m.W.data(), m.W.data() + m.W.size(), W);
  if (a) std::copy(m.a.data(), m.a.data() + m.a.size(), a);
  if (M) std::copy(m.M.data(), m.M.data() + m.M.size(), M);
  if (b) std::copy(m.b.data(), m.b.data() + m.b.size(), b);
  return LDEP_OK;
}

ldep_status ldep_model_decision(const ldep_model* model, const double* x, size_t n, double* tau) {
  if (!model) return null_arg("model");
  if (!x || !tau) return null_arg("x and tau");
  return guarded([&] {
    *tau = ldep::decision_function(
        model->file.model, Eigen::Map<const ldep::Vector>(x, static_cast<Eigen::Index>(n)));
    return LDEP_OK;
  });
}

ldep_status ldep_model_predict(const ldep_model* model, const double* x, size_t n, int* label) {
  if (!model) return null_arg("model");
  if (!x || !label) return null_arg("x and label");
  return guarded([&] {
    *label = ldep::predict(model->file.model,
                           Eigen::Map<const ldep::Vector>(x, static_cast<Eigen::Index>(n)));
    return LDEP_OK;
  });
}

ldep_status ldep_model_set_meta(ldep_model* model, const char* key, const char* value) {
  if (!model || !key || !value) return null_arg("model, key and value");
  return guarded([&] {
    const std::string k(key), v(value);
    if (k.empty() || k.find_first_of(" \t\r\n") != std::string::npos ||
        v.find_first_of("\r\n") != std::string::npos)
      return fail(LDEP_ERR_INVALID_ARGUMENT, "metadata key must be a single token, value one line");
    for (auto& [mk, mv] : model->file.metadata)
      if (mk == k) {
        mv = v;
        return LDEP_OK;
      }
    model->file.metadata.emplace_back(k, v);
    return LDEP_OK;
  });
}

ldep_status ldep_model_save(const ldep_model* model, const char* path) {
  if (!model || !path) return null_arg("model and path");
  return guarded([&] {
    ldep::save_model(model->file, std::string(path));
    return LDEP_OK;
  });
}

ldep_status ldep_model_load(const char* path, ldep_model** out) {
  if (!path || !out) return null_arg("path and out");
  return guarded([&] {
    *out = new ldep_model{ldep::load_model(path)};
    return LDEP_OK;
  });
}

ldep_status ldep_dataset_create(size_t m, size_t n, const double* X, const int* labels,
                                ldep_dataset** out) {
  if (!X || !labels || !out) return null_arg("X, labels and out");
  return guarded([&] {
    ldep::Matrix mat =
        Eigen::Map<const ldep::Matrix>(X, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    *out = new ldep_dataset{ldep::Dataset(std::move(mat), std::vector<int>(labels, labels + m))};
    return LDEP_OK;
  });
}

void ldep_dataset_free(ldep_dataset* data) { delete data; }

ldep_status ldep_dataset_load_csv(const char* path, size_t expected_dim, ldep_dataset** out) {
  if (!path || !out) return null_arg("path and out");
  return guarded([&] {
    std::optional<Eigen::Index> dim;
    if (expected_dim > 0) dim = static_cast<Eigen::Index>(expected_dim);
    *out = new ldep_dataset{ldep::load_csv(path, dim)};
    return LDEP_OK;
  });
}

ldep_status ldep_dataset_save_csv(const ldep_dataset* data, const char* path) {
  if (!data || !path) return null_arg("data and path");
  return guarded([&] {
    ldep::write_csv(data->data, std::string(path));
    return LDEP_OK;
  });
}

ldep_status ldep_dataset_dims(const ldep_dataset* data, size_t* m, size_t* n) {
  if (!data) return null_arg("data");
  if (m) *m = static_cast<size_t>(data->data.size());
  if (n) *n = static_cast<size_t>(data->data.dim());
  return LDEP_OK;
}

ldep_status ldep_dataset_data(const ldep_dataset* data, double* X, int* labels) {
  if (!data) return null_arg("data");
  const auto& d = data->data;
  if (X) std::copy(d.X.data(), d.X.data() + d.X.size(), X);
  if (labels) std::copy(d.y.begin(), d.y.end(), labels);
  return LDEP_OK;
}

void ldep_mixture_params_default(ldep_mixture_params* params) {
  if (!params) return;
  const ldep::MixtureParams d;
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < 2; ++k) {
      params->negative_means[c][k] = d.negative_means[c][k];
      params->positive_means[c][k] = d.positive_means[c][k];
    }
  params->variance = d.variance;
}

ldep_status ldep_generate_mixture(size_t train_count, size_t test_count,
                                  const ldep_mixture_params* params, uint64_t seed,
                                  ldep_dataset** train, ldep_dataset** test) {
  if (!train || !test) return null_arg("train and test");
  return guarded([&] {
    ldep::MixtureParams p;
    if (params) {
      for (int c = 0; c < 2; ++c)
        for (int k = 0; k < 2; ++k) {
          p.negative_means[c][k] = params->negative_means[c][k];
          p.positive_means[c][k] = params->positive_means[c][k];
        }
      p.variance = params->variance;
    }
    auto [tr, te] = ldep::generate_two_moons_gaussians(train_count, test_count, p, seed);
    *train = new ldep_dataset{std::move(tr)};
    *test = new ldep_dataset{std::move(te)};
    return LDEP_OK;
  });
}

void ldep_train_options_default(ldep_train_options* o) {
  if (!o) return;
  const ldep::TrainConfig d;
  o->C = d.C;
  o->alpha = d.alpha;
  o->lambda_w = d.lambda_w;
  o->lambda_m = d.lambda_m;
  o->n1 = d.n1;
  o->n2 = d.n2;
  o->tau0 = d.ccp.tau0;
  o->mu = d.ccp.mu;
  o->tau_max = d.ccp.tau_max;
  o->max_iters = d.ccp.max_iters;
  o->tol_obj = d.ccp.tol_obj;
  o->tol_slack = d.ccp.tol_slack;
  o->solver_eps_abs = d.solver.eps_abs;
  o->solver_eps_rel = d.solver.eps_rel;
  o->solver_max_iter = d.solver.max_iter;
  o->seed = d.seed;
  o->restarts = 1;
  o->parallel_restarts = 0;
  o->standardize = 0;
}

ldep_status ldep_train(const ldep_dataset* data, const ldep_train_options* options,
                       ldep_model** model, ldep_train_report** report) {
  if (!data || !options || !model || !report) return null_arg("data, options, model and report");
  return guarded([&] {
    ldep::TrainConfig cfg;
    cfg.C = options->C;
    cfg.alpha = options->alpha;
    cfg.lambda_w = options->lambda_w;
    cfg.lambda_m = options->lambda_m;
    cfg.n1 = options->n1;
    cfg.n2 = options->n2;
    cfg.ccp.tau0 = options->tau0;
    cfg.ccp.mu = options->mu;
    cfg.ccp.tau_max = options->tau_max;
    cfg.ccp.max_iters = options->max_iters;
    cfg.ccp.tol_obj = options->tol_obj;
    cfg.ccp.tol_slack = options->tol_slack;
    cfg.solver.eps_abs = options->solver_eps_abs;
    cfg.solver.eps_rel = options->solver_eps_rel;
    cfg.solver.max_iter = options->solver_max_iter;
    cfg.seed = options->seed;
    cfg.validate();

    const ldep::Dataset& raw = data->data;
    std::optional<ldep::Standardizer> scaler;
    if (options->standardize) scaler = ldep::Standardizer::fit(raw);
    const ldep::Dataset fitted = scaler ? scaler->apply(raw) : raw;

    ldep::TrainResult result = ldep::train_best_of(fitted, cfg, options->restarts,
                                                   options->parallel_restarts != 0);
    if (scaler) result.model = scaler->fold_into(result.model);

    auto* m = new ldep_model{{std::move(result.model), {}}};
    *model = m;
    *report = new ldep_train_report{std::move(result.report)};
    if ((*report)->report.status == ldep::TrainStatus::SolverFailure)
      return fail(LDEP_ERR_SOLVER, "subproblem solver failed after one restart");
    return LDEP_OK;
  });
}

void ldep_train_report_free(ldep_train_report* report) { delete report; }

ldep_train_status ldep_train_report_status(const ldep_train_report* report) {
  if (!report) return LDEP_TRAIN_SOLVER_FAILURE;
  switch (report->report.status) {
    case ldep::TrainStatus::Converged: return LDEP_TRAIN_CONVERGED;
    case ldep::TrainStatus::MaxItersReached: return LDEP_TRAIN_MAX_ITERS;
    case ldep::TrainStatus::SolverFailure: return LDEP_TRAIN_SOLVER_FAILURE;
  }
  return LDEP_TRAIN_SOLVER_FAILURE;
}

size_t ldep_train_report_iterations(const ldep_train_report* report) {
  return report ? report->report.iterations.size() : 0;
}

ldep_status ldep_train_report_iteration(const ldep_train_report* report, size_t index,
                                        ldep_iteration* out) {
  if (!report || !out) return null_arg("report and out");
  if (index >= report->report.iterations.size())
    return fail(LDEP_ERR_INVALID_ARGUMENT, "iteration index out of range");
  const auto& r = report->report.iterations[index];
  out->objective = r.objective;
  out->penalized_objective = r.penalized_objective;
  out->slack_sum = r.slack_sum;
  out->tau = r.tau;
  out->solver_status = static_cast<int>(r.solver_status);
  out->solver_iterations = r.solver_iterations;
  out->step_accepted = r.step_accepted ? 1 : 0;
  return LDEP_OK;
}

double ldep_train_report_final_objective(const ldep_train_report* report) {
  return report ? report->report.final_objective : 0.0;
}

double ldep_train_report_wall_time(const ldep_train_report* report) {
  return report ? report->report.wall_time_seconds : 0.0;
}

uint64_t ldep_train_report_seed(const ldep_train_report* report) {
  return report ? report->report.seed : 0;
}

ldep_status ldep_evaluate(const ldep_model* model, const ldep_dataset* data, ldep_confusion* out) {
  if (!model || !data || !out) return null_arg("model, data and out");
  return guarded([&] {
    const ldep::Confusion c = ldep::confusion(model->file.model, data->data);
    out->true_pos = c.true_pos;
    out->true_neg = c.true_neg;
    out->false_pos = c.false_pos;
    out->false_neg = c.false_neg;
    out->accuracy = c.accuracy();
    return LDEP_OK;
  });
}

ldep_status ldep_export_grid(const ldep_model* model, double xmin, double xmax, double ymin,
                             double ymax, int steps, const char* path) {
  if (!model || !path) return null_arg("model and path");
  return guarded([&] {
    ldep::export_grid(model->file.model, ldep::GridSpec{xmin, xmax, ymin, ymax, steps},
                      std::string(path));
    return LDEP_OK;
  });
}

}  // extern "C"
