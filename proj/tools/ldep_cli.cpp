// Command-line front end. Talks to the library only through the C API.
//
// Machine-readable results go to stdout as key=value lines; diagnostics go to
// stderr. Exit codes: 0 success, 1 usage/I/O/parse errors, 2 solver failure.

#include "ldep/ldep.h"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitError = 1;
constexpr int kExitSolver = 2;

struct ModelDeleter {
  void operator()(ldep_model* m) const { ldep_model_free(m); }
};
struct DatasetDeleter {
  void operator()(ldep_dataset* d) const { ldep_dataset_free(d); }
};
struct ReportDeleter {
  void operator()(ldep_train_report* r) const { ldep_train_report_free(r); }
};
using ModelPtr = std::unique_ptr<ldep_model, ModelDeleter>;
using DatasetPtr = std::unique_ptr<ldep_dataset, DatasetDeleter>;
using ReportPtr = std::unique_ptr<ldep_train_report, ReportDeleter>;

class CommandError : public std::runtime_error {
 public:
  CommandError(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

void check(ldep_status s, const std::string& context) {
  if (s == LDEP_OK) return;
  const int code = s == LDEP_ERR_SOLVER ? kExitSolver : kExitError;
  std::string msg = context + ": " + ldep_status_string(s);
  if (*ldep_last_error()) msg += ": " + std::string(ldep_last_error());
  throw CommandError(code, msg);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

DatasetPtr load_dataset(const std::string& path) {
  ldep_dataset* d = nullptr;
  check(ldep_dataset_load_csv(path.c_str(), 0, &d), "loading " + path);
  return DatasetPtr(d);
}

ModelPtr load_model(const std::string& path) {
  ldep_model* m = nullptr;
  check(ldep_model_load(path.c_str(), &m), "loading " + path);
  return ModelPtr(m);
}

const char* train_status_name(ldep_train_status s) {
  switch (s) {
    case LDEP_TRAIN_CONVERGED: return "converged";
    case LDEP_TRAIN_MAX_ITERS: return "max_iters";
    case LDEP_TRAIN_SOLVER_FAILURE: return "solver_failure";
  }
  return "unknown";
}

struct TrainArgs {
  std::string data;
  std::string out = "model.ldep";
  ldep_train_options opt{};
};

int cmd_train(const TrainArgs& args) {
  DatasetPtr data = load_dataset(args.data);
  const ldep_train_options& o = args.opt;

  ldep_model* raw_model = nullptr;
  ldep_train_report* raw_report = nullptr;
  const ldep_status st = ldep_train(data.get(), &o, &raw_model, &raw_report);
  ModelPtr model(raw_model);
  ReportPtr report(raw_report);
  if (st != LDEP_OK && st != LDEP_ERR_SOLVER) check(st, "training");

  ldep_confusion conf{};
  check(ldep_evaluate(model.get(), data.get(), &conf), "evaluating on training data");

  const double objective = ldep_train_report_final_objective(report.get());
  const size_t iterations = ldep_train_report_iterations(report.get());
  const char* status = train_status_name(ldep_train_report_status(report.get()));

  const std::vector<std::pair<std::string, std::string>> meta = {
      {"C", num(o.C)},
      {"alpha", num(o.alpha)},
      {"lambda_w", num(o.lambda_w)},
      {"lambda_m", num(o.lambda_m)},
      {"n1", std::to_string(o.n1)},
      {"n2", std::to_string(o.n2)},
      {"tau0", num(o.tau0)},
      {"mu", num(o.mu)},
      {"tau_max", num(o.tau_max)},
      {"max_iters", std::to_string(o.max_iters)},
      {"tol_obj", num(o.tol_obj)},
      {"tol_slack", num(o.tol_slack)},
      {"solver_eps", num(o.solver_eps_abs)},
      {"seed", std::to_string(o.seed)},
      {"restarts", std::to_string(o.restarts)},
      {"standardize", o.standardize ? "1" : "0"},
      {"selected_seed", std::to_string(ldep_train_report_seed(report.get()))},
      {"status", status},
      {"iterations", std::to_string(iterations)},
      {"final_objective", num(objective)},
      {"train_accuracy", num(conf.accuracy)},
  };
  for (const auto& [k, v] : meta)
    check(ldep_model_set_meta(model.get(), k.c_str(), v.c_str()), "setting metadata");
  check(ldep_model_save(model.get(), args.out.c_str()), "saving " + args.out);

  std::cout << "final_objective=" << num(objective) << '\n'
            << "train_accuracy=" << fixed(conf.accuracy) << '\n'
            << "iterations=" << iterations << '\n'
            << "status=" << status << '\n'
            << "seed=" << ldep_train_report_seed(report.get()) << '\n'
            << "wall_time=" << fixed(ldep_train_report_wall_time(report.get())) << '\n'
            << "model=" << args.out << '\n';
  if (st == LDEP_ERR_SOLVER) check(st, "training");
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path) {
  ModelPtr model = load_model(model_path);
  DatasetPtr data = load_dataset(data_path);
  ldep_confusion c{};
  check(ldep_evaluate(model.get(), data.get(), &c), "evaluating " + data_path);
  std::cout << "accuracy=" << fixed(c.accuracy) << '\n'
            << "samples=" << c.true_pos + c.true_neg + c.false_pos + c.false_neg << '\n'
            << "true_pos=" << c.true_pos << '\n'
            << "true_neg=" << c.true_neg << '\n'
            << "false_pos=" << c.false_pos << '\n'
            << "false_neg=" << c.false_neg << '\n';
  return 0;
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw CommandError(kExitError, "cannot parse point '" + text + "'");
    }
  }
  return v;
}

int cmd_predict(const std::string& model_path, const std::vector<std::string>& points,
                const std::string& data_path) {
  ModelPtr model = load_model(model_path);
  if (points.empty() && data_path.empty())
    throw CommandError(kExitError, "predict needs --point or --data");
  auto emit = [&model](const std::vector<double>& x) {
    double tau = 0.0;
    int label = 0;
    check(ldep_model_decision(model.get(), x.data(), x.size(), &tau), "evaluating point");
    check(ldep_model_predict(model.get(), x.data(), x.size(), &label), "evaluating point");
    std::cout << "tau=" << num(tau) << " label=" << label << '\n';
  };
  for (const auto& p : points) emit(parse_point(p));
  if (!data_path.empty()) {
    DatasetPtr data = load_dataset(data_path);
    size_t m = 0, n = 0;
    check(ldep_dataset_dims(data.get(), &m, &n), "reading dataset");
    std::vector<double> X(m * n);
    check(ldep_dataset_data(data.get(), X.data(), nullptr), "reading dataset");
    for (size_t k = 0; k < m; ++k)
      emit(std::vector<double>(X.begin() + static_cast<std::ptrdiff_t>(k * n),
                               X.begin() + static_cast<std::ptrdiff_t>((k + 1) * n)));
  }
  return 0;
}

int cmd_grid(const std::string& model_path, double xmin, double xmax, double ymin, double ymax,
             int steps, const std::string& out) {
  ModelPtr model = load_model(model_path);
  check(ldep_export_grid(model.get(), xmin, xmax, ymin, ymax, steps, out.c_str()),
        "exporting grid");
  std::cout << "grid=" << out << '\n' << "rows=" << static_cast<long long>(steps) * steps << '\n';
  return 0;
}

int cmd_gen_data(size_t train_count, size_t test_count, uint64_t seed, double variance,
                 const std::string& prefix) {
  ldep_mixture_params params;
  ldep_mixture_params_default(&params);
  if (variance >= 0.0) params.variance = variance;
  ldep_dataset* tr = nullptr;
  ldep_dataset* te = nullptr;
  check(ldep_generate_mixture(train_count, test_count, &params, seed, &tr, &te),
        "generating data");
  DatasetPtr train(tr), test(te);
  const std::string train_path = prefix + "_train.csv";
  const std::string test_path = prefix + "_test.csv";
  check(ldep_dataset_save_csv(train.get(), train_path.c_str()), "writing " + train_path);
  check(ldep_dataset_save_csv(test.get(), test_path.c_str()), "writing " + test_path);
  std::cout << "train_file=" << train_path << '\n'
            << "train_count=" << train_count << '\n'
            << "test_file=" << test_path << '\n'
            << "test_count=" << test_count << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear dilation-erosion perceptron: train, evaluate and inspect classifiers"};
  app.require_subcommand(1);

  TrainArgs train;
  ldep_train_options_default(&train.opt);
  bool standardize = false, parallel = false;
  auto* t = app.add_subcommand("train", "Train a model on a labeled CSV file");
  t->add_option("--data", train.data, "Training CSV (features..., label)")->required();
  t->add_option("--out", train.out, "Model file to write")->capture_default_str();
  t->add_option("--n1", train.opt.n1, "Dilation-side rows")->capture_default_str();
  t->add_option("--n2", train.opt.n2, "Erosion-side rows")->capture_default_str();
  t->add_option("--c", train.opt.C, "Hinge weight C")->capture_default_str();
  t->add_option("--alpha", train.opt.alpha, "Elastic-net mix in [0,1]")->capture_default_str();
  t->add_option("--lambda-w", train.opt.lambda_w, "Regularization weight of W")
      ->capture_default_str();
  t->add_option("--lambda-m", train.opt.lambda_m, "Regularization weight of M")
      ->capture_default_str();
  t->add_option("--seed", train.opt.seed, "Initialization seed")->capture_default_str();
  t->add_option("--restarts", train.opt.restarts, "Independent runs; best objective wins")
      ->capture_default_str();
  t->add_option("--tau0", train.opt.tau0, "Initial slack penalty")->capture_default_str();
  t->add_option("--mu", train.opt.mu, "Penalty growth factor")->capture_default_str();
  t->add_option("--tau-max", train.opt.tau_max, "Penalty cap")->capture_default_str();
  t->add_option("--max-iters", train.opt.max_iters, "Convex-concave iterations")
      ->capture_default_str();
  t->add_option("--tol-obj", train.opt.tol_obj, "Relative objective change to stop")
      ->capture_default_str();
  t->add_option("--tol-slack", train.opt.tol_slack, "Slack sum allowed at convergence")
      ->capture_default_str();
  double solver_eps = train.opt.solver_eps_abs;
  t->add_option("--solver-eps", solver_eps, "Subproblem solver tolerance (absolute and relative)")
      ->capture_default_str();
  t->add_flag("--standardize", standardize, "Standardize features (folded back into the model)");
  t->add_flag("--parallel", parallel, "Run restarts concurrently");

  std::string eval_model, eval_data;
  auto* e = app.add_subcommand("eval", "Report accuracy and confusion counts");
  e->add_option("--model", eval_model, "Model file")->required();
  e->add_option("--data", eval_data, "Labeled CSV")->required();

  std::string pred_model, pred_data;
  std::vector<std::string> pred_points;
  auto* p = app.add_subcommand("predict", "Decision values and labels for points");
  p->add_option("--model", pred_model, "Model file")->required();
  p->add_option("--point", pred_points, "Comma-separated feature vector (repeatable)");
  p->add_option("--data", pred_data, "CSV whose leading columns are features");

  std::string grid_model, grid_out = "grid.csv";
  double xmin = -1.5, xmax = 1.0, ymin = -0.3, ymax = 1.2;
  int steps = 101;
  auto* g = app.add_subcommand("grid", "Export the decision function over a 2-D grid");
  g->add_option("--model", grid_model, "Model file")->required();
  g->add_option("--xmin", xmin)->capture_default_str();
  g->add_option("--xmax", xmax)->capture_default_str();
  g->add_option("--ymin", ymin)->capture_default_str();
  g->add_option("--ymax", ymax)->capture_default_str();
  g->add_option("--steps", steps, "Grid points per axis")->capture_default_str();
  g->add_option("--out", grid_out, "Output CSV")->capture_default_str();

  size_t train_count = 250, test_count = 1000;
  uint64_t data_seed = 1;
  double variance = -1.0;
  std::string prefix = "ripley";
  auto* d = app.add_subcommand("gen-data", "Generate a two-class Gaussian mixture benchmark");
  d->add_option("--train-count", train_count)->capture_default_str();
  d->add_option("--test-count", test_count)->capture_default_str();
  d->add_option("--seed", data_seed)->capture_default_str();
  d->add_option("--variance", variance, "Component variance (default 0.03)");
  d->add_option("--out-prefix", prefix, "Writes <prefix>_train.csv and <prefix>_test.csv")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitError;
  }

  try {
    if (*t) {
      train.opt.standardize = standardize ? 1 : 0;
      train.opt.parallel_restarts = parallel ? 1 : 0;
      train.opt.solver_eps_abs = train.opt.solver_eps_rel = solver_eps;
      return cmd_train(train);
    }
    if (*e) return cmd_eval(eval_model, eval_data);
    if (*p) return cmd_predict(pred_model, pred_points, pred_data);
    if (*g) return cmd_grid(grid_model, xmin, xmax, ymin, ymax, steps, grid_out);
    if (*d) return cmd_gen_data(train_count, test_count, data_seed, variance, prefix);
  } catch (const CommandError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return ex.code();
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
