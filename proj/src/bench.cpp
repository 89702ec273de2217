#include "moecs/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace moecs::bench {

std::string_view trainer_name(TrainerKind t) {
  switch (t) {
    case TrainerKind::MLP: return "MLP";
    case TrainerKind::GDME: return "GDME";
    case TrainerKind::CGME: return "CGME";
    case TrainerKind::MCSCGME: return "MCS-CGME";
  }
  return "?";
}

TrainerKind parse_trainer(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "MLP") return TrainerKind::MLP;
  if (s == "GDME") return TrainerKind::GDME;
  if (s == "CGME") return TrainerKind::CGME;
  if (s == "MCS-CGME" || s == "MCSCGME" || s == "MCS_CGME") return TrainerKind::MCSCGME;
  throw ParameterError("unknown trainer '" + std::string(name) + "'");
}

std::string DatasetSpec::display_name() const {
  if (source == "csv") return path.stem().string();
  return source;
}

void ExperimentConfig::validate() const {
  if (dataset.source != "funcapprox" && dataset.source != "artificial" && dataset.source != "csv") {
    throw ParameterError("config: dataset must be funcapprox, artificial or csv");
  }
  if (dataset.source == "csv" && dataset.path.empty()) throw ParameterError("config: csv dataset needs a path");
  if (!(dataset.subsample > 0.0 && dataset.subsample <= 1.0)) throw ParameterError("config: subsample must be in (0, 1]");
  if (n_experts < 1 || expert_hidden < 1 || gate_hidden < 1 || baseline_hidden < 1 || epochs < 1 || restarts < 1) {
    throw ParameterError("config: counts must be >= 1");
  }
  if (k < 2) throw ParameterError("config: k must be >= 2");
  if (!(eta_e >= 0.0) || !(eta_g >= 0.0)) throw ParameterError("config: learning rates must be non-negative");
  if (!(init_scale > 0.0) || !(weight_bound > 0.0)) throw ParameterError("config: init_scale and weight_bound must be positive");
  ls.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || !std::isfinite(d)) throw ParameterError("config: '" + key + "' needs a number, got '" + v + "'");
  return d;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || v[0] == '-') {
    throw ParameterError("config: '" + key + "' needs a non-negative integer, got '" + v + "'");
  }
  return n;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ParameterError("config: '" + key + "' needs true/false, got '" + v + "'");
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "dataset") {
      cfg.dataset.source = val;
    } else if (key == "path") {
      std::filesystem::path p(val);
      cfg.dataset.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else if (key == "header") {
      cfg.dataset.schema.header = to_bool(key, val);
    } else if (key == "label_column") {
      cfg.dataset.schema.label_column = val;
    } else if (key == "delimiter") {
      if (val == "tab" || val == "\\t") {
        cfg.dataset.schema.delimiter = '\t';
      } else if (val.size() == 1) {
        cfg.dataset.schema.delimiter = val[0];
      } else {
        throw ParameterError("config: delimiter must be a single character or 'tab'");
      }
    } else if (key == "ignore_columns") {
      cfg.dataset.schema.ignore_columns = split_list(val);
    } else if (key == "task") {
      if (val == "classification") {
        cfg.dataset.schema.task = data::Task::Classification;
      } else if (val == "regression") {
        cfg.dataset.schema.task = data::Task::Regression;
      } else {
        throw ParameterError("config: task must be classification or regression");
      }
    } else if (key == "subsample") {
      cfg.dataset.subsample = to_real(key, val);
    } else if (key == "per_class") {
      cfg.dataset.per_class = to_count(key, val);
    } else if (key == "normalize") {
      if (val == "minmax01") {
        cfg.norm = data::NormMode::MinMax01;
      } else if (val == "zscore") {
        cfg.norm = data::NormMode::ZScore;
      } else {
        throw ParameterError("config: normalize must be minmax01 or zscore");
      }
    } else if (key == "trainers") {
      cfg.trainers.clear();
      for (const auto& t : split_list(val)) cfg.trainers.push_back(parse_trainer(t));
    } else if (key == "n_experts") {
      cfg.n_experts = to_count(key, val);
    } else if (key == "expert_hidden") {
      cfg.expert_hidden = to_count(key, val);
    } else if (key == "gate_hidden") {
      cfg.gate_hidden = to_count(key, val);
    } else if (key == "baseline_hidden") {
      cfg.baseline_hidden = to_count(key, val);
    } else if (key == "epochs") {
      cfg.epochs = to_count(key, val);
    } else if (key == "eta_e") {
      cfg.eta_e = to_real(key, val);
    } else if (key == "eta_g") {
      cfg.eta_g = to_real(key, val);
    } else if (key == "momentum") {
      cfg.momentum = to_real(key, val);
    } else if (key == "k") {
      cfg.k = to_count(key, val);
    } else if (key == "restarts") {
      cfg.restarts = to_count(key, val);
    } else if (key == "seed") {
      cfg.seed = to_count(key, val);
    } else if (key == "init_scale") {
      cfg.init_scale = to_real(key, val);
    } else if (key == "cg_formula") {
      cfg.cg_formula = cg::parse_formula(val);
    } else if (key == "ls_eta_max") {
      cfg.ls.eta_max = to_real(key, val);
    } else if (key == "ls_tol") {
      cfg.ls.tol = to_real(key, val);
    } else if (key == "ls_max_evals") {
      cfg.ls.max_evals = to_count(key, val);
    } else if (key == "ls_fallback") {
      cfg.ls.fallback_eta = to_real(key, val);
    } else if (key == "mcs_nests") {
      cfg.mcs.n_nests = to_count(key, val);
    } else if (key == "mcs_evals") {
      cfg.mcs.max_evals = to_count(key, val);
    } else if (key == "mcs_A") {
      cfg.mcs.A = to_real(key, val);
    } else if (key == "mcs_frac_abandon") {
      cfg.mcs.frac_abandon = to_real(key, val);
    } else if (key == "mcs_frac_top") {
      cfg.mcs.frac_top = to_real(key, val);
    } else if (key == "mcs_lambda") {
      cfg.mcs.lambda = to_real(key, val);
    } else if (key == "weight_bound") {
      cfg.weight_bound = to_real(key, val);
    } else if (key == "threads") {
      cfg.threads = to_count(key, val);
    } else {
      throw ParameterError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

std::string dump_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "dataset = " << c.dataset.source << '\n';
  if (c.dataset.source == "csv") os << "path = " << c.dataset.path.string() << '\n';
  os << "subsample = " << fmt6(c.dataset.subsample) << '\n';
  if (c.dataset.source == "artificial") os << "per_class = " << c.dataset.per_class << '\n';
  os << "normalize = " << (c.norm == data::NormMode::MinMax01 ? "minmax01" : "zscore") << '\n';
  os << "trainers = ";
  for (std::size_t i = 0; i < c.trainers.size(); ++i) os << (i ? ", " : "") << trainer_name(c.trainers[i]);
  os << '\n'
     << "n_experts = " << c.n_experts << "\nexpert_hidden = " << c.expert_hidden << "\ngate_hidden = " << c.gate_hidden
     << "\nbaseline_hidden = " << c.baseline_hidden << "\nepochs = " << c.epochs << "\neta_e = " << fmt6(c.eta_e)
     << "\neta_g = " << fmt6(c.eta_g) << "\nmomentum = " << fmt6(c.momentum) << "\nk = " << c.k
     << "\nrestarts = " << c.restarts << "\nseed = " << c.seed << "\ninit_scale = " << fmt6(c.init_scale)
     << "\ncg_formula = " << cg::formula_name(c.cg_formula) << "\nls_eta_max = " << fmt6(c.ls.eta_max)
     << "\nls_tol = " << fmt6(c.ls.tol) << "\nls_max_evals = " << c.ls.max_evals
     << "\nls_fallback = " << fmt6(c.ls.fallback_eta) << "\nmcs_nests = " << c.mcs.n_nests
     << "\nmcs_evals = " << c.mcs.max_evals << "\nmcs_A = " << fmt6(c.mcs.A)
     << "\nmcs_frac_abandon = " << fmt6(c.mcs.frac_abandon) << "\nmcs_frac_top = " << fmt6(c.mcs.frac_top)
     << "\nmcs_lambda = " << fmt6(c.mcs.lambda) << "\nweight_bound = " << fmt6(c.weight_bound) << '\n';
  return os.str();
}

double metric(const RealMat& predictions, const RealMat& Y, data::Task task) {
  if (predictions.rows() != Y.rows() || predictions.cols() != Y.cols()) {
    throw DimensionError("metric: predictions and targets differ in shape");
  }
  if (Y.rows() == 0) throw ParameterError("metric: no samples");
  if (task == data::Task::Regression) {
    double s = 0.0;
    for (std::size_t i = 0; i < Y.size(); ++i) {
      const double d = predictions.data()[i] - Y.data()[i];
      s += d * d;
    }
    return s / static_cast<double>(Y.size());
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < Y.rows(); ++r) {
    if (argmax(predictions.row(r)) == argmax(Y.row(r))) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(Y.rows());
}

std::uint64_t run_seed(std::uint64_t base_seed, TrainerKind trainer, std::size_t fold, std::size_t restart) {
  return derive_seed(base_seed, {0x72756eULL, static_cast<std::uint64_t>(trainer), fold, restart});
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  PreparedData p;
  p.name = cfg.dataset.display_name();
  RngStream data_rng(cfg.seed, 0xda7a);
  if (cfg.dataset.source == "funcapprox") {
    auto split = data::gen_funcapprox(data_rng);
    p.task = data::Task::Regression;
    p.full = std::move(split.train);
    p.fixed_test = std::move(split.test);
    p.has_fixed_split = true;
    return p;
  }
  if (cfg.dataset.source == "artificial") {
    p.full = data::gen_artificial(data_rng, cfg.dataset.per_class);
  } else {
    p.full = data::load_csv(cfg.dataset.path, cfg.dataset.schema);
  }
  p.task = p.full.task;
  if (cfg.dataset.subsample < 1.0) {
    RngStream sub_rng(cfg.seed, 0x5b5);
    p.full = data::subsample(p.full, cfg.dataset.subsample, sub_rng);
  }
  RngStream fold_rng(cfg.seed, 0xf01d);
  p.folds = data::kfold(p.full, cfg.k, fold_rng);
  return p;
}

std::pair<data::Dataset, data::Dataset> PreparedData::split(std::size_t fold) const {
  if (has_fixed_split) return {full, fixed_test};
  return {data::select_rows(full, folds.train_indices(fold)), data::select_rows(full, folds.test_indices(fold))};
}

namespace {

RealMat predict_all(const MoeModel& m, const RealMat& X) {
  RealMat out(X.rows(), m.topology.out_dim);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const RealVec y = predict(m, X.row(r));
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

RealMat predict_all(const MlpParams& p, const RealMat& X) {
  RealMat out(X.rows(), p.layout.out_dim);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const RealVec y = forward(p, X.row(r)).output;
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

/// Single-MLP baseline trained by CG on mean 0.5*|y - O|^2.
MlpParams train_baseline(const MlpLayout& layout, const data::Dataset& train, const ExperimentConfig& cfg,
                         RngStream& rng, std::vector<double>& trace) {
  const MlpParams init = init_mlp(layout, rng, cfg.init_scale);
  const RealMat& X = train.X;
  const RealMat& Y = train.Y;
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  auto objective = [&](std::span<const double> w) {
    const MlpParams p = unflatten(layout, w);
    double s = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const RealVec o = forward(p, X.row(r)).output;
      for (std::size_t k = 0; k < o.size(); ++k) s += 0.5 * (Y(r, k) - o[k]) * (Y(r, k) - o[k]);
    }
    return std::isfinite(s) ? s * inv_n : std::numeric_limits<double>::infinity();
  };
  auto gradient = [&](std::span<const double> w) {
    const MlpParams p = unflatten(layout, w);
    MlpParams g = MlpParams::zeros(layout);
    RealVec og(layout.out_dim);
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const ForwardTrace t = forward(p, X.row(r));
      for (std::size_t k = 0; k < og.size(); ++k) og[k] = -(Y(r, k) - t.output[k]);
      backprop_accumulate(p, X.row(r), t, og, inv_n, g);
    }
    return flatten(g);
  };
  cg::MinimizeOptions opts;
  opts.max_iters = cfg.epochs;
  opts.ls = cfg.ls;
  opts.formula = cfg.cg_formula;
  auto res = cg::minimize(objective, gradient, flatten(init), opts);
  trace = res.trace;
  return unflatten(layout, res.w);
}

}  // namespace

RunRecord run_one(const ExperimentConfig& cfg, const PreparedData& prepared, TrainerKind trainer, std::size_t fold,
                  std::size_t restart) {
  RunRecord rec;
  rec.trainer = trainer;
  rec.fold = fold;
  rec.restart = restart;
  rec.seed = run_seed(cfg.seed, trainer, fold, restart);
  const auto start = std::chrono::steady_clock::now();
  try {
    auto [train_raw, test_raw] = prepared.split(fold);
    const data::Dataset train = data::normalize(train_raw, cfg.norm);
    const data::Dataset test = data::apply_norm(test_raw, train.norm);
    const bool regression = prepared.task == data::Task::Regression;
    RngStream rng(rec.seed, 0x1417);

    RealMat train_pred, test_pred;
    if (trainer == TrainerKind::MLP) {
      const MlpLayout layout{train.X.cols(), cfg.baseline_hidden, train.Y.cols(),
                             regression ? OutActivation::Linear : OutActivation::Sigmoid};
      const MlpParams p = train_baseline(layout, train, cfg, rng, rec.loss_trace);
      train_pred = predict_all(p, train.X);
      test_pred = predict_all(p, test.X);
    } else {
      MoeTopology topo;
      topo.in_dim = train.X.cols();
      topo.out_dim = train.Y.cols();
      topo.n_experts = cfg.n_experts;
      topo.expert_hidden = cfg.expert_hidden;
      topo.gate_hidden = cfg.gate_hidden;
      topo.expert_activation = regression ? OutActivation::Linear : OutActivation::Sigmoid;

      TrainSpec spec;
      spec.epochs = cfg.epochs;
      spec.eta_e = cfg.eta_e;
      spec.eta_g = cfg.eta_g;
      spec.momentum = cfg.momentum;
      spec.cg_formula = cfg.cg_formula;
      spec.ls = cfg.ls;
      spec.seed = rec.seed;

      MoeModel model = init_moe(topo, rng, cfg.init_scale);
      if (trainer == TrainerKind::MCSCGME) {
        mcs::McsParams mp = cfg.mcs;
        mp.bounds = mcs::Bounds::uniform(topo.param_count(), -cfg.weight_bound, cfg.weight_bound);
        RngStream mcs_rng(rec.seed, 0x3c5);
        model = unflatten_model(topo, mcs::init_weights_mcs(model, train.X, train.Y, mp, mcs_rng, cfg.mcs_hooks));
      }
      TrainResult tr;
      if (trainer == TrainerKind::GDME) {
        spec.trainer = Trainer::GD;
        tr = train_gd(std::move(model), train.X, train.Y, spec);
      } else {
        spec.trainer = Trainer::CG;
        tr = train_cg(std::move(model), train.X, train.Y, spec);
      }
      rec.loss_trace = std::move(tr.loss_trace);
      train_pred = predict_all(tr.model, train.X);
      test_pred = predict_all(tr.model, test.X);
    }
    rec.train_metric = metric(train_pred, train.Y, prepared.task);
    rec.test_metric = metric(test_pred, test.Y, prepared.task);
    if (!std::isfinite(rec.train_metric) || !std::isfinite(rec.test_metric)) {
      throw TrainingDiverged("non-finite metric");
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.train_metric = std::numeric_limits<double>::quiet_NaN();
    rec.test_metric = std::numeric_limits<double>::quiet_NaN();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  const PreparedData prepared = prepare_data(cfg);
  RunReport report;
  report.dataset_name = prepared.name;
  report.task = prepared.task;
  report.folds = prepared.n_folds();
  report.restarts = cfg.restarts;
  report.trainers = cfg.trainers;
  report.config_echo = dump_config(cfg);
  {
    auto [tr, te] = prepared.split(0);
    report.train_size = tr.size();
    report.test_size = te.size();
  }

  struct Task {
    TrainerKind trainer;
    std::size_t fold, restart;
  };
  std::vector<Task> tasks;
  for (TrainerKind t : cfg.trainers) {
    for (std::size_t f = 0; f < report.folds; ++f) {
      for (std::size_t r = 0; r < cfg.restarts; ++r) tasks.push_back({t, f, r});
    }
  }
  report.runs.resize(tasks.size());

  // Each run owns its model and RNG; results land in their task slot, so the
  // final order never depends on completion order.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      report.runs[i] = run_one(cfg, prepared, tasks[i].trainer, tasks[i].fold, tasks[i].restart);
    }
  };
  std::size_t n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, std::max<std::size_t>(tasks.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return report;
}

std::vector<TrainerSummary> RunReport::summarize() const {
  const bool higher_better = task == data::Task::Classification;
  auto better = [&](double a, double b) { return higher_better ? a > b : a < b; };
  std::vector<TrainerSummary> out;
  for (TrainerKind t : trainers) {
    TrainerSummary s;
    s.trainer = t;
    std::map<std::size_t, std::pair<double, std::size_t>> per_fold;
    bool have_best = false;
    for (const auto& r : runs) {
      if (r.trainer != t) continue;
      if (!r.ok) {
        ++s.failed_runs;
        continue;
      }
      ++s.ok_runs;
      auto& acc = per_fold[r.fold];
      acc.first += r.test_metric;
      acc.second += 1;
      if (!have_best || better(r.test_metric, s.best_overall)) s.best_overall = r.test_metric;
      have_best = true;
    }
    if (per_fold.empty()) {
      s.best_fold_mean = s.best_overall = s.average = std::numeric_limits<double>::quiet_NaN();
    } else {
      double total = 0.0;
      bool first = true;
      for (const auto& [fold, acc] : per_fold) {
        const double m = acc.first / static_cast<double>(acc.second);
        total += m;
        if (first || better(m, s.best_fold_mean)) s.best_fold_mean = m;
        first = false;
      }
      s.average = total / static_cast<double>(per_fold.size());
    }
    out.push_back(s);
  }
  return out;
}

std::string emit_report(const RunReport& r, ReportFormat format, bool include_timing) {
  std::ostringstream os;
  if (format == ReportFormat::Csv) {
    os << "trainer,fold,restart,seed,train_metric,test_metric,wall_ms,status\n";
    for (const auto& run : r.runs) {
      os << trainer_name(run.trainer) << ',' << run.fold << ',' << run.restart << ',' << run.seed << ','
         << fmt6(run.train_metric) << ',' << fmt6(run.test_metric) << ','
         << (include_timing ? fmt6(run.wall_ms) : std::string("0")) << ',' << (run.ok ? "ok" : "failed") << '\n';
    }
    return os.str();
  }

  const bool classification = r.task == data::Task::Classification;
  const auto summary = r.summarize();
  auto cell = [&](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, classification ? "%.2f" : "%.4g", v);
    return std::string(buf);
  };
  os << "## " << r.dataset_name << (classification ? ": accuracy (%)" : ": MSE (normalized targets)") << "\n\n";
  os << "Evaluation: "
     << (r.folds > 1 ? std::to_string(r.folds) + "-fold cross-validation" : std::string("fixed train/test split"))
     << ", " << r.restarts << " restart(s) per fold.\n";
  os << "Best (fold mean) = best over folds of the per-fold mean over restarts; "
        "Best (overall) = best single run; Average = mean of per-fold test metrics.\n\n";

  if (classification) {
    os << "| Dataset |";
    for (const auto& s : summary) {
      const auto n = trainer_name(s.trainer);
      os << ' ' << n << " Best (fold mean) | " << n << " Best (overall) | " << n << " Average |";
    }
    os << "\n|---|";
    for (std::size_t i = 0; i < summary.size(); ++i) os << "---|---|---|";
    os << '\n';
    if (!summary.empty()) {
      os << "| " << r.dataset_name << " |";
      for (const auto& s : summary) {
        os << ' ' << cell(s.best_fold_mean) << " | " << cell(s.best_overall) << " | " << cell(s.average) << " |";
      }
      os << '\n';
    }
  } else {
    os << "| Trainer | MSE Average | MSE Best (fold mean) | MSE Best (overall) | Training set size | Test set size |\n"
       << "|---|---|---|---|---|---|\n";
    for (const auto& s : summary) {
      os << "| " << trainer_name(s.trainer) << " | " << cell(s.average) << " | " << cell(s.best_fold_mean) << " | "
         << cell(s.best_overall) << " | " << r.train_size << " | " << r.test_size << " |\n";
    }
  }
  std::size_t failed = 0;
  for (const auto& s : summary) failed += s.failed_runs;
  if (failed) os << "\n" << failed << " run(s) failed and are excluded from the aggregates.\n";
  return os.str();
}

RunReport parse_runs_csv(std::istream& in, data::Task task, std::string dataset_name) {
  RunReport r;
  r.task = task;
  r.dataset_name = std::move(dataset_name);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "trainer,fold,restart,seed,train_metric,test_metric,wall_ms,status") {
    throw data::IngestError("runs csv: unexpected header");
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    ++row;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 8) throw data::IngestError("runs csv: row " + std::to_string(row) + " does not have 8 fields");
    RunRecord rec;
    try {
      rec.trainer = parse_trainer(f[0]);
      rec.fold = std::stoull(f[1]);
      rec.restart = std::stoull(f[2]);
      rec.seed = std::stoull(f[3]);
      rec.train_metric = std::stod(f[4]);
      rec.test_metric = std::stod(f[5]);
      rec.wall_ms = std::stod(f[6]);
    } catch (const std::exception&) {
      throw data::IngestError("runs csv: row " + std::to_string(row) + " has a malformed field");
    }
    rec.ok = f[7] == "ok";
    if (std::find(r.trainers.begin(), r.trainers.end(), rec.trainer) == r.trainers.end()) r.trainers.push_back(rec.trainer);
    r.folds = std::max(r.folds, rec.fold + 1);
    r.restarts = std::max(r.restarts, rec.restart + 1);
    r.runs.push_back(std::move(rec));
  }
  return r;
}

}  // namespace moecs::bench
