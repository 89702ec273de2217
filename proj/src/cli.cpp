#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "moecs/bench.hpp"

namespace moecs::bench {

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 100.0 * (x[i + 1] - x[i] * x[i]) * (x[i + 1] - x[i] * x[i]) + (1.0 - x[i]) * (1.0 - x[i]);
  }
  return s;
}

double rastrigin(std::span<const double> x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

double ackley(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double s1 = 0.0, s2 = 0.0;
  for (double v : x) {
    s1 += v * v;
    s2 += std::cos(2.0 * std::numbers::pi * v);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(s1 / n)) - std::exp(s2 / n) + 20.0 + std::numbers::e;
}

mcs::Objective benchmark_function(const std::string& name) {
  if (name == "sphere") return sphere;
  if (name == "rosenbrock") return rosenbrock;
  if (name == "rastrigin") return rastrigin;
  if (name == "ackley") return ackley;
  throw CLI::ValidationError("objective", "unknown objective '" + name + "'");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace

int cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixture-of-experts trainers with conjugate gradient and modified cuckoo search"};
  app.fallthrough();
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Base random seed");

  auto* gen = app.add_subcommand("gen", "Export a generated dataset as CSV");
  std::string gen_name;
  std::filesystem::path gen_out;
  std::size_t per_class = 300;
  gen->add_option("dataset", gen_name, "funcapprox or artificial")->required()->check(CLI::IsMember({"funcapprox", "artificial"}));
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--per-class", per_class, "Samples per class (artificial)");

  auto* run = app.add_subcommand("run", "Run a full experiment from a config file");
  std::filesystem::path config_path, run_out, md_out;
  bool timing = false;
  std::size_t threads = 0;
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Per-run CSV report (default: stdout)");
  run->add_option("--md", md_out, "Also write the markdown summary here");
  run->add_flag("--timing", timing, "Fill the wall_ms column (makes output non-reproducible)");
  auto* threads_opt = run->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* search = app.add_subcommand("search", "Run CS or MCS on a benchmark function");
  std::string objective_name, algo = "mcs";
  std::size_t dim = 2, evals = 10000, nests = 25;
  double lo = -5.0, hi = 5.0;
  std::filesystem::path trace_out;
  search->add_option("objective", objective_name, "sphere, rosenbrock, rastrigin or ackley")->required();
  search->add_option("--dim", dim, "Dimension")->check(CLI::PositiveNumber);
  search->add_option("--evals", evals, "Objective evaluation budget");
  search->add_option("--nests", nests, "Population size");
  search->add_option("--algo", algo, "cs or mcs")->check(CLI::IsMember({"cs", "mcs"}));
  search->add_option("--lo", lo, "Lower bound in every dimension");
  search->add_option("--hi", hi, "Upper bound in every dimension");
  search->add_option("--trace", trace_out, "Trace CSV (default: stdout)");

  auto* report = app.add_subcommand("report", "Summarize a per-run CSV");
  std::filesystem::path runs_path;
  std::string format = "md", task_name = "classification";
  report->add_option("runs", runs_path, "Per-run CSV written by 'run'")->required()->check(CLI::ExistingFile);
  report->add_option("--format", format, "md or csv")->check(CLI::IsMember({"md", "csv"}));
  report->add_option("--task", task_name, "classification or regression")
      ->check(CLI::IsMember({"classification", "regression"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (gen->parsed()) {
      RngStream rng(seed, 0xda7a);
      if (gen_name == "funcapprox") {
        auto split = data::gen_funcapprox(rng);
        std::ostringstream tr, te;
        data::write_csv(split.train, tr);
        data::write_csv(split.test, te);
        write_file(gen_out / "train.csv", tr.str());
        write_file(gen_out / "test.csv", te.str());
      } else {
        std::ostringstream os;
        data::write_csv(data::gen_artificial(rng, per_class), os);
        write_file(gen_out / "artificial.csv", os.str());
      }
      return 0;
    }

    if (run->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      if (seed_opt->count()) cfg.seed = seed;
      if (threads_opt->count()) cfg.threads = threads;
      const RunReport rep = run_experiment(cfg);
      const std::string csv = emit_report(rep, ReportFormat::Csv, timing);
      if (run_out.empty()) {
        out << csv;
      } else {
        write_file(run_out, csv);
        out << emit_report(rep, ReportFormat::Markdown);
      }
      if (!md_out.empty()) write_file(md_out, emit_report(rep, ReportFormat::Markdown));
      return 0;
    }

    if (search->parsed()) {
      const mcs::Objective f = benchmark_function(objective_name);
      RngStream rng(seed, 0x5ea6c4);
      mcs::SearchResult res;
      if (algo == "cs") {
        mcs::CsParams p;
        p.n_nests = nests;
        p.max_evals = evals;
        p.bounds = mcs::Bounds::uniform(dim, lo, hi);
        res = mcs::cs_search(f, p, rng);
      } else {
        mcs::McsParams p;
        p.n_nests = nests;
        p.max_evals = evals;
        p.bounds = mcs::Bounds::uniform(dim, lo, hi);
        res = mcs::mcs_search(f, p, rng);
      }
      if (trace_out.empty()) {
        mcs::write_trace(res.trace, out);
      } else {
        std::ostringstream os;
        mcs::write_trace(res.trace, os);
        write_file(trace_out, os.str());
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s %s: best %.6g after %zu evaluations\n", algo.c_str(),
                      objective_name.c_str(), res.best.fitness, res.evaluations);
        out << buf;
      }
      return 0;
    }

    if (report->parsed()) {
      std::ifstream in(runs_path);
      if (!in) throw std::runtime_error("cannot open " + runs_path.string());
      const auto task = task_name == "regression" ? data::Task::Regression : data::Task::Classification;
      const RunReport rep = parse_runs_csv(in, task, runs_path.stem().string());
      out << emit_report(rep, format == "md" ? ReportFormat::Markdown : ReportFormat::Csv, true);
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace moecs::bench
