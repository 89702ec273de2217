#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "moecs/cg.hpp"
#include "moecs/data.hpp"
#include "moecs/mcs.hpp"
#include "moecs/moe.hpp"

namespace moecs::bench {

enum class TrainerKind { MLP, GDME, CGME, MCSCGME };

std::string_view trainer_name(TrainerKind t);
TrainerKind parse_trainer(std::string_view name);

struct DatasetSpec {
  /// "funcapprox", "artificial" or "csv"
  std::string source = "artificial";
  std::filesystem::path path;
  data::CsvSchema schema;
  double subsample = 1.0;
  std::size_t per_class = 300;

  std::string display_name() const;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<TrainerKind> trainers{TrainerKind::MLP, TrainerKind::GDME, TrainerKind::CGME, TrainerKind::MCSCGME};
  std::size_t n_experts = 4;
  std::size_t expert_hidden = 5;
  std::size_t gate_hidden = 15;
  std::size_t baseline_hidden = 25;
  std::size_t epochs = 100;
  double eta_e = 0.1;
  double eta_g = 0.15;
  double momentum = 0.9;
  std::size_t k = 10;
  std::size_t restarts = 3;
  std::uint64_t seed = 0;
  double init_scale = 0.5;
  data::NormMode norm = data::NormMode::ZScore;
  cg::BetaFormula cg_formula = cg::BetaFormula::FletcherReeves;
  cg::LineSearchSpec ls{};
  /// Bounds are filled in per model as [-weight_bound, weight_bound].
  mcs::McsParams mcs{};
  double weight_bound = 2.0;
  /// 0 = one worker per hardware thread
  std::size_t threads = 0;
  /// Observers for the MCS weight searches; called from worker threads.
  mcs::SearchHooks mcs_hooks;

  void validate() const;
};

/// Plain "key = value" lines; '#' starts a comment. Relative dataset paths
/// resolve against `base_dir`.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& cfg);

struct RunRecord {
  TrainerKind trainer = TrainerKind::GDME;
  std::size_t fold = 0;
  std::size_t restart = 0;
  std::uint64_t seed = 0;
  double train_metric = 0.0;
  double test_metric = 0.0;
  double wall_ms = 0.0;
  bool ok = true;
  std::string error;
  std::vector<double> loss_trace;
};

struct TrainerSummary {
  TrainerKind trainer = TrainerKind::GDME;
  /// best over folds of the per-fold mean over restarts
  double best_fold_mean = 0.0;
  /// best single run
  double best_overall = 0.0;
  /// mean of the per-fold test metrics
  double average = 0.0;
  std::size_t ok_runs = 0;
  std::size_t failed_runs = 0;
};

struct RunReport {
  std::string dataset_name;
  data::Task task = data::Task::Classification;
  std::size_t folds = 0;
  std::size_t restarts = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<TrainerKind> trainers;
  /// sorted by (trainer order, fold, restart)
  std::vector<RunRecord> runs;
  std::string config_echo;

  std::vector<TrainerSummary> summarize() const;
};

/// Mean squared error over all outputs (regression) or accuracy in percent
/// with argmax decoding (classification).
double metric(const RealMat& predictions, const RealMat& Y, data::Task task);

/// Seed of one (trainer, fold, restart) run.
std::uint64_t run_seed(std::uint64_t base_seed, TrainerKind trainer, std::size_t fold, std::size_t restart);

/// Loads/generates the dataset described by the config.
struct PreparedData {
  data::Task task = data::Task::Classification;
  std::string name;
  /// full dataset for cross-validation, or the training split
  data::Dataset full;
  /// fixed held-out split (function approximation only)
  data::Dataset fixed_test;
  bool has_fixed_split = false;
  data::FoldPlan folds;

  std::size_t n_folds() const { return has_fixed_split ? 1 : folds.k; }
  /// Raw (unnormalized) train/test rows of one fold.
  std::pair<data::Dataset, data::Dataset> split(std::size_t fold) const;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

RunRecord run_one(const ExperimentConfig& cfg, const PreparedData& prepared, TrainerKind trainer, std::size_t fold,
                  std::size_t restart);
RunReport run_experiment(const ExperimentConfig& cfg);

enum class ReportFormat { Csv, Markdown };

std::string emit_report(const RunReport& r, ReportFormat format, bool include_timing = false);
/// Reads the per-run CSV back. Summary fields that the CSV does not carry
/// (sizes, config echo) stay empty.
RunReport parse_runs_csv(std::istream& in, data::Task task, std::string dataset_name = "runs");

/// Command-line entry point. Returns 0 on success, 1 on usage errors, 2 on
/// runtime failures.
int cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace moecs::bench
