#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "moecs/numkernel.hpp"

namespace moecs::data {

/// Malformed or unreadable input file; the message names the offending row.
class IngestError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Task { Regression, Classification };
enum class NormMode { MinMax01, ZScore };

struct NormRecord {
  bool fitted = false;
  NormMode mode = NormMode::MinMax01;
  /// minmax01: (min, max); zscore: (mean, sd)
  std::vector<std::pair<double, double>> features;
  /// columns left untouched because they are constant
  std::vector<bool> constant;
  /// regression only: raw (min, max) per target column, mapped to [0.05, 0.95]
  std::vector<std::pair<double, double>> targets;

  bool operator==(const NormRecord&) const = default;
};

struct Dataset {
  RealMat X;
  RealMat Y;
  Task task = Task::Classification;
  std::size_t n_classes = 0;
  std::vector<std::string> class_names;
  NormRecord norm;

  std::size_t size() const { return X.rows(); }
  /// Class index of each row (argmax of the one-hot target).
  std::vector<std::size_t> labels() const;
  void validate() const;
};

Dataset make_classification(const RealMat& X, const std::vector<std::size_t>& labels, std::size_t n_classes);
Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& rows);

/// (1 + x^0.5 + y^-1 + z^-1.5)^2
double funcapprox_target(double x, double y, double z);

struct SplitDataset {
  Dataset train;
  Dataset test;
};

/// 500 training points uniform on [1,6]^3 and 250 test points uniform on [2,5]^3.
SplitDataset gen_funcapprox(RngStream& rng, std::size_t n_train = 500, std::size_t n_test = 250);

/// Three classes, each a uniform mixture of three unit-variance 2-D Gaussians.
Dataset gen_artificial(RngStream& rng, std::size_t n_per_class = 300);

struct ArtificialComponent {
  double mx, my;
};
/// Component means for class c (0-based), three per class.
const std::vector<ArtificialComponent>& artificial_means(std::size_t c);

struct CsvSchema {
  char delimiter = ',';
  bool header = false;
  /// Either an index (negative counts from the end) or a header name.
  std::string label_column = "-1";
  std::vector<std::string> ignore_columns;
  Task task = Task::Classification;
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset read_csv(std::istream& in, const CsvSchema& schema);
/// Features then label column (class name, or target value for regression).
void write_csv(const Dataset& ds, std::ostream& out, bool header = true);

/// Stratified: each class keeps floor(fraction * count) samples, at least one.
Dataset subsample(const Dataset& ds, double fraction, RngStream& rng);

/// Fits statistics on `ds` and applies them. Constant columns pass through.
Dataset normalize(const Dataset& ds, NormMode mode);
/// Applies an existing record (train statistics) to other data.
Dataset apply_norm(const Dataset& ds, const NormRecord& rec);
/// Maps normalized regression targets back to raw units.
RealMat inverse_targets(const RealMat& Y, const NormRecord& rec);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;
  bool stratified = false;

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Stratified by class when every class has at least k samples, plain
/// otherwise. Fold sizes differ by at most one.
FoldPlan kfold(const Dataset& ds, std::size_t k, RngStream& rng);

}  // namespace moecs::data
