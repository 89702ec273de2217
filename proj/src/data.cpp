#include "moecs/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace moecs::data {

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out(Y.rows());
  for (std::size_t r = 0; r < Y.rows(); ++r) {
    auto row = Y.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

void Dataset::validate() const {
  if (X.rows() != Y.rows()) throw DimensionError("Dataset: X and Y row counts differ");
  if (!all_finite(X.data()) || !all_finite(Y.data())) throw ParameterError("Dataset: non-finite entry");
  if (task == Task::Classification) {
    if (Y.cols() != n_classes) throw DimensionError("Dataset: one-hot width != n_classes");
    for (std::size_t r = 0; r < Y.rows(); ++r) {
      double s = 0.0;
      for (double v : Y.row(r)) s += v;
      if (s != 1.0) throw ParameterError("Dataset: target row " + std::to_string(r) + " is not one-hot");
    }
  }
}

Dataset make_classification(const RealMat& X, const std::vector<std::size_t>& labels, std::size_t n_classes) {
  if (labels.size() != X.rows()) throw DimensionError("make_classification: label count != rows");
  Dataset ds;
  ds.X = X;
  ds.task = Task::Classification;
  ds.n_classes = n_classes;
  ds.Y = RealMat(X.rows(), n_classes, 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= n_classes) throw ParameterError("make_classification: label out of range");
    ds.Y(r, labels[r]) = 1.0;
  }
  for (std::size_t c = 0; c < n_classes; ++c) ds.class_names.push_back(std::to_string(c));
  return ds;
}

Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out = ds;
  out.X = RealMat(rows.size(), ds.X.cols());
  out.Y = RealMat(rows.size(), ds.Y.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= ds.size()) throw ParameterError("select_rows: index out of range");
    std::copy(ds.X.row(rows[i]).begin(), ds.X.row(rows[i]).end(), out.X.row(i).begin());
    std::copy(ds.Y.row(rows[i]).begin(), ds.Y.row(rows[i]).end(), out.Y.row(i).begin());
  }
  return out;
}

double funcapprox_target(double x, double y, double z) {
  const double s = 1.0 + std::sqrt(x) + 1.0 / y + 1.0 / (z * std::sqrt(z));
  return s * s;
}

namespace {

Dataset sample_box(RngStream& rng, std::size_t n, double lo, double hi) {
  Dataset ds;
  ds.task = Task::Regression;
  ds.X = RealMat(n, 3);
  ds.Y = RealMat(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < 3; ++d) ds.X(i, d) = draw_uniform(rng, lo, hi);
    ds.Y(i, 0) = funcapprox_target(ds.X(i, 0), ds.X(i, 1), ds.X(i, 2));
  }
  return ds;
}

}  // namespace

SplitDataset gen_funcapprox(RngStream& rng, std::size_t n_train, std::size_t n_test) {
  SplitDataset s;
  s.train = sample_box(rng, n_train, 1.0, 6.0);
  s.test = sample_box(rng, n_test, 2.0, 5.0);
  return s;
}

const std::vector<ArtificialComponent>& artificial_means(std::size_t c) {
  static const std::vector<std::vector<ArtificialComponent>> kMeans = {
      {{6.0, 2.0}, {14.0, 3.0}, {18.0, 2.0}},
      {{5.0, -1.0}, {10.5, 3.5}, {20.0, 0.0}},
      {{3.0, 2.0}, {12.0, 6.0}, {18.0, -2.0}},
  };
  if (c >= kMeans.size()) throw ParameterError("artificial_means: class index out of range");
  return kMeans[c];
}

Dataset gen_artificial(RngStream& rng, std::size_t n_per_class) {
  if (n_per_class < 3) throw ParameterError("gen_artificial: need at least 3 samples per class");
  const std::size_t n = 3 * n_per_class;
  RealMat X(n, 2);
  std::vector<std::size_t> labels(n);
  std::size_t r = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& comps = artificial_means(c);
    for (std::size_t i = 0; i < n_per_class; ++i, ++r) {
      const auto& m = comps[rng.next_index(comps.size())];
      X(r, 0) = draw_normal(rng, m.mx, 1.0);
      X(r, 1) = draw_normal(rng, m.my, 1.0);
      labels[r] = c;
    }
  }
  Dataset ds = make_classification(X, labels, 3);
  ds.class_names = {"C1", "C2", "C3"};
  return ds;
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e && std::isfinite(out);
}

std::optional<long> parse_index(const std::string& s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::size_t resolve_column(const std::string& spec, const std::vector<std::string>& names, std::size_t n_cols,
                           const char* what) {
  if (auto idx = parse_index(spec)) {
    const long i = *idx < 0 ? static_cast<long>(n_cols) + *idx : *idx;
    if (i < 0 || i >= static_cast<long>(n_cols)) {
      throw IngestError(std::string(what) + " column index " + spec + " out of range");
    }
    return static_cast<std::size_t>(i);
  }
  auto it = std::find(names.begin(), names.end(), spec);
  if (it == names.end()) throw IngestError(std::string(what) + " column '" + spec + "' not found in header");
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = schema.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, schema.delimiter);
    for (auto& f : fields) f = trim(f);
    if (header_pending) {
      names = std::move(fields);
      header_pending = false;
      continue;
    }
    rows.push_back(std::move(fields));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw IngestError("csv: no data rows");

  const std::size_t n_cols = rows.front().size();
  if (!names.empty() && names.size() != n_cols) {
    throw IngestError("csv: header has " + std::to_string(names.size()) + " fields, row 1 has " +
                      std::to_string(n_cols));
  }
  const std::size_t label_col = resolve_column(schema.label_column, names, n_cols, "label");
  std::vector<bool> skip(n_cols, false);
  skip[label_col] = true;
  for (const auto& c : schema.ignore_columns) skip[resolve_column(c, names, n_cols, "ignored")] = true;
  std::size_t n_features = 0;
  for (bool s : skip) n_features += s ? 0 : 1;
  if (n_features == 0) throw IngestError("csv: no feature columns left");

  RealMat X(rows.size(), n_features);
  std::vector<std::string> raw_labels(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    // Rows are numbered from 1 among data rows, as a user counts them.
    const std::string where = "row " + std::to_string(r + 1) + " (line " + std::to_string(line_numbers[r]) + ")";
    if (rows[r].size() != n_cols) {
      throw IngestError("csv: " + where + " has " + std::to_string(rows[r].size()) + " fields, expected " +
                        std::to_string(n_cols));
    }
    std::size_t f = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (rows[r][c].empty() && !skip[c]) throw IngestError("csv: " + where + " has an empty field in column " + std::to_string(c + 1));
      if (skip[c]) continue;
      if (!parse_double(rows[r][c], X(r, f))) {
        throw IngestError("csv: " + where + " column " + std::to_string(c + 1) + ": '" + rows[r][c] + "' is not numeric");
      }
      ++f;
    }
    raw_labels[r] = rows[r][label_col];
    if (raw_labels[r].empty()) throw IngestError("csv: " + where + " has an empty label");
  }

  if (schema.task == Task::Regression) {
    Dataset ds;
    ds.task = Task::Regression;
    ds.X = std::move(X);
    ds.Y = RealMat(rows.size(), 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!parse_double(raw_labels[r], ds.Y(r, 0))) {
        throw IngestError("csv: row " + std::to_string(r + 1) + " (line " + std::to_string(line_numbers[r]) +
                          ") target '" + raw_labels[r] + "' is not numeric");
      }
    }
    return ds;
  }

  std::map<std::string, std::size_t> index;
  std::vector<std::string> class_names;
  std::vector<std::size_t> labels(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto [it, inserted] = index.try_emplace(raw_labels[r], class_names.size());
    if (inserted) class_names.push_back(raw_labels[r]);
    labels[r] = it->second;
  }
  Dataset ds = make_classification(X, labels, class_names.size());
  ds.class_names = std::move(class_names);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestError("csv: cannot open " + path.string());
  return read_csv(in, schema);
}

void write_csv(const Dataset& ds, std::ostream& out, bool header) {
  char buf[64];
  if (header) {
    for (std::size_t c = 0; c < ds.X.cols(); ++c) out << 'x' << c << ',';
    out << (ds.task == Task::Classification ? "label" : "target") << '\n';
  }
  const auto labels = ds.task == Task::Classification ? ds.labels() : std::vector<std::size_t>{};
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < ds.X.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g,", ds.X(r, c));
      out << buf;
    }
    if (ds.task == Task::Classification) {
      if (labels[r] < ds.class_names.size()) {
        out << ds.class_names[labels[r]] << '\n';
      } else {
        out << labels[r] << '\n';
      }
    } else {
      std::snprintf(buf, sizeof buf, "%.17g\n", ds.Y(r, 0));
      out << buf;
    }
  }
}

Dataset subsample(const Dataset& ds, double fraction, RngStream& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ParameterError("subsample: fraction must be in (0, 1]");
  std::vector<std::vector<std::size_t>> by_class;
  if (ds.task == Task::Classification) {
    by_class.resize(ds.n_classes);
    const auto labels = ds.labels();
    for (std::size_t r = 0; r < labels.size(); ++r) by_class[labels[r]].push_back(r);
  } else {
    by_class.emplace_back(ds.size());
    for (std::size_t r = 0; r < ds.size(); ++r) by_class[0][r] = r;
  }
  std::vector<std::size_t> keep;
  for (auto& rows : by_class) {
    if (rows.empty()) continue;
    shuffle(rows, rng);
    auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(rows.size())));
    n = std::max<std::size_t>(n, 1);
    keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(keep.begin(), keep.end());
  return select_rows(ds, keep);
}

namespace {

constexpr double kTargetLo = 0.05;
constexpr double kTargetHi = 0.95;

}  // namespace

Dataset normalize(const Dataset& ds, NormMode mode) {
  if (ds.size() == 0) throw ParameterError("normalize: empty dataset");
  NormRecord rec;
  rec.fitted = true;
  rec.mode = mode;
  const std::size_t n = ds.size();
  for (std::size_t c = 0; c < ds.X.cols(); ++c) {
    double lo = ds.X(0, c), hi = ds.X(0, c), sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      lo = std::min(lo, ds.X(r, c));
      hi = std::max(hi, ds.X(r, c));
      sum += ds.X(r, c);
    }
    const bool constant = !(hi > lo);
    if (mode == NormMode::MinMax01) {
      rec.features.emplace_back(lo, hi);
    } else {
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t r = 0; r < n; ++r) ss += (ds.X(r, c) - mean) * (ds.X(r, c) - mean);
      rec.features.emplace_back(mean, std::sqrt(ss / static_cast<double>(n)));
    }
    rec.constant.push_back(constant);
  }
  if (ds.task == Task::Regression) {
    for (std::size_t c = 0; c < ds.Y.cols(); ++c) {
      double lo = ds.Y(0, c), hi = ds.Y(0, c);
      for (std::size_t r = 0; r < n; ++r) {
        lo = std::min(lo, ds.Y(r, c));
        hi = std::max(hi, ds.Y(r, c));
      }
      rec.targets.emplace_back(lo, hi);
    }
  }
  return apply_norm(ds, rec);
}

Dataset apply_norm(const Dataset& ds, const NormRecord& rec) {
  if (!rec.fitted) throw ParameterError("apply_norm: record has not been fitted");
  if (rec.features.size() != ds.X.cols()) throw DimensionError("apply_norm: feature count mismatch");
  if (ds.norm.fitted) {
    if (ds.norm == rec) return ds;
    throw ParameterError("apply_norm: dataset is already normalized with a different record");
  }
  Dataset out = ds;
  out.norm = rec;
  for (std::size_t c = 0; c < ds.X.cols(); ++c) {
    if (rec.constant[c]) continue;
    const auto [a, b] = rec.features[c];
    for (std::size_t r = 0; r < ds.size(); ++r) {
      out.X(r, c) = rec.mode == NormMode::MinMax01 ? (ds.X(r, c) - a) / (b - a) : (ds.X(r, c) - a) / b;
    }
  }
  if (ds.task == Task::Regression && !rec.targets.empty()) {
    if (rec.targets.size() != ds.Y.cols()) throw DimensionError("apply_norm: target count mismatch");
    for (std::size_t c = 0; c < ds.Y.cols(); ++c) {
      const auto [lo, hi] = rec.targets[c];
      if (!(hi > lo)) continue;
      for (std::size_t r = 0; r < ds.size(); ++r) {
        out.Y(r, c) = kTargetLo + (kTargetHi - kTargetLo) * (ds.Y(r, c) - lo) / (hi - lo);
      }
    }
  }
  return out;
}

RealMat inverse_targets(const RealMat& Y, const NormRecord& rec) {
  if (rec.targets.empty()) return Y;
  if (rec.targets.size() != Y.cols()) throw DimensionError("inverse_targets: target count mismatch");
  RealMat out = Y;
  for (std::size_t c = 0; c < Y.cols(); ++c) {
    const auto [lo, hi] = rec.targets[c];
    if (!(hi > lo)) continue;
    for (std::size_t r = 0; r < Y.rows(); ++r) {
      out(r, c) = lo + (Y(r, c) - kTargetLo) * (hi - lo) / (kTargetHi - kTargetLo);
    }
  }
  return out;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan kfold(const Dataset& ds, std::size_t k, RngStream& rng) {
  if (k < 2) throw ParameterError("kfold: k must be >= 2");
  if (k > ds.size()) throw ParameterError("kfold: k exceeds the number of samples");
  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(ds.size(), 0);

  std::vector<std::vector<std::size_t>> groups;
  if (ds.task == Task::Classification) {
    groups.resize(ds.n_classes);
    const auto labels = ds.labels();
    for (std::size_t r = 0; r < labels.size(); ++r) groups[labels[r]].push_back(r);
    plan.stratified = std::all_of(groups.begin(), groups.end(),
                                  [&](const auto& g) { return g.empty() || g.size() >= k; });
  }
  if (!plan.stratified) {
    groups.assign(1, {});
    for (std::size_t r = 0; r < ds.size(); ++r) groups[0].push_back(r);
  }
  // Dealing round-robin with one running counter keeps both the fold sizes
  // and the per-class counts within one of each other.
  std::size_t next = 0;
  for (auto& g : groups) {
    shuffle(g, rng);
    for (std::size_t r : g) plan.assignment[r] = next++ % k;
  }
  return plan;
}

}  // namespace moecs::data
