#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "moecs/data.hpp"

using namespace moecs;
using namespace moecs::data;

namespace {

Dataset parse(const std::string& text, CsvSchema schema = {}) {
  std::istringstream in(text);
  return read_csv(in, schema);
}

std::string ingest_message(const std::string& text, CsvSchema schema = {}) {
  try {
    parse(text, schema);
  } catch (const IngestError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::size_t> class_counts(const Dataset& ds) {
  std::vector<std::size_t> n(ds.n_classes, 0);
  for (auto l : ds.labels()) ++n[l];
  return n;
}

}  // namespace

TEST_CASE("target function against pow") {
  RngStream r(1);
  CHECK(funcapprox_target(1, 1, 1) == 16.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = draw_uniform(r, 1, 6), y = draw_uniform(r, 1, 6), z = draw_uniform(r, 1, 6);
    const double ref = std::pow(1 + std::pow(x, 0.5) + std::pow(y, -1.0) + std::pow(z, -1.5), 2.0);
    CHECK(std::abs(funcapprox_target(x, y, z) - ref) <= 1e-12 * ref);
  }
}

TEST_CASE("funcapprox split sizes and ranges") {
  RngStream r(2);
  const auto s = gen_funcapprox(r);
  REQUIRE(s.train.size() == 500);
  REQUIRE(s.test.size() == 250);
  CHECK(s.train.task == Task::Regression);
  for (double v : s.train.X.data()) CHECK((v >= 1.0 && v <= 6.0));
  for (double v : s.test.X.data()) CHECK((v >= 2.0 && v <= 5.0));
  for (std::size_t i = 0; i < s.test.size(); ++i)
    CHECK(s.test.Y(i, 0) == funcapprox_target(s.test.X(i, 0), s.test.X(i, 1), s.test.X(i, 2)));
}

TEST_CASE("artificial data counts and means") {
  RngStream r(3);
  const Dataset ds = gen_artificial(r, 3000);
  ds.validate();
  CHECK(ds.size() == 9000);
  CHECK(class_counts(ds) == std::vector<std::size_t>{3000, 3000, 3000});
  const auto labels = ds.labels();
  for (std::size_t c = 0; c < 3; ++c) {
    double ex = 0, ey = 0;
    for (const auto& m : artificial_means(c)) {
      ex += m.mx / 3;
      ey += m.my / 3;
    }
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (labels[i] != c) continue;
      sx += ds.X(i, 0);
      sy += ds.X(i, 1);
    }
    // component spread dominates the standard error
    CHECK(std::abs(sx / 3000 - ex) < 0.3);
    CHECK(std::abs(sy / 3000 - ey) < 0.15);
  }
  CHECK_THROWS_AS(gen_artificial(r, 2), ParameterError);
  CHECK_THROWS_AS(artificial_means(3), ParameterError);
}

TEST_CASE("csv with header and named label column") {
  CsvSchema s;
  s.header = true;
  s.label_column = "kind";
  const Dataset ds = parse("a,kind,b\n1,x,2\n3,y,4\n\n5,x,6\n", s);
  CHECK(ds.size() == 3);
  CHECK(ds.X.cols() == 2);
  CHECK(ds.class_names == std::vector<std::string>{"x", "y"});
  CHECK(ds.labels() == std::vector<std::size_t>{0, 1, 0});
  CHECK(ds.X(2, 1) == 6.0);
}

TEST_CASE("csv default label is the last column") {
  const Dataset ds = parse("1.5,2,b\n0,0,a\n");
  CHECK(ds.X(0, 0) == 1.5);
  CHECK(ds.class_names == std::vector<std::string>{"b", "a"});
}

TEST_CASE("csv ignore columns and regression targets") {
  CsvSchema s;
  s.label_column = "0";
  s.ignore_columns = {"1"};
  s.task = Task::Regression;
  const Dataset ds = parse("2.5,id7,1,2\n-1,id8,3,4\n", s);
  CHECK(ds.task == Task::Regression);
  CHECK(ds.X.cols() == 2);
  CHECK(ds.Y(1, 0) == -1.0);
  CHECK(ds.X(1, 0) == 3.0);
}

TEST_CASE("csv errors name the row and line") {
  CHECK(ingest_message("1,2,a\n1,a\n").find("row 2 (line 2)") != std::string::npos);
  CHECK(ingest_message("1,2,a\n\n1,zz,a\n").find("row 2 (line 3)") != std::string::npos);
  CHECK(ingest_message("1,,a\n").find("row 1 (line 1)") != std::string::npos);
  CHECK(ingest_message("") == "csv: no data rows");
  CsvSchema s;
  s.header = true;
  CHECK(ingest_message("a,b\n1,2,3\n", s).find("header") != std::string::npos);
  s.label_column = "nope";
  CHECK(ingest_message("a,b\n1,2\n", s).find("nope") != std::string::npos);
  s.label_column = "-1";
  s.task = Task::Regression;
  CHECK(ingest_message("a,b\n1,2\n1,q\n", s).find("row 2 (line 3)") != std::string::npos);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {}), IngestError);
}

TEST_CASE("iris file loads") {
  CsvSchema s;
  s.header = true;
  s.label_column = "species";
  const Dataset ds = load_csv(std::string(MOECS_SOURCE_DIR) + "/data/iris.csv", s);
  CHECK(ds.size() == 150);
  CHECK(ds.X.cols() == 4);
  CHECK(class_counts(ds) == std::vector<std::size_t>{50, 50, 50});
}

TEST_CASE("write_csv round trip") {
  RngStream r(4);
  const Dataset ds = gen_artificial(r, 10);
  std::stringstream io;
  write_csv(ds, io);
  CsvSchema s;
  s.header = true;
  s.label_column = "label";
  const Dataset back = read_csv(io, s);
  CHECK(back.X == ds.X);
  CHECK(back.Y == ds.Y);
  CHECK(back.class_names == ds.class_names);

  const auto fa = gen_funcapprox(r, 20, 5).train;
  std::stringstream io2;
  write_csv(fa, io2);
  s.label_column = "target";
  s.task = Task::Regression;
  const Dataset back2 = read_csv(io2, s);
  CHECK(back2.X == fa.X);
  CHECK(back2.Y == fa.Y);
}

TEST_CASE("stratified subsample floors per class") {
  RealMat X(10, 1);
  const Dataset ds = make_classification(X, {0, 0, 0, 0, 0, 0, 1, 1, 1, 1}, 2);
  RngStream r(5);
  const Dataset half = subsample(ds, 0.5, r);
  CHECK(half.size() == 5);
  CHECK(class_counts(half) == std::vector<std::size_t>{3, 2});
  const Dataset balanced = make_classification(X, {0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, 2);
  const Dataset small = subsample(balanced, 0.5, r);
  CHECK(small.size() == 4);
  CHECK(class_counts(small) == std::vector<std::size_t>{2, 2});
  CHECK(subsample(ds, 0.01, r).size() == 2);
  CHECK(subsample(ds, 1.0, r).X == ds.X);
  CHECK_THROWS_AS(subsample(ds, 0.0, r), ParameterError);
}

TEST_CASE("minmax normalization") {
  RealMat X(3, 2, {1, 7, 6, 7, 3.5, 7});
  const Dataset ds = normalize(make_classification(X, {0, 1, 0}, 2), NormMode::MinMax01);
  CHECK(ds.X(0, 0) == 0.0);
  CHECK(ds.X(1, 0) == 1.0);
  CHECK(ds.X(2, 0) == 0.5);
  // constant column passes through
  CHECK(ds.X(1, 1) == 7.0);
  CHECK(ds.norm.constant == std::vector<bool>{false, true});
}

TEST_CASE("zscore normalization has zero mean and unit sd") {
  RngStream r(6);
  const Dataset ds = normalize(gen_artificial(r, 50), NormMode::ZScore);
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0, ss = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) s += ds.X(i, c);
    const double m = s / ds.size();
    for (std::size_t i = 0; i < ds.size(); ++i) ss += (ds.X(i, c) - m) * (ds.X(i, c) - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(std::sqrt(ss / ds.size()) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("regression targets map to [0.05, 0.95] and back") {
  RngStream r(7);
  const auto raw = gen_funcapprox(r, 100, 10).train;
  const Dataset ds = normalize(raw, NormMode::MinMax01);
  const auto [lo, hi] = std::minmax_element(ds.Y.data().begin(), ds.Y.data().end());
  CHECK(*lo == doctest::Approx(0.05));
  CHECK(*hi == doctest::Approx(0.95));
  const RealMat back = inverse_targets(ds.Y, ds.norm);
  for (std::size_t i = 0; i < back.rows(); ++i) CHECK(back(i, 0) == doctest::Approx(raw.Y(i, 0)).epsilon(1e-12));
}

TEST_CASE("apply_norm is idempotent for the same record") {
  RngStream r(8);
  const Dataset a = gen_artificial(r, 10), b = gen_artificial(r, 10);
  const Dataset na = normalize(a, NormMode::ZScore);
  const Dataset nb = apply_norm(b, na.norm);
  CHECK(apply_norm(nb, na.norm).X == nb.X);
  const Dataset other = normalize(b, NormMode::MinMax01);
  CHECK_THROWS_AS(apply_norm(other, na.norm), ParameterError);
  CHECK_THROWS_AS(apply_norm(b, NormRecord{}), ParameterError);
}

TEST_CASE("kfold partitions with balanced sizes") {
  RngStream r(9);
  const Dataset ds = gen_artificial(r, 50);
  const FoldPlan plan = kfold(ds, 10, r);
  CHECK(plan.stratified);
  std::multiset<std::size_t> seen;
  const auto labels = ds.labels();
  for (std::size_t f = 0; f < 10; ++f) {
    const auto test = plan.test_indices(f), train = plan.train_indices(f);
    CHECK(test.size() == 15);
    CHECK(test.size() + train.size() == ds.size());
    std::vector<std::size_t> both;
    std::set_intersection(test.begin(), test.end(), train.begin(), train.end(), std::back_inserter(both));
    CHECK(both.empty());
    std::vector<std::size_t> per(3, 0);
    for (auto i : test) ++per[labels[i]];
    CHECK(per == std::vector<std::size_t>{5, 5, 5});
    seen.insert(test.begin(), test.end());
  }
  CHECK(seen.size() == ds.size());
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == ds.size());
  CHECK_THROWS_AS(kfold(ds, 1, r), ParameterError);
}

TEST_CASE("kfold falls back to plain folds for small classes") {
  RealMat X(7, 1);
  const Dataset ds = make_classification(X, {0, 0, 0, 0, 0, 0, 1}, 2);
  RngStream r(10);
  const FoldPlan plan = kfold(ds, 3, r);
  CHECK_FALSE(plan.stratified);
  std::vector<std::size_t> sizes;
  for (std::size_t f = 0; f < 3; ++f) sizes.push_back(plan.test_indices(f).size());
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
}
