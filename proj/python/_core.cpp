#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "moecs/bench.hpp"

namespace py = pybind11;
using namespace moecs;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

RealMat to_mat(const Array& a) {
  if (a.ndim() == 1) return RealMat(a.shape(0), 1, std::vector<double>(a.data(), a.data() + a.size()));
  if (a.ndim() != 2) throw DimensionError("expected a 1-D or 2-D array");
  return RealMat(a.shape(0), a.shape(1), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const RealMat& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array to_array(const RealVec& v) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::tuple dataset_tuple(const data::Dataset& ds) {
  if (ds.task == data::Task::Classification) {
    const auto labels = ds.labels();
    py::array_t<std::int64_t> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(labels.size())});
    std::copy(labels.begin(), labels.end(), out.mutable_data());
    return py::make_tuple(to_array(ds.X), out);
  }
  return py::make_tuple(to_array(ds.X), to_array(ds.Y));
}

data::Task parse_task(const std::string& s) {
  if (s == "classification") return data::Task::Classification;
  if (s == "regression") return data::Task::Regression;
  throw ParameterError("task must be 'classification' or 'regression'");
}

mcs::Objective wrap(const py::function& f) {
  return [f](std::span<const double> x) {
    py::gil_scoped_acquire gil;
    Array a(std::vector<py::ssize_t>{static_cast<py::ssize_t>(x.size())});
    std::copy(x.begin(), x.end(), a.mutable_data());
    return f(a).cast<double>();
  };
}

py::dict search_result(const mcs::SearchResult& r) {
  py::dict d;
  d["best"] = to_array(r.best.pos);
  d["fitness"] = r.best.fitness;
  d["evaluations"] = r.evaluations;
  d["generations"] = r.generations;
  d["trace"] = to_array(r.trace);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mixture-of-experts trainers with conjugate gradient and modified cuckoo search";

  py::register_exception<TrainingDiverged>(m, "TrainingDiverged", PyExc_RuntimeError);
  py::register_exception<data::IngestError>(m, "IngestError", PyExc_RuntimeError);

  m.def("funcapprox_target", &data::funcapprox_target, py::arg("x"), py::arg("y"), py::arg("z"));

  m.def(
      "gen_funcapprox",
      [](std::uint64_t seed) {
        RngStream rng(seed, 0xda7a);
        const auto s = data::gen_funcapprox(rng);
        return py::make_tuple(dataset_tuple(s.train), dataset_tuple(s.test));
      },
      py::arg("seed") = 0, "((X_train, y_train), (X_test, y_test)) with 500/250 rows");

  m.def(
      "gen_artificial",
      [](std::uint64_t seed, std::size_t per_class) {
        RngStream rng(seed, 0xda7a);
        return dataset_tuple(data::gen_artificial(rng, per_class));
      },
      py::arg("seed") = 0, py::arg("per_class") = 300, "(X, labels) for the three-class Gaussian mixture");

  m.def(
      "metric",
      [](const Array& pred, const Array& y, const std::string& task) {
        return bench::metric(to_mat(pred), to_mat(y), parse_task(task));
      },
      py::arg("predictions"), py::arg("targets"), py::arg("task") = "classification");

  py::class_<MoeModel>(m, "MoeModel")
      .def_property_readonly("in_dim", [](const MoeModel& mm) { return mm.topology.in_dim; })
      .def_property_readonly("out_dim", [](const MoeModel& mm) { return mm.topology.out_dim; })
      .def_property_readonly("n_experts", &MoeModel::n_experts)
      .def_property_readonly("param_count", [](const MoeModel& mm) { return mm.topology.param_count(); })
      .def("weights", [](const MoeModel& mm) { return to_array(flatten_model(mm)); })
      .def("loss", [](const MoeModel& mm, const Array& X, const Array& Y) { return moe_loss(mm, to_mat(X), to_mat(Y)); })
      .def("gradient",
           [](const MoeModel& mm, const Array& X, const Array& Y) {
             return to_array(moe_gradient(mm, to_mat(X), to_mat(Y)));
           })
      .def("gates",
           [](const MoeModel& mm, const Array& X) {
             const RealMat x = to_mat(X);
             RealMat g(x.rows(), mm.n_experts());
             for (std::size_t r = 0; r < x.rows(); ++r) {
               const RealVec v = evaluate(mm, x.row(r)).g;
               std::copy(v.begin(), v.end(), g.row(r).begin());
             }
             return to_array(g);
           })
      .def("predict",
           [](const MoeModel& mm, const Array& X) {
             const RealMat x = to_mat(X);
             RealMat out(x.rows(), mm.topology.out_dim);
             for (std::size_t r = 0; r < x.rows(); ++r) {
               const RealVec y = predict(mm, x.row(r));
               std::copy(y.begin(), y.end(), out.row(r).begin());
             }
             return to_array(out);
           })
      .def("save", [](const MoeModel& mm) {
        std::ostringstream os;
        save_model(mm, os);
        return os.str();
      });

  m.def(
      "init_moe",
      [](std::size_t in_dim, std::size_t out_dim, std::size_t n_experts, std::size_t expert_hidden,
         std::size_t gate_hidden, bool linear_experts, std::uint64_t seed, double scale) {
        MoeTopology t;
        t.in_dim = in_dim;
        t.out_dim = out_dim;
        t.n_experts = n_experts;
        t.expert_hidden = expert_hidden;
        t.gate_hidden = gate_hidden;
        t.expert_activation = linear_experts ? OutActivation::Linear : OutActivation::Sigmoid;
        RngStream rng(seed);
        return init_moe(t, rng, scale);
      },
      py::arg("in_dim"), py::arg("out_dim"), py::arg("n_experts") = 4, py::arg("expert_hidden") = 5,
      py::arg("gate_hidden") = 15, py::arg("linear_experts") = false, py::arg("seed") = 0, py::arg("scale") = 0.5);

  m.def("load_model", [](const std::string& text) {
    std::istringstream in(text);
    return load_model(in);
  });

  m.def(
      "train",
      [](const MoeModel& model, const Array& X, const Array& Y, const std::string& trainer, std::size_t epochs,
         std::uint64_t seed) {
        TrainSpec spec;
        spec.epochs = epochs;
        spec.seed = seed;
        const RealMat x = to_mat(X), y = to_mat(Y);
        TrainResult r;
        {
          py::gil_scoped_release release;
          if (trainer == "gd") {
            spec.trainer = Trainer::GD;
            r = train_gd(model, x, y, spec);
          } else if (trainer == "cg") {
            r = train_cg(model, x, y, spec);
          } else {
            throw ParameterError("trainer must be 'gd' or 'cg'");
          }
        }
        return py::make_tuple(r.model, to_array(r.loss_trace));
      },
      py::arg("model"), py::arg("X"), py::arg("Y"), py::arg("trainer") = "cg", py::arg("epochs") = 100,
      py::arg("seed") = 0, "Returns (trained model, per-epoch loss trace)");

  m.def(
      "search",
      [](const py::function& f, std::size_t dim, double lo, double hi, const std::string& algo, std::size_t evals,
         std::size_t nests, std::uint64_t seed) {
        RngStream rng(seed);
        const auto obj = wrap(f);
        if (algo == "cs") {
          mcs::CsParams p;
          p.n_nests = nests;
          p.max_evals = evals;
          p.bounds = mcs::Bounds::uniform(dim, lo, hi);
          return search_result(mcs::cs_search(obj, p, rng));
        }
        if (algo != "mcs") throw ParameterError("algo must be 'cs' or 'mcs'");
        mcs::McsParams p;
        p.n_nests = nests;
        p.max_evals = evals;
        p.bounds = mcs::Bounds::uniform(dim, lo, hi);
        return search_result(mcs::mcs_search(obj, p, rng));
      },
      py::arg("objective"), py::arg("dim"), py::arg("lo") = -5.0, py::arg("hi") = 5.0, py::arg("algo") = "mcs",
      py::arg("evals") = 10000, py::arg("nests") = 25, py::arg("seed") = 0);

  m.def(
      "run_experiment",
      [](const std::string& config_text, const std::string& base_dir) {
        std::istringstream in(config_text);
        const auto cfg = bench::parse_config(in, base_dir);
        bench::RunReport rep;
        {
          py::gil_scoped_release release;
          rep = bench::run_experiment(cfg);
        }
        return py::make_tuple(bench::emit_report(rep, bench::ReportFormat::Csv),
                              bench::emit_report(rep, bench::ReportFormat::Markdown));
      },
      py::arg("config"), py::arg("base_dir") = "", "Runs a key = value config; returns (runs_csv, markdown)");
}
