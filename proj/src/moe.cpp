#include "moecs/moe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace moecs {

void MoeTopology::validate() const {
  if (in_dim == 0 || n_experts == 0 || expert_hidden == 0 || gate_hidden == 0 || out_dim == 0) {
    throw ParameterError("MoeTopology: all sizes must be >= 1");
  }
}

MoeModel init_moe(const MoeTopology& topo, RngStream& rng, double scale) {
  topo.validate();
  MoeModel m;
  m.topology = topo;
  for (std::size_t i = 0; i < topo.n_experts; ++i) m.experts.push_back(init_mlp(topo.expert_layout(), rng, scale));
  m.gate = init_mlp(topo.gate_layout(), rng, scale);
  return m;
}

WeightVector flatten_model(const MoeModel& m) {
  WeightVector w(m.topology.param_count());
  std::span<double> out(w);
  std::size_t off = 0;
  for (const auto& e : m.experts) {
    const std::size_t n = e.layout.param_count();
    flatten_into(e, out.subspan(off, n));
    off += n;
  }
  flatten_into(m.gate, out.subspan(off));
  return w;
}

MoeModel unflatten_model(const MoeTopology& topo, std::span<const double> w) {
  topo.validate();
  if (w.size() != topo.param_count()) {
    throw DimensionError("unflatten_model: expected " + std::to_string(topo.param_count()) +
                         " weights, got " + std::to_string(w.size()));
  }
  MoeModel m;
  m.topology = topo;
  const MlpLayout el = topo.expert_layout();
  const std::size_t n = el.param_count();
  std::size_t off = 0;
  for (std::size_t i = 0; i < topo.n_experts; ++i, off += n) m.experts.push_back(unflatten(el, w.subspan(off, n)));
  m.gate = unflatten(topo.gate_layout(), w.subspan(off));
  return m;
}

namespace {

double log_sum_exp(std::span<const double> a) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : a) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : a) s += std::exp(v - mx);
  return mx + std::log(s);
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

void check_data(const MoeModel& m, const RealMat& X, const RealMat& Y) {
  if (X.rows() == 0) throw ParameterError("empty dataset");
  if (X.rows() != Y.rows()) throw DimensionError("X and Y row counts differ");
  if (X.cols() != m.topology.in_dim) throw DimensionError("X has " + std::to_string(X.cols()) + " columns, model expects " + std::to_string(m.topology.in_dim));
  if (Y.cols() != m.topology.out_dim) throw DimensionError("Y has " + std::to_string(Y.cols()) + " columns, model expects " + std::to_string(m.topology.out_dim));
}

MoeModel zero_like(const MoeModel& m) {
  MoeModel z;
  z.topology = m.topology;
  for (const auto& e : m.experts) z.experts.push_back(MlpParams::zeros(e.layout));
  z.gate = MlpParams::zeros(m.gate.layout);
  return z;
}

/// Adds weight * d(sample loss)/d(params) into grad; returns the sample loss.
double accumulate_sample(const MoeModel& m, std::span<const double> x, std::span<const double> y, double weight,
                         MoeModel& grad) {
  const std::size_t N = m.experts.size();
  const ForwardTrace gt = forward(m.gate, x);
  std::vector<ForwardTrace> et;
  et.reserve(N);
  for (const auto& e : m.experts) et.push_back(forward(e, x));

  const double lse_gate = log_sum_exp(gt.output);
  RealVec log_joint(N);
  for (std::size_t i = 0; i < N; ++i) {
    log_joint[i] = (gt.output[i] - lse_gate) - 0.5 * sq_dist(y, et[i].output);
  }
  const double lse = log_sum_exp(log_joint);

  RealVec out_grad(m.topology.out_dim);
  RealVec gate_grad(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double h = std::exp(log_joint[i] - lse);
    const double g = std::exp(gt.output[i] - lse_gate);
    gate_grad[i] = g - h;
    if (h == 0.0) continue;
    for (std::size_t k = 0; k < out_grad.size(); ++k) out_grad[k] = -h * (y[k] - et[i].output[k]);
    backprop_accumulate(m.experts[i], x, et[i], out_grad, weight, grad.experts[i]);
  }
  backprop_accumulate(m.gate, x, gt, gate_grad, weight, grad.gate);
  return -lse;
}

template <typename Fn>
void for_each_param(MoeModel& a, const MoeModel& b, Fn fn) {
  for (std::size_t i = 0; i < a.experts.size(); ++i) {
    auto& ah = a.experts[i].w_hidden.data();
    auto& ao = a.experts[i].w_out.data();
    const auto& bh = b.experts[i].w_hidden.data();
    const auto& bo = b.experts[i].w_out.data();
    for (std::size_t k = 0; k < ah.size(); ++k) fn(ah[k], bh[k], true);
    for (std::size_t k = 0; k < ao.size(); ++k) fn(ao[k], bo[k], true);
  }
  auto& gh = a.gate.w_hidden.data();
  auto& go = a.gate.w_out.data();
  for (std::size_t k = 0; k < gh.size(); ++k) fn(gh[k], b.gate.w_hidden.data()[k], false);
  for (std::size_t k = 0; k < go.size(); ++k) fn(go[k], b.gate.w_out.data()[k], false);
}

}  // namespace

RealVec gate_probs(std::span<const double> gate_raw) {
  if (gate_raw.empty()) throw DimensionError("gate_probs: empty input");
  if (!all_finite(gate_raw)) throw ParameterError("gate_probs: non-finite input");
  const double mx = *std::max_element(gate_raw.begin(), gate_raw.end());
  RealVec g(gate_raw.size());
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += (g[i] = std::exp(gate_raw[i] - mx));
  for (double& v : g) v /= s;
  return g;
}

RealVec mix(std::span<const double> g, const std::vector<RealVec>& expert_outs) {
  if (g.size() != expert_outs.size() || expert_outs.empty()) throw DimensionError("mix: gate/expert count mismatch");
  const std::size_t d = expert_outs.front().size();
  RealVec out(d, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (expert_outs[i].size() != d) throw DimensionError("mix: expert outputs differ in length");
    for (std::size_t k = 0; k < d; ++k) out[k] += g[i] * expert_outs[i][k];
  }
  return out;
}

RealVec posteriors(std::span<const double> g, const std::vector<RealVec>& expert_outs, std::span<const double> y) {
  if (g.size() != expert_outs.size() || g.empty()) throw DimensionError("posteriors: gate/expert count mismatch");
  RealVec a(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (expert_outs[i].size() != y.size()) throw DimensionError("posteriors: target length mismatch");
    a[i] = std::log(g[i]) - 0.5 * sq_dist(y, expert_outs[i]);
  }
  const double lse = log_sum_exp(a);
  if (!std::isfinite(lse)) throw ParameterError("posteriors: gate probabilities are all zero");
  for (double& v : a) v = std::exp(v - lse);
  return a;
}

MoeOutput evaluate(const MoeModel& m, std::span<const double> x) {
  MoeOutput out;
  out.g = gate_probs(forward(m.gate, x).output);
  for (const auto& e : m.experts) out.expert_outs.push_back(forward(e, x).output);
  out.mixed = mix(out.g, out.expert_outs);
  return out;
}

double moe_loss(const MoeModel& m, const RealMat& X, const RealMat& Y) {
  check_data(m, X, Y);
  const std::size_t N = m.experts.size();
  RealVec log_joint(N);
  ForwardTrace gt, et;
  double total = 0.0;
  for (std::size_t s = 0; s < X.rows(); ++s) {
    const auto x = X.row(s);
    const auto y = Y.row(s);
    forward_into(m.gate, x, gt);
    const double lse_gate = log_sum_exp(gt.output);
    for (std::size_t i = 0; i < N; ++i) {
      forward_into(m.experts[i], x, et);
      log_joint[i] = (gt.output[i] - lse_gate) - 0.5 * sq_dist(y, et.output);
    }
    total -= log_sum_exp(log_joint);
  }
  return total / static_cast<double>(X.rows());
}

double moe_loss_and_gradient(const MoeModel& m, const RealMat& X, const RealMat& Y, WeightVector& grad) {
  check_data(m, X, Y);
  MoeModel acc = zero_like(m);
  const double w = 1.0 / static_cast<double>(X.rows());
  double total = 0.0;
  for (std::size_t s = 0; s < X.rows(); ++s) total += accumulate_sample(m, X.row(s), Y.row(s), w, acc);
  grad = flatten_model(acc);
  return total * w;
}

WeightVector moe_gradient(const MoeModel& m, const RealMat& X, const RealMat& Y) {
  WeightVector g;
  moe_loss_and_gradient(m, X, Y, g);
  return g;
}

void TrainSpec::validate() const {
  if (epochs < 1) throw ParameterError("TrainSpec: epochs must be >= 1");
  if (trainer == Trainer::GD && (!(eta_e >= 0.0) || !(eta_g >= 0.0))) {
    throw ParameterError("TrainSpec: learning rates must be non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("TrainSpec: momentum must be in [0, 1)");
  ls.validate();
}

TrainResult train_gd(MoeModel model, const RealMat& X, const RealMat& Y, const TrainSpec& spec) {
  spec.validate();
  check_data(model, X, Y);
  RngStream rng(spec.seed, 0x6764);  // "gd"
  MoeModel velocity = zero_like(model);
  MoeModel grad = zero_like(model);

  std::vector<std::size_t> order(X.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult res;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t s : order) {
      for_each_param(grad, grad, [](double& g, double, bool) { g = 0.0; });
      accumulate_sample(model, X.row(s), Y.row(s), 1.0, grad);
      for_each_param(velocity, grad, [&](double& v, double g, bool is_expert) {
        v = spec.momentum * v - (is_expert ? spec.eta_e : spec.eta_g) * g;
      });
      for_each_param(model, velocity, [](double& w, double v, bool) { w += v; });
      ++res.updates;
    }
    const double loss = moe_loss(model, X, Y);
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("train_gd: loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    res.loss_trace.push_back(loss);
  }
  res.model = std::move(model);
  return res;
}

TrainResult train_cg(MoeModel model, const RealMat& X, const RealMat& Y, const TrainSpec& spec) {
  spec.validate();
  check_data(model, X, Y);
  const MoeTopology topo = model.topology;

  auto objective = [&](std::span<const double> w) {
    const double v = moe_loss(unflatten_model(topo, w), X, Y);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  auto gradient = [&](std::span<const double> w) { return moe_gradient(unflatten_model(topo, w), X, Y); };

  cg::MinimizeOptions opts;
  opts.max_iters = spec.epochs;
  opts.ls = spec.ls;
  opts.formula = spec.cg_formula;
  opts.grad_tol = 1e-8;

  cg::MinimizeResult mr;
  try {
    mr = cg::minimize(objective, gradient, flatten_model(model), opts);
  } catch (const ParameterError& e) {
    throw TrainingDiverged(std::string("train_cg: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw TrainingDiverged(std::string("train_cg: ") + e.what());
  }

  TrainResult res;
  res.updates = mr.iterations;
  res.loss_trace.assign(mr.trace.begin() + 1, mr.trace.end());
  while (res.loss_trace.size() < spec.epochs) res.loss_trace.push_back(mr.trace.back());
  res.model = unflatten_model(topo, mr.w);
  return res;
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw DimensionError("argmax: empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

RealVec predict(const MoeModel& m, std::span<const double> x) { return evaluate(m, x).mixed; }

std::size_t predict_class(const MoeModel& m, std::span<const double> x) { return argmax(predict(m, x)); }

void save_model(const MoeModel& m, std::ostream& os) {
  const MoeTopology& t = m.topology;
  os << "moecs-moe 1\n"
     << t.in_dim << ' ' << t.n_experts << ' ' << t.expert_hidden << ' ' << t.gate_hidden << ' ' << t.out_dim << ' '
     << (t.expert_activation == OutActivation::Sigmoid ? "sigmoid" : "linear") << '\n';
  const WeightVector w = flatten_model(m);
  os << w.size() << '\n';
  char buf[64];
  for (double v : w) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, end - buf);
    os.put('\n');
  }
}

MoeModel load_model(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "moecs-moe" || version != 1) {
    throw std::runtime_error("load_model: not a moecs model file");
  }
  MoeTopology t;
  std::string act;
  std::size_t count = 0;
  if (!(is >> t.in_dim >> t.n_experts >> t.expert_hidden >> t.gate_hidden >> t.out_dim >> act >> count)) {
    throw std::runtime_error("load_model: malformed header");
  }
  if (act == "sigmoid") {
    t.expert_activation = OutActivation::Sigmoid;
  } else if (act == "linear") {
    t.expert_activation = OutActivation::Linear;
  } else {
    throw std::runtime_error("load_model: unknown activation '" + act + "'");
  }
  t.validate();
  if (count != t.param_count()) throw std::runtime_error("load_model: weight count does not match topology");
  WeightVector w(count);
  std::string tok;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(is >> tok)) throw std::runtime_error("load_model: truncated weight list");
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), w[i]);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw std::runtime_error("load_model: bad number '" + tok + "'");
    }
  }
  return unflatten_model(t, w);
}

}  // namespace moecs
