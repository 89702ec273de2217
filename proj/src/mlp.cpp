#include "moecs/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace moecs {

void MlpLayout::validate() const {
  if (in_dim == 0 || hidden_dim == 0 || out_dim == 0) {
    throw ParameterError("MlpLayout: all dimensions must be >= 1");
  }
}

MlpParams MlpParams::zeros(const MlpLayout& layout) {
  layout.validate();
  return MlpParams{layout, RealMat(layout.hidden_dim, layout.in_dim + 1),
                   RealMat(layout.out_dim, layout.hidden_dim + 1)};
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

MlpParams init_mlp(const MlpLayout& layout, RngStream& rng, double scale) {
  if (!(scale > 0.0)) throw ParameterError("init_mlp: scale must be positive");
  MlpParams p = MlpParams::zeros(layout);
  for (double& w : p.w_hidden.data()) w = draw_uniform(rng, -scale, scale);
  for (double& w : p.w_out.data()) w = draw_uniform(rng, -scale, scale);
  return p;
}

ForwardTrace forward(const MlpParams& p, std::span<const double> x) {
  ForwardTrace t;
  forward_into(p, x, t);
  return t;
}

void forward_into(const MlpParams& p, std::span<const double> x, ForwardTrace& t) {
  const MlpLayout& L = p.layout;
  if (x.size() != L.in_dim) {
    throw DimensionError("forward: input length " + std::to_string(x.size()) + " != in_dim " +
                         std::to_string(L.in_dim));
  }
  t.hidden.resize(L.hidden_dim);
  for (std::size_t h = 0; h < L.hidden_dim; ++h) {
    auto row = p.w_hidden.row(h);
    double a = row[L.in_dim];
    for (std::size_t i = 0; i < L.in_dim; ++i) a += row[i] * x[i];
    t.hidden[h] = sigmoid(a);
  }
  t.output.resize(L.out_dim);
  for (std::size_t o = 0; o < L.out_dim; ++o) {
    auto row = p.w_out.row(o);
    double a = row[L.hidden_dim];
    for (std::size_t h = 0; h < L.hidden_dim; ++h) a += row[h] * t.hidden[h];
    t.output[o] = L.out_activation == OutActivation::Sigmoid ? sigmoid(a) : a;
  }
}

void backprop_accumulate(const MlpParams& p, std::span<const double> x, const ForwardTrace& trace,
                         std::span<const double> out_grad, double weight, MlpParams& grad) {
  const MlpLayout& L = p.layout;
  if (x.size() != L.in_dim || out_grad.size() != L.out_dim || trace.output.size() != L.out_dim ||
      trace.hidden.size() != L.hidden_dim) {
    throw DimensionError("backprop: dimension mismatch");
  }
  if (grad.w_hidden.rows() != L.hidden_dim || grad.w_hidden.cols() != L.in_dim + 1 ||
      grad.w_out.rows() != L.out_dim || grad.w_out.cols() != L.hidden_dim + 1) {
    throw DimensionError("backprop: gradient buffer has wrong shape");
  }

  // delta_o = dL/d(pre-activation of output o)
  RealVec delta_out(L.out_dim);
  for (std::size_t o = 0; o < L.out_dim; ++o) {
    const double O = trace.output[o];
    const double dact = L.out_activation == OutActivation::Sigmoid ? O * (1.0 - O) : 1.0;
    delta_out[o] = weight * out_grad[o] * dact;
  }

  RealVec back_hidden(L.hidden_dim, 0.0);
  for (std::size_t o = 0; o < L.out_dim; ++o) {
    const double d = delta_out[o];
    if (d == 0.0) continue;
    auto g = grad.w_out.row(o);
    auto w = p.w_out.row(o);
    for (std::size_t h = 0; h < L.hidden_dim; ++h) {
      g[h] += d * trace.hidden[h];
      back_hidden[h] += d * w[h];
    }
    g[L.hidden_dim] += d;
  }

  for (std::size_t h = 0; h < L.hidden_dim; ++h) {
    const double Oh = trace.hidden[h];
    const double d = back_hidden[h] * Oh * (1.0 - Oh);
    if (d == 0.0) continue;
    auto g = grad.w_hidden.row(h);
    for (std::size_t i = 0; i < L.in_dim; ++i) g[i] += d * x[i];
    g[L.in_dim] += d;
  }
}

MlpParams backprop(const MlpParams& p, std::span<const double> x, const ForwardTrace& trace,
                   std::span<const double> out_grad) {
  MlpParams grad = MlpParams::zeros(p.layout);
  backprop_accumulate(p, x, trace, out_grad, 1.0, grad);
  return grad;
}

void flatten_into(const MlpParams& p, std::span<double> out) {
  if (out.size() != p.layout.param_count()) throw DimensionError("flatten: buffer length mismatch");
  auto it = std::copy(p.w_hidden.data().begin(), p.w_hidden.data().end(), out.begin());
  std::copy(p.w_out.data().begin(), p.w_out.data().end(), it);
}

WeightVector flatten(const MlpParams& p) {
  WeightVector w(p.layout.param_count());
  flatten_into(p, w);
  return w;
}

MlpParams unflatten(const MlpLayout& layout, std::span<const double> w) {
  if (w.size() != layout.param_count()) {
    throw DimensionError("unflatten: expected " + std::to_string(layout.param_count()) +
                         " weights, got " + std::to_string(w.size()));
  }
  MlpParams p = MlpParams::zeros(layout);
  const std::size_t nh = p.w_hidden.size();
  std::copy(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(nh), p.w_hidden.data().begin());
  std::copy(w.begin() + static_cast<std::ptrdiff_t>(nh), w.end(), p.w_out.data().begin());
  return p;
}

}  // namespace moecs
