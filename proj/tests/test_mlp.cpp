#include <doctest.h>

#include <cmath>

#include "moecs/mlp.hpp"

using namespace moecs;

namespace {

// Plain re-evaluation of the network used as an oracle.
RealVec reference_forward(const MlpParams& p, const RealVec& x) {
  const auto& L = p.layout;
  RealVec h(L.hidden_dim), o(L.out_dim);
  for (std::size_t j = 0; j < L.hidden_dim; ++j) {
    double a = p.w_hidden(j, L.in_dim);
    for (std::size_t i = 0; i < L.in_dim; ++i) a += p.w_hidden(j, i) * x[i];
    h[j] = 1.0 / (1.0 + std::exp(-a));
  }
  for (std::size_t k = 0; k < L.out_dim; ++k) {
    double a = p.w_out(k, L.hidden_dim);
    for (std::size_t j = 0; j < L.hidden_dim; ++j) a += p.w_out(k, j) * h[j];
    o[k] = L.out_activation == OutActivation::Sigmoid ? 1.0 / (1.0 + std::exp(-a)) : a;
  }
  return o;
}

}  // namespace

TEST_CASE("param count and init range") {
  const MlpLayout L{4, 5, 3};
  CHECK(L.param_count() == 5 * 5 + 6 * 3);
  RngStream r(1);
  const MlpParams p = init_mlp(L, r, 0.5);
  for (double w : flatten(p)) {
    CHECK(w >= -0.5);
    CHECK(w <= 0.5);
  }
  CHECK_THROWS_AS((MlpLayout{0, 5, 3}.validate()), ParameterError);
}

TEST_CASE("zero weights give output 0.5 for a sigmoid output") {
  const MlpParams p = MlpParams::zeros({3, 4, 2});
  const auto t = forward(p, RealVec{1, -2, 3});
  for (double o : t.output) CHECK(o == 0.5);
}

TEST_CASE("forward matches the reference evaluation") {
  RngStream r(2);
  for (auto act : {OutActivation::Sigmoid, OutActivation::Linear}) {
    const MlpParams p = init_mlp({3, 6, 2, act}, r, 1.5);
    const RealVec x{0.3, -1.2, 2.0};
    const RealVec o = forward(p, x).output;
    const RealVec ref = reference_forward(p, x);
    for (std::size_t k = 0; k < o.size(); ++k) CHECK(o[k] == doctest::Approx(ref[k]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(forward(MlpParams::zeros({3, 2, 1}), RealVec{1, 2}), DimensionError);
}

TEST_CASE("sigmoid is stable at extremes") {
  CHECK(sigmoid(-1000.0) == 0.0);
  CHECK(sigmoid(1000.0) == 1.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::isfinite(sigmoid(-745.0)));
}

TEST_CASE("flatten and unflatten round trip") {
  RngStream r(3);
  const MlpLayout L{2, 3, 4};
  const MlpParams p = init_mlp(L, r);
  const WeightVector w = flatten(p);
  CHECK(w.size() == L.param_count());
  CHECK(unflatten(L, w) == p);
  // hidden block first, row-major
  CHECK(w[0] == p.w_hidden(0, 0));
  CHECK(w[2] == p.w_hidden(0, 2));
  CHECK(w[3] == p.w_hidden(1, 0));
  CHECK(w[L.hidden_dim * (L.in_dim + 1)] == p.w_out(0, 0));
  CHECK_THROWS_AS(unflatten(L, WeightVector(3)), DimensionError);
}

TEST_CASE("backprop matches central differences") {
  RngStream r(4);
  for (int inst = 0; inst < 10; ++inst) {
    const auto act = inst % 2 ? OutActivation::Linear : OutActivation::Sigmoid;
    const MlpLayout L{3, 4, 2, act};
    const MlpParams p = init_mlp(L, r, 1.0);
    const RealVec x{draw_normal(r, 0, 1), draw_normal(r, 0, 1), draw_normal(r, 0, 1)};
    const RealVec y{draw_uniform(r, 0, 1), draw_uniform(r, 0, 1)};
    auto loss = [&](const WeightVector& w) {
      const RealVec o = reference_forward(unflatten(L, w), x);
      return 0.5 * ((o[0] - y[0]) * (o[0] - y[0]) + (o[1] - y[1]) * (o[1] - y[1]));
    };
    const auto t = forward(p, x);
    const RealVec og{t.output[0] - y[0], t.output[1] - y[1]};
    const WeightVector g = flatten(backprop(p, x, t, og));
    WeightVector w = flatten(p);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double keep = w[i];
      w[i] = keep + 1e-5;
      const double fp = loss(w);
      w[i] = keep - 1e-5;
      const double fm = loss(w);
      w[i] = keep;
      const double fd = (fp - fm) / 2e-5;
      CHECK(std::abs(fd - g[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("backprop_accumulate scales and adds") {
  RngStream r(5);
  const MlpLayout L{2, 3, 1};
  const MlpParams p = init_mlp(L, r);
  const RealVec x{0.1, 0.2};
  const auto t = forward(p, x);
  const RealVec og{0.7};
  MlpParams acc = MlpParams::zeros(L);
  backprop_accumulate(p, x, t, og, 0.5, acc);
  backprop_accumulate(p, x, t, og, 0.5, acc);
  const WeightVector a = flatten(acc), b = flatten(backprop(p, x, t, og));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}
