#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "moecs/data.hpp"
#include "moecs/mcs.hpp"

using namespace moecs;
using namespace moecs::mcs;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

bool monotone(const std::vector<double>& t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[i - 1]) return false;
  return true;
}

}  // namespace

TEST_CASE("mantegna sigma for beta 1.5") {
  CHECK(mantegna_sigma(1.5) == doctest::Approx(0.696575).epsilon(1e-6));
  // independent evaluation of the closed form
  const double b = 1.2;
  const double ref = std::pow(std::tgamma(1 + b) * std::sin(std::numbers::pi * b / 2) /
                                  (std::tgamma((1 + b) / 2) * b * std::pow(2.0, (b - 1) / 2)),
                              1 / b);
  CHECK(mantegna_sigma(b) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("levy steps are symmetric and heavy tailed") {
  RngStream r(1);
  std::size_t positive = 0;
  double biggest = 0.0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = levy_step(r, 2.5, 1)[0];
    positive += s > 0.0;
    biggest = std::max(biggest, std::abs(s));
  }
  CHECK(std::abs(static_cast<double>(positive) / n - 0.5) <= 0.02);
  CHECK(biggest > 50.0);
  CHECK_THROWS_AS(levy_step(r, 1.0, 3), ParameterError);
  CHECK_THROWS_AS(levy_step(r, 3.5, 3), ParameterError);
}

TEST_CASE("bounds") {
  const Bounds b = Bounds::uniform(2, -1, 1);
  CHECK(b.contains(RealVec{0, 1}));
  CHECK_FALSE(b.contains(RealVec{0, 1.0001}));
  CHECK_THROWS_AS(Bounds::uniform(2, 1, -1).validate(), ParameterError);
}

TEST_CASE("fraction counts") {
  McsParams p;
  p.n_nests = 20;
  CHECK(p.abandon_count() == 15);
  CHECK(p.top_count() == 5);
  p.n_nests = 2;
  p.frac_top = 0.1;
  CHECK(p.top_count() == 1);
  CHECK(p.abandon_count() == 1);
}

TEST_CASE("golden crossover") {
  const Nest a{{0.0, 0.0}, 1.0}, b{{1.0, 2.0}, 1.0};
  CHECK(golden_crossover(a, b) == RealVec{0.5, 1.0});
  const Nest better{{1.0, 0.0}, 0.5}, worse{{0.0, 0.0}, 2.0};
  const RealVec x = golden_crossover(worse, better);
  const double phi = (1 + std::sqrt(5.0)) / 2;
  CHECK(x[0] == doctest::Approx(1 / phi));
  CHECK(x[0] > 0.5);  // closer to the better egg
  CHECK(golden_crossover(better, worse) == x);
}

TEST_CASE("budget equal to the population returns the best initial nest") {
  RngStream r(2);
  CsParams p;
  p.bounds = Bounds::uniform(3, -5, 5);
  p.max_evals = p.n_nests;
  std::vector<Nest> init;
  SearchHooks hooks;
  hooks.on_generation = [&](std::size_t g, const std::vector<Nest>& nests) {
    if (g == 0) init = nests;
  };
  const auto res = cs_search(sphere, p, r, hooks);
  CHECK(res.evaluations == p.n_nests);
  const auto best = std::min_element(init.begin(), init.end(), [](auto& a, auto& b) { return a.fitness < b.fitness; });
  CHECK(res.best.fitness == best->fitness);
  CHECK(res.best.pos == best->pos);
}

TEST_CASE("cs and mcs solve the 2-d sphere with monotone traces") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CsParams cp;
    cp.bounds = Bounds::uniform(2, -5, 5);
    RngStream r1(seed);
    const auto cs = cs_search(sphere, cp, r1);
    CHECK(cs.best.fitness < 1e-3);
    CHECK(cs.trace.size() == cp.max_evals);
    CHECK(monotone(cs.trace));

    McsParams mp;
    mp.max_evals = 10000;
    mp.bounds = cp.bounds;
    RngStream r2(seed);
    const auto m = mcs_search(sphere, mp, r2);
    CHECK(m.best.fitness < 1e-3);
    CHECK(monotone(m.trace));
    CHECK(m.trace.back() == m.best.fitness);
  }
}

TEST_CASE("nests never leave the bounds") {
  const Bounds b = Bounds::uniform(4, -0.5, 2.0);
  bool ok = true;
  SearchHooks hooks;
  hooks.on_generation = [&](std::size_t, const std::vector<Nest>& nests) {
    for (const auto& n : nests) ok = ok && b.contains(n.pos);
  };
  RngStream r(3);
  CsParams cp;
  cp.bounds = b;
  cp.max_evals = 3000;
  cs_search(sphere, cp, r, hooks);
  McsParams mp;
  mp.bounds = b;
  mp.max_evals = 3000;
  mcs_search(sphere, mp, r, hooks);
  CHECK(ok);
}

TEST_CASE("mcs step-size schedule") {
  McsParams p;
  p.bounds = Bounds::uniform(2, -5, 5);
  p.max_evals = 2000;
  p.A = 0.7;
  RngStream r(4);
  SearchHooks hooks;
  hooks.record_steps = true;
  const auto res = mcs_search(sphere, p, r, hooks);
  std::size_t abandon = 0, local = 0;
  for (const auto& s : res.steps) {
    const double G = static_cast<double>(s.generation);
    if (s.kind == StepKind::Abandon) {
      ++abandon;
      CHECK(s.alpha == p.A / std::sqrt(G));
    } else if (s.kind == StepKind::TopLocal) {
      ++local;
      CHECK(s.alpha == p.A / (G * G));
    }
  }
  CHECK(abandon > 0);
  CHECK(local > 0);
}

TEST_CASE("non-finite fitness counts as worst") {
  RngStream r(5);
  CsParams p;
  p.bounds = Bounds::uniform(2, -5, 5);
  p.max_evals = 500;
  auto f = [](std::span<const double> x) { return x[0] > 0 ? NAN : sphere(x); };
  const auto res = cs_search(f, p, r);
  CHECK(std::isfinite(res.best.fitness));
  CHECK(res.best.pos[0] <= 0.0);
}

TEST_CASE("searches are deterministic") {
  McsParams p;
  p.bounds = Bounds::uniform(3, -5, 5);
  p.max_evals = 1500;
  RngStream a(6), b(6);
  CHECK(mcs_search(sphere, p, a).best.pos == mcs_search(sphere, p, b).best.pos);
}

TEST_CASE("parameter validation") {
  CsParams p;
  p.bounds = Bounds::uniform(2, -1, 1);
  p.p_a = 1.0;
  RngStream r(7);
  CHECK_THROWS_AS(cs_search(sphere, p, r), ParameterError);
  p.p_a = 0.25;
  p.n_nests = 1;
  CHECK_THROWS_AS(cs_search(sphere, p, r), ParameterError);
  p.n_nests = 25;
  p.max_evals = 10;
  CHECK_THROWS_AS(cs_search(sphere, p, r), ParameterError);
}

TEST_CASE("mcs initialization beats random search on the mixture loss") {
  RngStream dr(8);
  const data::Dataset ds = data::normalize(data::gen_artificial(dr, 30), data::NormMode::ZScore);
  MoeTopology t;
  t.in_dim = 2;
  t.out_dim = 3;
  const std::size_t budget = 2000;
  auto f = [&](std::span<const double> v) { return moe_loss(unflatten_model(t, v), ds.X, ds.Y); };
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream r(seed, 1);
    const MoeModel tmpl = init_moe(t, r);
    McsParams p;
    p.max_evals = budget;
    const double mcs_loss = f(init_weights_mcs(tmpl, ds.X, ds.Y, p, r));
    RngStream rr(seed, 2);
    double best = INFINITY;
    for (std::size_t k = 0; k < budget; ++k) {
      WeightVector v(t.param_count());
      for (auto& x : v) x = draw_uniform(rr, -2, 2);
      best = std::min(best, f(v));
    }
    wins += mcs_loss <= best;
  }
  CHECK(wins >= 9);
}

TEST_CASE("mcs with an init-only budget equals the best random nest") {
  MoeTopology t;
  t.in_dim = 1;
  t.out_dim = 1;
  t.n_experts = 2;
  t.expert_hidden = 2;
  t.gate_hidden = 2;
  RealMat X(5, 1, {0, 0.25, 0.5, 0.75, 1}), Y(5, 1, {0, 1, 0, 1, 0});
  RngStream r(9);
  const MoeModel tmpl = init_moe(t, r);
  McsParams p;
  p.max_evals = p.n_nests;
  RngStream a(10), b(10);
  const WeightVector w = init_weights_mcs(tmpl, X, Y, p, a);
  p.bounds = Bounds::uniform(t.param_count(), -2, 2);
  auto f = [&](std::span<const double> v) { return moe_loss(unflatten_model(t, v), X, Y); };
  const auto res = mcs_search(f, p, b);
  CHECK(w == res.best.pos);
}

TEST_CASE("trace csv") {
  std::ostringstream os;
  write_trace({3.0, 2.5, 2.5}, os);
  CHECK(os.str() == "evaluation,best_fitness\n1,3\n2,2.5\n3,2.5\n");
}

TEST_CASE("on_finish sees the returned result") {
  McsParams p;
  p.bounds = Bounds::uniform(2, -5, 5);
  p.max_evals = 500;
  SearchHooks hooks;
  std::vector<double> seen;
  hooks.on_finish = [&](const SearchResult& r) { seen = r.trace; };
  RngStream r(11);
  const auto res = mcs_search(sphere, p, r, hooks);
  CHECK(seen == res.trace);
}
