#include "moecs/mcs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

namespace moecs::mcs {

Bounds Bounds::uniform(std::size_t dim, double lo, double hi) {
  return Bounds{RealVec(dim, lo), RealVec(dim, hi)};
}

bool Bounds::contains(std::span<const double> x) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  }
  return true;
}

void Bounds::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw ParameterError("Bounds: need equal, non-empty lo/hi");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
      throw ParameterError("Bounds: need finite lo < hi in every dimension");
    }
  }
}

double mantegna_sigma(double beta) {
  if (!(beta > 0.0 && beta <= 2.0)) throw ParameterError("mantegna_sigma: beta must be in (0, 2]");
  const double num = std::tgamma(1.0 + beta) * std::sin(std::numbers::pi * beta / 2.0);
  const double den = std::tgamma((1.0 + beta) / 2.0) * beta * std::pow(2.0, (beta - 1.0) / 2.0);
  return std::pow(num / den, 1.0 / beta);
}

RealVec levy_step(RngStream& rng, double lambda, std::size_t dim) {
  if (!(lambda > 1.0 && lambda <= 3.0)) throw ParameterError("levy_step: lambda must be in (1, 3]");
  const double beta = lambda - 1.0;
  const double sigma_u = mantegna_sigma(beta);
  RealVec step(dim);
  for (double& s : step) {
    const double u = draw_normal(rng, 0.0, sigma_u);
    const double v = draw_normal(rng, 0.0, 1.0);
    s = u / std::pow(std::abs(v), 1.0 / beta);
  }
  return step;
}

void CsParams::validate() const {
  bounds.validate();
  if (n_nests < 2) throw ParameterError("CsParams: need at least 2 nests");
  if (!(p_a > 0.0 && p_a < 1.0)) throw ParameterError("CsParams: p_a must be in (0, 1)");
  if (max_evals < n_nests) throw ParameterError("CsParams: max_evals must be >= n_nests");
  if (!(alpha > 0.0)) throw ParameterError("CsParams: alpha must be positive");
  if (!(lambda > 1.0 && lambda <= 3.0)) throw ParameterError("CsParams: lambda must be in (1, 3]");
}

void McsParams::validate() const {
  bounds.validate();
  if (n_nests < 2) throw ParameterError("McsParams: need at least 2 nests");
  if (max_evals < n_nests) throw ParameterError("McsParams: max_evals must be >= n_nests");
  if (!(A > 0.0)) throw ParameterError("McsParams: A must be positive");
  if (!(frac_abandon > 0.0 && frac_abandon < 1.0)) throw ParameterError("McsParams: frac_abandon must be in (0, 1)");
  if (!(frac_top > 0.0 && frac_top < 1.0)) throw ParameterError("McsParams: frac_top must be in (0, 1)");
  if (!(lambda > 1.0 && lambda <= 3.0)) throw ParameterError("McsParams: lambda must be in (1, 3]");
}

std::size_t McsParams::abandon_count() const {
  const auto k = static_cast<std::size_t>(std::floor(frac_abandon * static_cast<double>(n_nests)));
  // The best nest is never abandoned.
  return std::clamp<std::size_t>(k, 1, n_nests - 1);
}

std::size_t McsParams::top_count() const {
  const auto k = static_cast<std::size_t>(std::floor(frac_top * static_cast<double>(n_nests)));
  return std::clamp<std::size_t>(k, 1, n_nests);
}

namespace {

/// Budgeted objective with best-ever bookkeeping.
class Evaluator {
public:
  Evaluator(const Objective& f, std::size_t budget, SearchResult& out) : f_(f), budget_(budget), out_(out) {
    out_.best.fitness = std::numeric_limits<double>::infinity();
  }

  bool exhausted() const { return out_.evaluations >= budget_; }

  double operator()(std::span<const double> x) {
    double v = f_(x);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::max();
    ++out_.evaluations;
    if (v < out_.best.fitness) out_.best = Nest{WeightVector(x.begin(), x.end()), v};
    out_.trace.push_back(out_.best.fitness);
    return v;
  }

private:
  const Objective& f_;
  std::size_t budget_;
  SearchResult& out_;
};

std::vector<Nest> init_population(std::size_t n, const Bounds& b, RngStream& rng, Evaluator& eval) {
  std::vector<Nest> nests(n);
  for (auto& nest : nests) {
    nest.pos.resize(b.dim());
    for (std::size_t d = 0; d < b.dim(); ++d) nest.pos[d] = draw_uniform(rng, b.lo[d], b.hi[d]);
  }
  for (auto& nest : nests) nest.fitness = eval(nest.pos);
  return nests;
}

std::vector<std::size_t> rank_by_fitness(const std::vector<Nest>& nests) {
  std::vector<std::size_t> idx(nests.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return nests[a].fitness < nests[b].fitness; });
  return idx;
}

RealVec flight(std::span<const double> from, double alpha, double lambda, RngStream& rng) {
  RealVec step = levy_step(rng, lambda, from.size());
  for (std::size_t d = 0; d < step.size(); ++d) step[d] = from[d] + alpha * step[d];
  return step;
}

// Guard against a search that can never land in bounds.
constexpr std::size_t kMaxIdleGenerations = 100000;

}  // namespace

RealVec golden_crossover(const Nest& a, const Nest& b) {
  if (a.pos.size() != b.pos.size()) throw DimensionError("golden_crossover: length mismatch");
  RealVec x(a.pos.size());
  if (a.fitness == b.fitness) {
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = 0.5 * (a.pos[d] + b.pos[d]);
    return x;
  }
  const Nest& better = a.fitness < b.fitness ? a : b;
  const Nest& worse = a.fitness < b.fitness ? b : a;
  const double inv_phi = 2.0 / (1.0 + std::sqrt(5.0));
  for (std::size_t d = 0; d < x.size(); ++d) x[d] = worse.pos[d] + (better.pos[d] - worse.pos[d]) * inv_phi;
  return x;
}

SearchResult cs_search(const Objective& objective, const CsParams& params, RngStream& rng, const SearchHooks& hooks) {
  params.validate();
  SearchResult res;
  Evaluator eval(objective, params.max_evals, res);
  std::vector<Nest> nests = init_population(params.n_nests, params.bounds, rng, eval);
  if (hooks.on_generation) hooks.on_generation(0, nests);

  const std::size_t n = params.n_nests;
  const auto n_abandon = std::min<std::size_t>(
      n - 1, static_cast<std::size_t>(std::ceil(params.p_a * static_cast<double>(n))));

  std::size_t idle = 0;
  while (!eval.exhausted() && idle < kMaxIdleGenerations) {
    const std::size_t before = res.evaluations;
    ++res.generations;

    // New cuckoo from a random nest, dropped on another random nest.
    const std::size_t src = rng.next_index(n);
    RealVec egg = flight(nests[src].pos, params.alpha, params.lambda, rng);
    if (hooks.record_steps) res.steps.push_back({res.generations, StepKind::Cuckoo, params.alpha});
    if (params.bounds.contains(egg)) {
      const double f = eval(egg);
      const std::size_t target = rng.next_index(n);
      if (f < nests[target].fitness) nests[target] = Nest{std::move(egg), f};
    }

    // Abandon the worst fraction; a rebuilt nest is kept only if it is no worse.
    const auto order = rank_by_fitness(nests);
    for (std::size_t k = 0; k < n_abandon && !eval.exhausted(); ++k) {
      Nest& nest = nests[order[n - 1 - k]];
      RealVec moved = flight(nest.pos, params.alpha, params.lambda, rng);
      if (hooks.record_steps) res.steps.push_back({res.generations, StepKind::Abandon, params.alpha});
      if (!params.bounds.contains(moved)) continue;
      const double f = eval(moved);
      if (f <= nest.fitness) nest = Nest{std::move(moved), f};
    }
    if (hooks.on_generation) hooks.on_generation(res.generations, nests);
    idle = res.evaluations == before ? idle + 1 : 0;
  }
  if (hooks.on_finish) hooks.on_finish(res);
  return res;
}

SearchResult mcs_search(const Objective& objective, const McsParams& params, RngStream& rng,
                        const SearchHooks& hooks) {
  params.validate();
  SearchResult res;
  Evaluator eval(objective, params.max_evals, res);
  std::vector<Nest> nests = init_population(params.n_nests, params.bounds, rng, eval);

  std::size_t G = 1;
  if (hooks.on_generation) hooks.on_generation(G, nests);
  const std::size_t n = params.n_nests;
  const std::size_t n_abandon = params.abandon_count();
  const std::size_t n_top = params.top_count();

  std::size_t idle = 0;
  while (!eval.exhausted() && idle < kMaxIdleGenerations) {
    const std::size_t before = res.evaluations;
    ++G;
    const double g = static_cast<double>(G);
    const auto order = rank_by_fitness(nests);

    const double alpha_abandon = params.A / std::sqrt(g);
    for (std::size_t k = 0; k < n_abandon && !eval.exhausted(); ++k) {
      Nest& nest = nests[order[n - 1 - k]];
      RealVec moved = flight(nest.pos, alpha_abandon, params.lambda, rng);
      if (hooks.record_steps) res.steps.push_back({G, StepKind::Abandon, alpha_abandon});
      if (!params.bounds.contains(moved)) continue;
      nest.fitness = eval(moved);
      nest.pos = std::move(moved);
    }

    const double alpha_local = params.A / (g * g);
    for (std::size_t t = 0; t < n_top && !eval.exhausted(); ++t) {
      const std::size_t i = order[t];
      const std::size_t j = order[rng.next_index(n_top)];
      RealVec egg;
      if (i == j) {
        egg = flight(nests[i].pos, alpha_local, params.lambda, rng);
        if (hooks.record_steps) res.steps.push_back({G, StepKind::TopLocal, alpha_local});
        if (!params.bounds.contains(egg)) continue;
      } else {
        egg = golden_crossover(nests[i], nests[j]);
      }
      const double f = eval(egg);
      const std::size_t target = rng.next_index(n);
      if (f < nests[target].fitness) nests[target] = Nest{std::move(egg), f};
    }

    res.generations = G - 1;
    if (hooks.on_generation) hooks.on_generation(G, nests);
    idle = res.evaluations == before ? idle + 1 : 0;
  }
  if (hooks.on_finish) hooks.on_finish(res);
  return res;
}

WeightVector init_weights_mcs(const MoeModel& model_template, const RealMat& X, const RealMat& Y, McsParams params,
                              RngStream& rng, const SearchHooks& hooks) {
  const MoeTopology topo = model_template.topology;
  const std::size_t dim = topo.param_count();
  if (params.bounds.lo.empty()) params.bounds = Bounds::uniform(dim, -2.0, 2.0);
  if (params.bounds.dim() != dim) throw DimensionError("init_weights_mcs: bounds dimension != model parameter count");
  auto objective = [&](std::span<const double> w) { return moe_loss(unflatten_model(topo, w), X, Y); };
  return mcs_search(objective, params, rng, hooks).best.pos;
}

void write_trace(const std::vector<double>& trace, std::ostream& os) {
  os << "evaluation,best_fitness\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6g\n", i + 1, trace[i]);
    os << buf;
  }
}

}  // namespace moecs::mcs
