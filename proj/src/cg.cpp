#include "moecs/cg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace moecs::cg {

BetaFormula parse_formula(std::string_view name) {
  if (name == "fr" || name == "fletcher-reeves" || name == "FletcherReeves") return BetaFormula::FletcherReeves;
  if (name == "pr" || name == "polak-ribiere" || name == "PolakRibiere") return BetaFormula::PolakRibiere;
  if (name == "hs" || name == "hestenes-stiefel" || name == "HestenesStiefel") return BetaFormula::HestenesStiefel;
  throw ParameterError("unknown CG formula '" + std::string(name) + "' (expected fr, pr or hs)");
}

std::string_view formula_name(BetaFormula f) {
  switch (f) {
    case BetaFormula::FletcherReeves: return "fr";
    case BetaFormula::PolakRibiere: return "pr";
    case BetaFormula::HestenesStiefel: return "hs";
  }
  return "?";
}

BetaResult beta(BetaFormula formula, std::span<const double> d_new, std::span<const double> d_old,
                std::span<const double> dir_old) {
  if (d_new.size() != d_old.size() || d_new.size() != dir_old.size()) {
    throw DimensionError("beta: length mismatch");
  }
  constexpr double kTiny = 1e-300;
  double num = 0.0;
  double den = 0.0;
  switch (formula) {
    case BetaFormula::FletcherReeves:
      num = dot(d_new, d_new);
      den = dot(d_old, d_old);
      break;
    case BetaFormula::PolakRibiere:
      for (std::size_t i = 0; i < d_new.size(); ++i) num += d_new[i] * (d_new[i] - d_old[i]);
      den = dot(d_old, d_old);
      break;
    case BetaFormula::HestenesStiefel:
      for (std::size_t i = 0; i < d_new.size(); ++i) {
        const double y = d_new[i] - d_old[i];
        num += y * d_new[i];
        den += dir_old[i] * y;
      }
      break;
  }
  if (!(std::abs(den) > kTiny) || !std::isfinite(num)) return {0.0, true};
  const double b = num / den;
  if (!std::isfinite(b)) return {0.0, true};
  return {b > 0.0 ? b : 0.0, false};
}

void LineSearchSpec::validate() const {
  if (!(eta_max > 0.0) || !(tol > 0.0) || max_evals < 3 || !(fallback_eta >= 0.0) || tol > eta_max) {
    throw ParameterError("LineSearchSpec: need eta_max > 0, 0 < tol <= eta_max, max_evals >= 3");
  }
}

namespace {

struct Sample {
  double eta;
  double value;
};

class Probe {
public:
  explicit Probe(const std::function<double(double)>& phi) : phi_(phi) {}

  double operator()(double eta) {
    double v = phi_(eta);
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    if (v < best.value) best = {eta, v};
    return v;
  }

  Sample best{0.0, std::numeric_limits<double>::infinity()};

private:
  const std::function<double(double)>& phi_;
};

/// Probes the vertex of the parabola through three points when it lies
/// strictly inside (p0, p2).
template <typename P>
std::optional<Sample> probe_vertex(P& probe, double p0, double p1, double p2, double q0, double q1, double q2) {
  const double num = (p1 - p0) * (p1 - p0) * (q1 - q2) - (p1 - p2) * (p1 - p2) * (q1 - q0);
  const double den = (p1 - p0) * (q1 - q2) - (p1 - p2) * (q1 - q0);
  if (!std::isfinite(num) || !std::isfinite(den) || den == 0.0) return std::nullopt;
  const double vertex = p1 - 0.5 * num / den;
  if (!(vertex > p0 && vertex < p2 && std::isfinite(vertex))) return std::nullopt;
  return Sample{vertex, probe(vertex)};
}

}  // namespace

double line_search(const std::function<double(double)>& phi, const LineSearchSpec& spec) {
  spec.validate();
  const double f0 = phi(0.0);
  if (!std::isfinite(f0)) throw ParameterError("line_search: phi(0) is not finite");

  Probe probe(phi);
  probe.best = {0.0, f0};

  // Rises smaller than this are indistinguishable from rounding error.
  auto rises = [](double from, double to) {
    if (std::isinf(to)) return !std::isinf(from);
    return to > from + 32.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(from), std::abs(to));
  };

  // Bracketing by doubling.
  double a = 0.0, fa = f0;
  double b = spec.tol, fb = probe(b);
  double c = b, fc = fb;
  bool bracketed = false;
  if (rises(f0, fb)) {
    // Minimum (if any) lies inside (0, tol); back off geometrically.
    double eta = b;
    for (std::size_t i = 0; i < spec.max_evals; ++i) {
      eta *= 0.5;
      if (probe(eta) < f0) break;
    }
  } else {
    while (true) {
      if (b >= spec.eta_max) break;
      c = std::min(2.0 * b, spec.eta_max);
      fc = probe(c);
      if (rises(fb, fc)) {
        bracketed = true;
        break;
      }
      a = b, fa = fb;
      b = c, fb = fc;
    }
  }

  std::optional<Sample> wide_vertex;
  if (bracketed) {
    wide_vertex = probe_vertex(probe, a, b, c, fa, fb, fc);
    // Golden-section refinement on [a, c], then one parabolic step.
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = a, hi = c, flo = fa, fhi = fc;
    double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
    double f1 = probe(x1), f2 = probe(x2);
    std::size_t evals = 2;
    while (evals + 1 < spec.max_evals && hi - lo > spec.tol) {
      if (f1 < f2) {
        hi = x2, fhi = f2;
        x2 = x1, f2 = f1;
        x1 = hi - r * (hi - lo);
        f1 = probe(x1);
      } else {
        lo = x1, flo = f1;
        x1 = x2, f1 = f2;
        x2 = lo + r * (hi - lo);
        f2 = probe(x2);
      }
      ++evals;
    }
    if (f1 < f2) {
      probe_vertex(probe, lo, x1, x2, flo, f1, f2);
    } else {
      probe_vertex(probe, x1, x2, hi, f1, f2, fhi);
    }
  }

  if (probe.best.value < f0 && probe.best.eta > 0.0) {
    // Below rounding noise the sampled values cannot rank points; the vertex
    // of the wide bracket is then the better estimate.
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(f0), std::abs(probe.best.value));
    if (wide_vertex && wide_vertex->value < f0 && wide_vertex->value <= probe.best.value + noise) return wide_vertex->eta;
    return probe.best.eta;
  }

  // No improvement anywhere on the ray.
  const double slope = (fb - f0) / spec.tol;
  if (std::isfinite(slope) && slope < std::sqrt(spec.tol)) return 0.0;
  return spec.fallback_eta;
}

DirectionResult cg_direction(CgState& state, std::span<const double> grad) {
  if (!all_finite(grad)) throw std::runtime_error("cg_direction: non-finite gradient");
  if (!state.empty() && state.prev_grad.size() != grad.size()) {
    throw DimensionError("cg_direction: gradient length changed between calls");
  }
  const std::size_t period = state.restart_period ? state.restart_period : grad.size();

  DirectionResult out;
  out.direction.resize(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) out.direction[i] = -grad[i];
  out.restarted = true;

  if (!state.empty() && state.iter % period != 0) {
    const BetaResult b = beta(state.formula, grad, state.prev_grad, state.prev_dir);
    if (!b.restart) {
      RealVec mixed = axpy(b.value, state.prev_dir, out.direction);
      if (dot(mixed, grad) < 0.0) {
        out.direction = std::move(mixed);
        out.restarted = false;
      }
    }
  }

  state.prev_grad.assign(grad.begin(), grad.end());
  state.prev_dir = out.direction;
  ++state.iter;
  return out;
}

MinimizeResult minimize(const Objective& objective, const Gradient& gradient, WeightVector w0,
                        const MinimizeOptions& opts, bool keep_directions) {
  opts.ls.validate();
  MinimizeResult res;
  res.w = std::move(w0);
  double f = objective(res.w);
  if (!std::isfinite(f)) throw ParameterError("minimize: objective is not finite at the start point");
  res.trace.push_back(f);

  CgState state;
  state.formula = opts.formula;
  state.restart_period = opts.restart_period;

  RealVec trial(res.w.size());
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    const RealVec g = gradient(res.w);
    if (g.size() != res.w.size()) throw DimensionError("minimize: gradient length mismatch");
    if (!all_finite(g)) throw std::runtime_error("minimize: non-finite gradient");
    if (norm_inf(g) < opts.grad_tol) {
      res.converged = true;
      break;
    }

    DirectionResult dir = cg_direction(state, g);
    double eta = 0.0;
    double f_new = f;
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto phi = [&](double step) {
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = res.w[i] + step * dir.direction[i];
        return objective(trial);
      };
      eta = line_search(phi, opts.ls);
      f_new = eta > 0.0 ? phi(eta) : f;
      if (eta > 0.0 && f_new < f) break;
      if (dir.restarted) break;
      state.reset();
      dir = cg_direction(state, g);
    }
    if (!(eta > 0.0 && f_new < f)) break;

    for (std::size_t i = 0; i < res.w.size(); ++i) res.w[i] += eta * dir.direction[i];
    f = f_new;
    res.trace.push_back(f);
    ++res.iterations;
    if (keep_directions) res.directions.push_back(dir.direction);
  }
  if (!res.converged) {
    res.converged = norm_inf(gradient(res.w)) < opts.grad_tol;
  }
  return res;
}

}  // namespace moecs::cg
