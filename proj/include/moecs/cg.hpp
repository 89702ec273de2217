#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>

#include "moecs/numkernel.hpp"

namespace moecs::cg {

enum class BetaFormula { FletcherReeves, PolakRibiere, HestenesStiefel };

BetaFormula parse_formula(std::string_view name);
std::string_view formula_name(BetaFormula f);

struct BetaResult {
  double value = 0.0;
  bool restart = false;  // denominator vanished; caller should fall back to -grad
};

/// Direction-mixing coefficient. Negative values are clamped to zero.
///   FR: |d_new|^2 / |d_old|^2
///   PR: d_new.(d_new - d_old) / |d_old|^2
///   HS: (d_new - d_old).d_new / dir_old.(d_new - d_old)
BetaResult beta(BetaFormula formula, std::span<const double> d_new, std::span<const double> d_old,
                std::span<const double> dir_old);

struct LineSearchSpec {
  double eta_max = 10.0;
  double tol = 1e-4;
  /// Budget for the golden-section refinement. Bracketing costs at most
  /// log2(eta_max / tol) + 1 further evaluations.
  std::size_t max_evals = 20;
  double fallback_eta = 0.1;

  void validate() const;
};

/// Minimizes phi over eta >= 0: bracket by doubling from `tol` up to
/// `eta_max`, then refine with golden-section search. NaN values count as +inf.
///
/// If no evaluated point improves on phi(0), returns 0 when phi is flat at the
/// origin (finite-difference slope over [0, tol] below sqrt(tol)) and
/// `fallback_eta` otherwise.
double line_search(const std::function<double(double)>& phi, const LineSearchSpec& spec);

struct CgState {
  RealVec prev_grad;
  RealVec prev_dir;
  std::size_t iter = 0;
  BetaFormula formula = BetaFormula::FletcherReeves;
  /// 0 means "use the problem dimension".
  std::size_t restart_period = 0;

  bool empty() const { return prev_grad.empty(); }
  void reset() {
    prev_grad.clear();
    prev_dir.clear();
    iter = 0;
  }
};

struct DirectionResult {
  RealVec direction;
  bool restarted = false;
};

/// Returns -grad on the first call, every `restart_period` calls, when beta
/// signals a restart, or when the mixed direction is not a descent
/// direction. Otherwise -grad + beta * prev_dir. Advances `state`.
DirectionResult cg_direction(CgState& state, std::span<const double> grad);

using Objective = std::function<double(std::span<const double>)>;
using Gradient = std::function<RealVec(std::span<const double>)>;

struct MinimizeOptions {
  std::size_t max_iters = 100;
  LineSearchSpec ls{};
  BetaFormula formula = BetaFormula::FletcherReeves;
  std::size_t restart_period = 0;
  double grad_tol = 1e-8;
};

struct MinimizeResult {
  WeightVector w;
  /// objective at w0 followed by one value per accepted iteration
  std::vector<double> trace;
  std::size_t iterations = 0;
  bool converged = false;  // |grad|_inf < grad_tol
  /// directions produced per iteration (for conjugacy audits)
  std::vector<RealVec> directions;
};

/// Nonlinear CG: w(k+1) = w(k) + eta(k) dir(k), eta from line_search.
/// A step that fails to improve the objective is retried once along -grad;
/// if that fails too the search stops. The trace is therefore non-increasing.
MinimizeResult minimize(const Objective& objective, const Gradient& gradient, WeightVector w0,
                        const MinimizeOptions& opts, bool keep_directions = false);

}  // namespace moecs::cg
