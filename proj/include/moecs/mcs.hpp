#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "moecs/moe.hpp"
#include "moecs/numkernel.hpp"

namespace moecs::mcs {

// Both searches minimize. The pseudocode's "replace if F_k > F_l" is read as
// "replace if the new egg has the lower objective value".

struct Bounds {
  RealVec lo;
  RealVec hi;

  static Bounds uniform(std::size_t dim, double lo, double hi);
  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> x) const;
  void validate() const;
};

struct Nest {
  WeightVector pos;
  double fitness = 0.0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Scale of the Mantegna numerator for stability index beta in (0, 2].
double mantegna_sigma(double beta);

/// One Levy-flight step per component via Mantegna's algorithm. `lambda` is
/// the power-law tail exponent in (1, 3]; the stability index is lambda - 1,
/// so the default 2.5 gives beta = 1.5.
RealVec levy_step(RngStream& rng, double lambda, std::size_t dim);

struct CsParams {
  std::size_t n_nests = 25;
  double p_a = 0.25;
  std::size_t max_evals = 10000;
  double alpha = 1.0;
  double lambda = 2.5;
  Bounds bounds;

  void validate() const;
};

struct McsParams {
  std::size_t n_nests = 25;
  std::size_t max_evals = 5000;
  double A = 1.0;
  double frac_abandon = 0.75;
  double frac_top = 0.25;
  double lambda = 2.5;
  Bounds bounds;

  void validate() const;
  /// floor(fraction * n), at least 1.
  std::size_t abandon_count() const;
  std::size_t top_count() const;
};

enum class StepKind { Cuckoo, Abandon, TopLocal };

struct StepRecord {
  std::size_t generation;
  StepKind kind;
  double alpha;
};

struct SearchResult {
  Nest best;
  /// best-ever fitness after each objective evaluation
  std::vector<double> trace;
  std::size_t evaluations = 0;
  std::size_t generations = 0;
  std::vector<StepRecord> steps;
};

/// Called with the population after initialization and after each generation.
using PopulationObserver = std::function<void(std::size_t generation, const std::vector<Nest>&)>;

struct SearchHooks {
  PopulationObserver on_generation;
  std::function<void(const SearchResult&)> on_finish;
  bool record_steps = false;
};

SearchResult cs_search(const Objective& objective, const CsParams& params, RngStream& rng,
                       const SearchHooks& hooks = {});
SearchResult mcs_search(const Objective& objective, const McsParams& params, RngStream& rng,
                        const SearchHooks& hooks = {});

/// Point `1/phi` of the way from the worse egg to the better one; the
/// midpoint when the two fitness values are equal.
RealVec golden_crossover(const Nest& a, const Nest& b);

/// MCS over the flattened weights of `model_template`, fitness = moe_loss.
/// Bounds default to [-2, 2] per weight when params.bounds is empty.
WeightVector init_weights_mcs(const MoeModel& model_template, const RealMat& X, const RealMat& Y,
                              McsParams params, RngStream& rng, const SearchHooks& hooks = {});

/// CSV rows "evaluation,best_fitness".
void write_trace(const std::vector<double>& trace, std::ostream& os);

}  // namespace moecs::mcs
