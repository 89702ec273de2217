#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "moecs/cg.hpp"
#include "moecs/mlp.hpp"
#include "moecs/numkernel.hpp"

namespace moecs {

/// Raised when a training loop produces a non-finite loss.
class TrainingDiverged : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct MoeTopology {
  std::size_t in_dim = 1;
  std::size_t n_experts = 4;
  std::size_t expert_hidden = 5;
  std::size_t gate_hidden = 15;
  std::size_t out_dim = 1;
  /// Sigmoid for classification, linear for regression.
  OutActivation expert_activation = OutActivation::Sigmoid;

  MlpLayout expert_layout() const { return {in_dim, expert_hidden, out_dim, expert_activation}; }
  /// The gate always has a linear output layer of width n_experts.
  MlpLayout gate_layout() const { return {in_dim, gate_hidden, n_experts, OutActivation::Linear}; }
  std::size_t param_count() const {
    return n_experts * expert_layout().param_count() + gate_layout().param_count();
  }
  void validate() const;
  bool operator==(const MoeTopology&) const = default;
};

struct MoeModel {
  MoeTopology topology;
  std::vector<MlpParams> experts;
  MlpParams gate;

  std::size_t n_experts() const { return experts.size(); }
  bool operator==(const MoeModel&) const = default;
};

struct MoeOutput {
  RealVec g;                       // gate probabilities
  std::vector<RealVec> expert_outs;
  RealVec mixed;
};

MoeModel init_moe(const MoeTopology& topo, RngStream& rng, double scale = 0.5);

/// Experts 0..N-1 then the gate, each flattened per `flatten`.
WeightVector flatten_model(const MoeModel& m);
MoeModel unflatten_model(const MoeTopology& topo, std::span<const double> w);

/// Numerically stable softmax.
RealVec gate_probs(std::span<const double> gate_raw);
RealVec mix(std::span<const double> g, const std::vector<RealVec>& expert_outs);
/// h_i = g_i exp(-|y-O_i|^2/2) / sum_j g_j exp(-|y-O_j|^2/2), max-shifted.
RealVec posteriors(std::span<const double> g, const std::vector<RealVec>& expert_outs,
                   std::span<const double> y);

MoeOutput evaluate(const MoeModel& m, std::span<const double> x);

/// Mean over samples of -ln sum_i g_i exp(-|y - O_i|^2 / 2).
double moe_loss(const MoeModel& m, const RealMat& X, const RealMat& Y);
/// Exact gradient of moe_loss, flattened like flatten_model.
WeightVector moe_gradient(const MoeModel& m, const RealMat& X, const RealMat& Y);
/// Loss and gradient in one pass.
double moe_loss_and_gradient(const MoeModel& m, const RealMat& X, const RealMat& Y, WeightVector& grad);

enum class Trainer { GD, CG };

struct TrainSpec {
  std::size_t epochs = 100;
  double eta_e = 0.1;
  double eta_g = 0.15;
  double momentum = 0.9;
  Trainer trainer = Trainer::CG;
  cg::BetaFormula cg_formula = cg::BetaFormula::FletcherReeves;
  cg::LineSearchSpec ls{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  MoeModel model;
  /// one entry per epoch: moe_loss over the training set after that epoch
  std::vector<double> loss_trace;
  std::size_t updates = 0;
};

/// Online gradient descent with momentum. Each epoch visits every sample once
/// in an order shuffled from spec.seed; experts step with eta_e, the gate with
/// eta_g.
TrainResult train_gd(MoeModel model, const RealMat& X, const RealMat& Y, const TrainSpec& spec);

/// Full-batch conjugate gradient: one direction + line search per epoch.
TrainResult train_cg(MoeModel model, const RealMat& X, const RealMat& Y, const TrainSpec& spec);

RealVec predict(const MoeModel& m, std::span<const double> x);
/// argmax of the mixed output, ties to the lowest index.
std::size_t predict_class(const MoeModel& m, std::span<const double> x);
std::size_t argmax(std::span<const double> v);

/// Text dump: a header line with the topology followed by the flattened
/// weights, one per line, in shortest round-trip form.
void save_model(const MoeModel& m, std::ostream& os);
MoeModel load_model(std::istream& is);

}  // namespace moecs
