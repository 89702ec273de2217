#pragma once

#include <cstddef>
#include <span>

#include "moecs/numkernel.hpp"

namespace moecs {

enum class OutActivation { Sigmoid, Linear };

/// Shape of a single-hidden-layer perceptron. The hidden layer is always
/// sigmoid; the output layer is sigmoid or linear.
struct MlpLayout {
  std::size_t in_dim = 1;
  std::size_t hidden_dim = 1;
  std::size_t out_dim = 1;
  OutActivation out_activation = OutActivation::Sigmoid;

  /// (in+1)*hidden + (hidden+1)*out; the +1 columns are biases.
  std::size_t param_count() const { return (in_dim + 1) * hidden_dim + (hidden_dim + 1) * out_dim; }
  void validate() const;
  bool operator==(const MlpLayout&) const = default;
};

/// Weights of one MLP. The last column of each matrix holds the bias.
struct MlpParams {
  MlpLayout layout;
  RealMat w_hidden;  // hidden_dim x (in_dim + 1)
  RealMat w_out;     // out_dim x (hidden_dim + 1)

  static MlpParams zeros(const MlpLayout& layout);
  bool operator==(const MlpParams&) const = default;
};

struct ForwardTrace {
  RealVec hidden;
  RealVec output;
};

double sigmoid(double x);

/// Weights i.i.d. uniform in [-scale, scale], biases included.
MlpParams init_mlp(const MlpLayout& layout, RngStream& rng, double scale = 0.5);

ForwardTrace forward(const MlpParams& p, std::span<const double> x);
/// Same as forward, reusing the buffers already held by `t`.
void forward_into(const MlpParams& p, std::span<const double> x, ForwardTrace& t);

/// Gradient of a loss L w.r.t. both weight matrices, given out_grad = dL/dO
/// taken w.r.t. the post-activation output. The output activation derivative
/// is applied here. The result has the same shape as `p`.
MlpParams backprop(const MlpParams& p, std::span<const double> x, const ForwardTrace& trace,
                   std::span<const double> out_grad);

/// Same as backprop but accumulates into `grad` (scaled by `weight`), avoiding
/// a fresh allocation per sample.
void backprop_accumulate(const MlpParams& p, std::span<const double> x, const ForwardTrace& trace,
                         std::span<const double> out_grad, double weight, MlpParams& grad);

/// Hidden weights row-major, then output weights row-major.
WeightVector flatten(const MlpParams& p);
void flatten_into(const MlpParams& p, std::span<double> out);
MlpParams unflatten(const MlpLayout& layout, std::span<const double> w);

}  // namespace moecs
