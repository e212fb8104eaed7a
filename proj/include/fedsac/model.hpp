#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedsac/matrix.hpp"

namespace fedsac {

// Feed-forward ReLU classifier. The last hidden layer is the
// "representation" whose activations feed subspace extraction; its width
// defaults to 84 so subspaces are comparable across architectures.
struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims{84};
  std::size_t num_classes = 0;

  std::vector<std::size_t> layer_dims() const;  // [input, hidden..., classes]
  std::size_t num_layers() const { return hidden_dims.size() + 1; }
  std::size_t representation_dim() const { return hidden_dims.back(); }
  std::size_t param_count() const;

  // Flat offset of layer l's weight block; biases follow the weights.
  std::size_t layer_offset(std::size_t l) const;
  // Offset of the classification head (the last layer's parameters).
  std::size_t head_offset() const { return layer_offset(num_layers() - 1); }

  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

// Flat parameter vector plus its shape descriptor; the unit of
// aggregation, similarity and regularization.
struct ParamVector {
  std::vector<double> values;
  MlpSpec spec;
};

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

struct ForwardResult {
  Matrix logits;    // m x num_classes
  Matrix features;  // m x representation_dim, post-activation
};

ForwardResult forward(const ParamVector& params, const Matrix& batch);

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

// Mean cross-entropy, minus lambda * cos(params, anchor) when an anchor
// is given (anchor treated as constant). Gradient is fully analytic.
LossGrad loss_and_grad(const ParamVector& params, const Matrix& batch,
                       std::span<const int> labels, const ParamVector* anchor, double lambda);

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr);

// Structured view of one layer inside the flat vector.
struct LayerView {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::size_t weight_offset = 0;  // in_dim x out_dim, row-major
  std::size_t bias_offset = 0;    // out_dim
};

std::vector<LayerView> layer_views(const MlpSpec& spec);

// flatten/unflatten between per-layer (weights, biases) and the flat form.
std::vector<std::pair<Matrix, std::vector<double>>> unflatten(const ParamVector& params);
ParamVector flatten(const MlpSpec& spec,
                    const std::vector<std::pair<Matrix, std::vector<double>>>& layers);

}  // namespace fedsac
