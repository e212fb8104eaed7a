#include "fedsac/model.hpp"

#include <algorithm>
#include <cmath>

#include "fedsac/errors.hpp"
#include "fedsac/numerics.hpp"
#include "fedsac/rng.hpp"

namespace fedsac {

std::vector<std::size_t> MlpSpec::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(hidden_dims.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(num_classes);
  return dims;
}

std::size_t MlpSpec::param_count() const {
  const auto dims = layer_dims();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += (dims[l] + 1) * dims[l + 1];
  return n;
}

std::size_t MlpSpec::layer_offset(std::size_t l) const {
  const auto dims = layer_dims();
  std::size_t off = 0;
  for (std::size_t i = 0; i < l; ++i) off += (dims[i] + 1) * dims[i + 1];
  return off;
}

void MlpSpec::validate() const {
  if (input_dim == 0 || num_classes == 0) throw InvalidInput("MlpSpec: dims must be >= 1");
  if (hidden_dims.empty()) throw InvalidInput("MlpSpec: at least one hidden layer required");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw InvalidInput("MlpSpec: dims must be >= 1");
  }
}

std::vector<LayerView> layer_views(const MlpSpec& spec) {
  const auto dims = spec.layer_dims();
  std::vector<LayerView> views;
  views.reserve(dims.size() - 1);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LayerView v;
    v.in_dim = dims[l];
    v.out_dim = dims[l + 1];
    v.weight_offset = off;
    v.bias_offset = off + v.in_dim * v.out_dim;
    views.push_back(v);
    off = v.bias_offset + v.out_dim;
  }
  return views;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector p;
  p.spec = spec;
  p.values.assign(spec.param_count(), 0.0);
  Rng rng(seed);
  for (const LayerView& v : layer_views(spec)) {
    // Glorot-style uniform bound; biases stay zero.
    const double bound = std::sqrt(6.0 / static_cast<double>(v.in_dim + v.out_dim));
    for (std::size_t i = 0; i < v.in_dim * v.out_dim; ++i) {
      p.values[v.weight_offset + i] = rng.uniform(-bound, bound);
    }
  }
  return p;
}

namespace {

// x (m x in) * W (in x out) + b, W/b taken from the flat vector.
Matrix affine(const Matrix& x, std::span<const double> flat, const LayerView& v) {
  Matrix out(x.rows(), v.out_dim);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double* orow = out.row(i).data();
    const double* b = flat.data() + v.bias_offset;
    for (std::size_t j = 0; j < v.out_dim; ++j) orow[j] = b[j];
    const double* xrow = x.row(i).data();
    for (std::size_t k = 0; k < v.in_dim; ++k) {
      const double xv = xrow[k];
      if (xv == 0.0) continue;
      const double* wrow = flat.data() + v.weight_offset + k * v.out_dim;
      for (std::size_t j = 0; j < v.out_dim; ++j) orow[j] += xv * wrow[j];
    }
  }
  return out;
}

void relu_inplace(Matrix& m) {
  for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
}

struct ForwardTrace {
  std::vector<Matrix> activations;  // a[0] = input, a[l+1] = post-activation of layer l
  Matrix logits;
};

ForwardTrace forward_trace(const ParamVector& params, const Matrix& batch) {
  if (batch.cols() != params.spec.input_dim) {
    throw DimensionMismatch("forward: batch feature dim does not match spec");
  }
  const auto views = layer_views(params.spec);
  ForwardTrace t;
  t.activations.push_back(batch);
  for (std::size_t l = 0; l < views.size(); ++l) {
    Matrix z = affine(t.activations.back(), params.values, views[l]);
    if (l + 1 < views.size()) {
      relu_inplace(z);
      t.activations.push_back(std::move(z));
    } else {
      t.logits = std::move(z);
    }
  }
  return t;
}

}  // namespace

ForwardResult forward(const ParamVector& params, const Matrix& batch) {
  ForwardTrace t = forward_trace(params, batch);
  ForwardResult r;
  r.features = std::move(t.activations.back());
  r.logits = std::move(t.logits);
  return r;
}

LossGrad loss_and_grad(const ParamVector& params, const Matrix& batch,
                       std::span<const int> labels, const ParamVector* anchor, double lambda) {
  if (labels.size() != batch.rows()) throw DimensionMismatch("loss_and_grad: label count");
  if (lambda < 0.0) throw InvalidInput("loss_and_grad: lambda must be >= 0");
  if (anchor != nullptr && !(anchor->spec == params.spec)) {
    throw DimensionMismatch("loss_and_grad: anchor spec mismatch");
  }

  const auto views = layer_views(params.spec);
  ForwardTrace t = forward_trace(params, batch);
  const std::size_t m = batch.rows();
  const std::size_t c = params.spec.num_classes;

  LossGrad out;
  out.grad.spec = params.spec;
  out.grad.values.assign(params.values.size(), 0.0);

  // Softmax cross-entropy; dlogits = (softmax - onehot) / m.
  Matrix dlogits(m, c);
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = t.logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c) throw InvalidInput("loss_and_grad: label out of range");
    loss += -(row[static_cast<std::size_t>(y)] - mx - std::log(sum));
    for (std::size_t j = 0; j < c; ++j) {
      const double p = std::exp(row[j] - mx) / sum;
      dlogits(i, j) = (p - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) / static_cast<double>(m);
    }
  }
  loss /= static_cast<double>(m);

  // Backprop through the affine/ReLU stack.
  Matrix delta = std::move(dlogits);
  for (std::size_t l = views.size(); l-- > 0;) {
    const LayerView& v = views[l];
    const Matrix& a = t.activations[l];
    // dW = a^T delta, db = column sums of delta.
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = a.row(i).data();
      const double* drow = delta.row(i).data();
      for (std::size_t k = 0; k < v.in_dim; ++k) {
        const double av = arow[k];
        if (av == 0.0) continue;
        double* gw = out.grad.values.data() + v.weight_offset + k * v.out_dim;
        for (std::size_t j = 0; j < v.out_dim; ++j) gw[j] += av * drow[j];
      }
      double* gb = out.grad.values.data() + v.bias_offset;
      for (std::size_t j = 0; j < v.out_dim; ++j) gb[j] += drow[j];
    }
    if (l == 0) break;
    // delta_prev = (delta W^T) ⊙ relu'(a), using a > 0 as the ReLU mask.
    Matrix prev(m, v.in_dim);
    for (std::size_t i = 0; i < m; ++i) {
      const double* drow = delta.row(i).data();
      double* prow = prev.row(i).data();
      for (std::size_t k = 0; k < v.in_dim; ++k) {
        if (a(i, k) <= 0.0) continue;  // ReLU gate
        const double* wrow = params.values.data() + v.weight_offset + k * v.out_dim;
        double s = 0.0;
        for (std::size_t j = 0; j < v.out_dim; ++j) s += drow[j] * wrow[j];
        prow[k] = s;
      }
    }
    delta = std::move(prev);
  }

  // Anchor term: loss -= lambda cos(theta, anchor).
  if (anchor != nullptr && lambda > 0.0) {
    const std::span<const double> th(params.values);
    const std::span<const double> an(anchor->values);
    const double nt = norm2(th);
    const double na = norm2(an);
    if (nt == 0.0 || na == 0.0) throw DegenerateVector("loss_and_grad: zero-norm model with anchor");
    const double d = dot(th, an);
    loss -= lambda * (d / (nt * na));
    const double inv = 1.0 / (nt * na);
    const double proj = d / (nt * nt * nt * na);
    for (std::size_t i = 0; i < th.size(); ++i) {
      out.grad.values[i] -= lambda * (an[i] * inv - th[i] * proj);
    }
  }

  out.loss = loss;
  return out;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr) {
  if (!(lr > 0.0)) throw InvalidInput("sgd_step: lr must be > 0");
  if (grad.values.size() != params.values.size()) throw DimensionMismatch("sgd_step: size mismatch");
  ParamVector out = params;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= lr * grad.values[i];
  return out;
}

std::vector<std::pair<Matrix, std::vector<double>>> unflatten(const ParamVector& params) {
  std::vector<std::pair<Matrix, std::vector<double>>> layers;
  for (const LayerView& v : layer_views(params.spec)) {
    Matrix w = Matrix::from_rows(
        v.in_dim, v.out_dim,
        {params.values.begin() + static_cast<std::ptrdiff_t>(v.weight_offset),
         params.values.begin() + static_cast<std::ptrdiff_t>(v.bias_offset)});
    std::vector<double> b(params.values.begin() + static_cast<std::ptrdiff_t>(v.bias_offset),
                          params.values.begin() +
                              static_cast<std::ptrdiff_t>(v.bias_offset + v.out_dim));
    layers.emplace_back(std::move(w), std::move(b));
  }
  return layers;
}

ParamVector flatten(const MlpSpec& spec,
                    const std::vector<std::pair<Matrix, std::vector<double>>>& layers) {
  ParamVector p;
  p.spec = spec;
  p.values.reserve(spec.param_count());
  for (const auto& [w, b] : layers) {
    p.values.insert(p.values.end(), w.data().begin(), w.data().end());
    p.values.insert(p.values.end(), b.begin(), b.end());
  }
  if (p.values.size() != spec.param_count()) throw DimensionMismatch("flatten: size mismatch");
  return p;
}

}  // namespace fedsac
