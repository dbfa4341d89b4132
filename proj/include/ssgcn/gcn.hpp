#pragma once

// Two-layer GCN: Z = Â · ReLU(Â · X · W0) · Θ. The extractor Â · ReLU(Â X W0)
// is shared between the target head Θ and the optional self-supervised head.
// Kernels are templated on the feature matrix type so that both dense
// (Eigen::Matrix) and sparse (Eigen::SparseMatrix) inputs work.

#include "ssgcn/graph.hpp"
#include "ssgcn/rng.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>

namespace ssgcn {

enum class Head { Target, SelfSupervised };

template <class Scalar = double>
struct GcnParams {
  Matrix<Scalar> w0;    // feature_dim x hidden_dim
  Matrix<Scalar> head;  // hidden_dim x num_classes
  std::optional<Matrix<Scalar>> head_ss;  // hidden_dim x ssl output dim

  const Matrix<Scalar>& head_for(Head h) const {
    if (h == Head::Target) return head;
    if (!head_ss) throw Error("model has no self-supervised head");
    return *head_ss;
  }
  Matrix<Scalar>& head_for(Head h) {
    return const_cast<Matrix<Scalar>&>(std::as_const(*this).head_for(h));
  }
  Eigen::Index feature_dim() const { return w0.rows(); }
  Eigen::Index hidden_dim() const { return w0.cols(); }

  bool operator==(const GcnParams& o) const {
    auto same = [](const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
      return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    return same(w0, o.w0) && same(head, o.head) && head_ss.has_value() == o.head_ss.has_value() &&
           (!head_ss || same(*head_ss, *o.head_ss));
  }
};

// Entries uniform in ±sqrt(6 / (rows + cols)).
template <class Scalar = double>
Matrix<Scalar> glorot_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw Error("glorot_init: empty shape");
  Rng rng(seed);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = Scalar((2.0 * rng.uniform() - 1.0) * bound);
  return m;
}

template <class Scalar = double>
GcnParams<Scalar> init_params(Eigen::Index feature_dim, Eigen::Index hidden_dim, Eigen::Index num_classes,
                              std::optional<Eigen::Index> ssl_dim, std::uint64_t seed) {
  GcnParams<Scalar> p;
  p.w0 = glorot_init<Scalar>(feature_dim, hidden_dim, derive_seed(seed, "w0"));
  p.head = glorot_init<Scalar>(hidden_dim, num_classes, derive_seed(seed, "head"));
  if (ssl_dim) p.head_ss = glorot_init<Scalar>(hidden_dim, *ssl_dim, derive_seed(seed, "head_ss"));
  return p;
}

struct DropoutSpec {
  double rate = 0.0;
  Rng* rng = nullptr;
  bool active() const { return rate > 0.0 && rng != nullptr; }
};

namespace detail {

template <class Scalar>
Matrix<Scalar> dropout_mask(Eigen::Index rows, Eigen::Index cols, const DropoutSpec& d) {
  const double keep = 1.0 - d.rate;
  const Scalar scale = Scalar(1.0 / keep);
  Matrix<Scalar> mask(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = d.rng->uniform() < keep ? scale : Scalar(0);
  return mask;
}

template <class Scalar>
Matrix<Scalar> dropout_input(const Matrix<Scalar>& x, const DropoutSpec& d) {
  return x.cwiseProduct(dropout_mask<Scalar>(x.rows(), x.cols(), d));
}

template <class Scalar, int Options, class StorageIndex>
Eigen::SparseMatrix<Scalar, Options, StorageIndex> dropout_input(
    const Eigen::SparseMatrix<Scalar, Options, StorageIndex>& x, const DropoutSpec& d) {
  const double keep = 1.0 - d.rate;
  const Scalar scale = Scalar(1.0 / keep);
  Eigen::SparseMatrix<Scalar, Options, StorageIndex> out = x;
  for (Eigen::Index k = 0; k < out.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<Scalar, Options, StorageIndex>::InnerIterator it(out, k); it; ++it)
      it.valueRef() = d.rng->uniform() < keep ? it.value() * scale : Scalar(0);
  return out;
}

}  // namespace detail

// Intermediates of the extractor pass, retained for the backward pass.
template <class FeatureMat>
struct ForwardCache {
  using Scalar = typename FeatureMat::Scalar;

  const FeatureMat* source = nullptr;
  std::optional<FeatureMat> dropped_input;
  const NormalizedAdjacency<Scalar>* adjacency = nullptr;
  Matrix<Scalar> pre;          // Â X W0
  Matrix<Scalar> hidden;       // ReLU(pre)
  Matrix<Scalar> hidden_mask;  // empty when dropout is off
  Matrix<Scalar> propagated;   // Â · dropout(hidden), the extractor output

  const FeatureMat& input() const { return dropped_input ? *dropped_input : *source; }
};

// f_θ(X, Â). The caller must keep x and adj alive while the cache is in use.
template <class FeatureMat, class Scalar = typename FeatureMat::Scalar>
ForwardCache<FeatureMat> extract(const FeatureMat& x, const NormalizedAdjacency<Scalar>& adj,
                                 const Matrix<Scalar>& w0, const DropoutSpec& dropout = {}) {
  if (x.rows() != adj.rows() || adj.rows() != adj.cols())
    throw Error("gcn: feature rows (" + std::to_string(x.rows()) + ") do not match adjacency (" +
                std::to_string(adj.rows()) + ")");
  if (x.cols() != w0.rows())
    throw Error("gcn: feature dim " + std::to_string(x.cols()) + " does not match W0 rows " +
                std::to_string(w0.rows()));
  ForwardCache<FeatureMat> c;
  c.source = &x;
  c.adjacency = &adj;
  if (dropout.active()) c.dropped_input = detail::dropout_input(x, dropout);
  const Matrix<Scalar> xw = c.input() * w0;
  c.pre = adj * xw;
  c.hidden = c.pre.cwiseMax(Scalar(0));
  if (dropout.active()) {
    c.hidden_mask = detail::dropout_mask<Scalar>(c.hidden.rows(), c.hidden.cols(), dropout);
    c.propagated = adj * c.hidden.cwiseProduct(c.hidden_mask);
  } else {
    c.propagated = adj * c.hidden;
  }
  return c;
}

template <class FeatureMat, class Scalar = typename FeatureMat::Scalar>
Matrix<Scalar> logits(const ForwardCache<FeatureMat>& cache, const GcnParams<Scalar>& params, Head head) {
  const auto& w = params.head_for(head);
  if (cache.propagated.cols() != w.rows()) throw Error("gcn: head shape does not match hidden dim");
  return cache.propagated * w;
}

template <class FeatureMat, class Scalar = typename FeatureMat::Scalar>
std::pair<Matrix<Scalar>, ForwardCache<FeatureMat>> gcn_forward(const FeatureMat& x,
                                                                 const NormalizedAdjacency<Scalar>& adj,
                                                                 const GcnParams<Scalar>& params, Head head,
                                                                 const DropoutSpec& dropout = {}) {
  auto cache = extract(x, adj, params.w0, dropout);
  auto z = logits(cache, params, head);
  return {std::move(z), std::move(cache)};
}

// Gradient of W0 given the gradient with respect to the extractor output.
// The ReLU subgradient at 0 is 0.
template <class FeatureMat, class Scalar = typename FeatureMat::Scalar>
Matrix<Scalar> extractor_backward(const ForwardCache<FeatureMat>& cache, const Matrix<Scalar>& d_propagated) {
  if (d_propagated.rows() != cache.propagated.rows() || d_propagated.cols() != cache.propagated.cols())
    throw Error("gcn_backward: gradient shape does not match cache (stale cache?)");
  const auto& adj = *cache.adjacency;
  Matrix<Scalar> d_hidden = adj.transpose() * d_propagated;
  if (cache.hidden_mask.size() != 0) d_hidden.array() *= cache.hidden_mask.array();
  d_hidden.array() *= (cache.pre.array() > Scalar(0)).template cast<Scalar>();
  const Matrix<Scalar> d_xw = adj.transpose() * d_hidden;
  return cache.input().transpose() * d_xw;
}

template <class Scalar = double>
struct HeadGrads {
  Matrix<Scalar> w0;
  Matrix<Scalar> head;
};

template <class FeatureMat, class Scalar = typename FeatureMat::Scalar>
HeadGrads<Scalar> gcn_backward(const ForwardCache<FeatureMat>& cache, const GcnParams<Scalar>& params,
                               const Matrix<Scalar>& dz, Head head) {
  const auto& w = params.head_for(head);
  if (dz.rows() != cache.propagated.rows() || dz.cols() != w.cols())
    throw Error("gcn_backward: dZ shape does not match cache/head");
  HeadGrads<Scalar> g;
  g.head = cache.propagated.transpose() * dz;
  g.w0 = extractor_backward(cache, Matrix<Scalar>(dz * w.transpose()));
  return g;
}

template <class Scalar = double>
struct LossResult {
  Scalar loss = 0;
  Matrix<Scalar> grad;
};

// Mean over node_set of -log softmax(z_n)[y_n]; labels are indexed by node.
template <class Scalar>
LossResult<Scalar> softmax_cross_entropy(const Matrix<Scalar>& z, std::span<const int> labels,
                                         std::span<const NodeId> node_set) {
  if (node_set.empty()) throw Error("softmax_cross_entropy: empty node set");
  LossResult<Scalar> r;
  r.grad = Matrix<Scalar>::Zero(z.rows(), z.cols());
  const Scalar inv_n = Scalar(1) / Scalar(node_set.size());
  for (NodeId v : node_set) {
    if (v < 0 || v >= z.rows() || static_cast<std::size_t>(v) >= labels.size())
      throw Error("softmax_cross_entropy: node index out of range");
    const int y = labels[v];
    if (y < 0 || y >= z.cols()) throw Error("softmax_cross_entropy: label out of range");
    const auto row = z.row(v);
    const Scalar m = row.maxCoeff();
    const auto shifted = (row.array() - m).exp();
    const Scalar sum = shifted.sum();
    r.loss += (std::log(sum) + m - row(y)) * inv_n;
    r.grad.row(v) += (shifted / sum).matrix() * inv_n;
    r.grad(v, y) -= inv_n;
  }
  return r;
}

// Mean over node_set rows and output columns of the squared error. target row k
// corresponds to node_set[k].
template <class Scalar>
LossResult<Scalar> mse_loss(const Matrix<Scalar>& z, const Matrix<Scalar>& target,
                            std::span<const NodeId> node_set) {
  if (node_set.empty()) throw Error("mse_loss: empty node set");
  if (target.rows() != static_cast<Eigen::Index>(node_set.size()) || target.cols() != z.cols())
    throw Error("mse_loss: target shape mismatch");
  LossResult<Scalar> r;
  r.grad = Matrix<Scalar>::Zero(z.rows(), z.cols());
  const Scalar inv = Scalar(1) / (Scalar(node_set.size()) * Scalar(z.cols()));
  for (std::size_t k = 0; k < node_set.size(); ++k) {
    const NodeId v = node_set[k];
    if (v < 0 || v >= z.rows()) throw Error("mse_loss: node index out of range");
    const auto diff = (z.row(v) - target.row(static_cast<Eigen::Index>(k))).eval();
    r.loss += diff.squaredNorm() * inv;
    r.grad.row(v) += Scalar(2) * inv * diff;
  }
  return r;
}

template <class Scalar>
std::vector<int> argmax_rows(const Matrix<Scalar>& z) {
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index j = 0;
    z.row(i).maxCoeff(&j);
    out[static_cast<std::size_t>(i)] = static_cast<int>(j);
  }
  return out;
}

}  // namespace ssgcn
