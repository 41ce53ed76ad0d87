// Copyright 2026 The claimnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "claimnet/diffkit.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace claimnet::diffkit {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXd>;
using MapVec = Eigen::Map<Eigen::VectorXd>;

std::size_t Product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

ConstMapMat AsMatrix(const Tensor& t) {
  return ConstMapMat(t.data(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}

MapMat AsMatrix(Tensor& t) {
  return MapMat(t.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

double Clip(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

void RequireScalarShape(const Tensor& t, const char* what) {
  if (t.size() != 1) {
    throw ShapeError(fmt::format("{} must be scalar, got shape {}", what, t.ShapeString()));
  }
}

}  // namespace

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(Product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != Product(shape_)) {
    throw ShapeError(fmt::format("shape {} needs {} values, got {}", ShapeString(),
                                 Product(shape_), values_.size()));
  }
  if (!AllFinite()) throw Error("tensor values must be finite");
}

Tensor Tensor::Vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Tensor({rows, cols}, std::move(v));
}

bool Tensor::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

void Tensor::Fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string Tensor::ShapeString() const {
  return fmt::format("[{}]", fmt::join(shape_, "x"));
}

// ------------------------------------------------------------ SparseRows

void SparseRows::AddRow(std::span<const std::uint32_t> indices,
                        std::span<const double> values) {
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= cols) {
      throw ShapeError(fmt::format("sparse index {} out of range {}", indices[k], cols));
    }
    col.push_back(indices[k]);
    val.push_back(values[k]);
  }
  row_ptr.push_back(col.size());
}

Tensor SparseRows::Dense() const {
  Tensor t({rows(), cols});
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) t.at(r, col[k]) += val[k];
  }
  return t;
}

// ---------------------------------------------------------------- losses

double BinaryCrossEntropy(double y, double p) {
  const double q = Clip(p);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

double CategoricalCrossEntropy(std::span<const double> y, std::span<const double> q) {
  if (y.size() != q.size()) {
    throw ShapeError(fmt::format("cce: target has {} classes, prediction {}", y.size(),
                                 q.size()));
  }
  if (!OnSimplex(y)) throw Error("cce: target is not a probability distribution");
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0) loss -= y[i] * std::log(Clip(q[i]));
  }
  return loss;
}

double AbsoluteError(double y, double prediction) { return std::abs(y - prediction); }

bool OnSimplex(std::span<const double> y, double tol) {
  double sum = 0.0;
  for (double v : y) {
    if (!(v >= 0.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

// ----------------------------------------------------------------- Graph

Var Graph::Push(Node n) {
  if (nodes_.size() >= UINT32_MAX - 1) throw Error("graph too large");
  nodes_.push_back(std::move(n));
  backward_done_ = false;
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Graph::Node& Graph::node(Var v) {
  if (v.id >= nodes_.size()) throw Error("invalid graph variable");
  return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) throw Error("invalid graph variable");
  return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const { return node(v).value(); }

const Tensor& Graph::grad(Var v) const {
  if (!backward_done_) throw Error("gradients requested before Backward");
  return node(v).grad;
}

const Tensor& Graph::input_grad(Var v) const {
  if (!backward_done_) throw Error("gradients requested before Backward");
  const Node& n = node(v);
  if (n.input_grad.size() == 0) throw Error("node does not track an input gradient");
  return n.input_grad;
}

Var Graph::Parameter(std::string name, const Tensor& value) {
  Node n;
  n.ref = &value;
  n.name = std::move(name);
  n.requires_grad = true;
  n.is_parameter = true;
  return Push(std::move(n));
}

Var Graph::Constant(Tensor value) {
  Node n;
  n.own = std::move(value);
  return Push(std::move(n));
}

Var Graph::Input(Tensor value, bool requires_grad) {
  Node n;
  n.own = std::move(value);
  n.requires_grad = requires_grad;
  return Push(std::move(n));
}

Var Graph::SparseAffine(const SparseRows& x, Var w, std::optional<Var> b,
                        bool track_input_grad) {
  const Tensor& W = value(w);
  if (W.rank() != 2 || W.cols() != x.cols) {
    throw ShapeError(fmt::format("sparse affine: input [{}x{}] vs weight {}", x.rows(),
                                 x.cols, W.ShapeString()));
  }
  const std::size_t m = W.rows(), batch = x.rows();
  if (b && (value(*b).rank() != 1 || value(*b).size() != m)) {
    throw ShapeError(fmt::format("sparse affine: bias {} vs weight {}",
                                 value(*b).ShapeString(), W.ShapeString()));
  }

  Node n;
  n.own = Tensor({batch, m});
  for (std::size_t r = 0; r < batch; ++r) {
    double* y = &n.own.at(r, 0);
    if (b) std::copy_n(value(*b).data(), m, y);
    for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) {
      const std::size_t j = x.col[k];
      const double v = x.val[k];
      for (std::size_t i = 0; i < m; ++i) y[i] += W[i * x.cols + j] * v;
    }
  }
  n.requires_grad = needs(w) || (b && needs(*b)) || track_input_grad;
  if (track_input_grad) n.input_grad = Tensor({batch, x.cols});
  n.backward = [x, w, b, track_input_grad](Graph& g, Node& self) {
    const Tensor& dy = self.grad;
    const Tensor& W = g.value(w);
    const std::size_t m = W.rows(), n_in = x.cols;
    if (g.needs(w)) {
      Tensor& dW = g.grad_of(w);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) {
          const std::size_t j = x.col[k];
          const double v = x.val[k];
          for (std::size_t i = 0; i < m; ++i) dW[i * n_in + j] += dy.at(r, i) * v;
        }
      }
    }
    if (b && g.needs(*b)) {
      AsMatrix(g.grad_of(*b)).row(0) += AsMatrix(dy).colwise().sum();
    }
    if (track_input_grad) {
      AsMatrix(self.input_grad).noalias() = AsMatrix(dy) * AsMatrix(W);
    }
  };
  return Push(std::move(n));
}

Var Graph::Affine(Var x, Var w, std::optional<Var> b) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  if (W.rank() != 2 || X.rank() < 1 || X.rank() > 2 || X.cols() != W.cols()) {
    throw ShapeError(fmt::format("affine: input {} vs weight {}", X.ShapeString(),
                                 W.ShapeString()));
  }
  const std::size_t m = W.rows();
  if (b && (value(*b).rank() != 1 || value(*b).size() != m)) {
    throw ShapeError(fmt::format("affine: bias {} vs weight {}", value(*b).ShapeString(),
                                 W.ShapeString()));
  }
  Node n;
  n.own = X.rank() == 2 ? Tensor({X.rows(), m}) : Tensor({m});
  auto Y = AsMatrix(n.own);
  Y.noalias() = AsMatrix(X) * AsMatrix(W).transpose();
  if (b) Y.rowwise() += AsMatrix(value(*b)).row(0);
  n.requires_grad = needs(x) || needs(w) || (b && needs(*b));
  n.backward = [x, w, b](Graph& g, Node& self) {
    const auto dY = AsMatrix(self.grad);
    if (g.needs(x)) AsMatrix(g.grad_of(x)).noalias() += dY * AsMatrix(g.value(w));
    if (g.needs(w)) {
      AsMatrix(g.grad_of(w)).noalias() += dY.transpose() * AsMatrix(g.value(x));
    }
    if (b && g.needs(*b)) AsMatrix(g.grad_of(*b)).row(0) += dY.colwise().sum();
  };
  return Push(std::move(n));
}

Var Graph::Relu(Var x) {
  Node n;
  const Tensor& X = value(x);
  n.own = Tensor(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) n.own[i] = X[i] > 0.0 ? X[i] : 0.0;
  n.requires_grad = needs(x);
  n.backward = [x](Graph& g, Node& self) {
    const Tensor& X = g.value(x);
    Tensor& dx = g.grad_of(x);
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (X[i] > 0.0) dx[i] += self.grad[i];
    }
  };
  return Push(std::move(n));
}

Var Graph::Sigmoid(Var x) {
  Node n;
  const Tensor& X = value(x);
  n.own = Tensor(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double v = X[i];
    // Split by sign to avoid exp overflow.
    n.own[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  n.requires_grad = needs(x);
  n.backward = [x](Graph& g, Node& self) {
    const Tensor& s = self.own;
    Tensor& dx = g.grad_of(x);
    for (std::size_t i = 0; i < s.size(); ++i) dx[i] += self.grad[i] * s[i] * (1.0 - s[i]);
  };
  return Push(std::move(n));
}

Var Graph::Softmax(Var x) {
  Node n;
  const Tensor& X = value(x);
  if (X.size() == 0) throw ShapeError("softmax of an empty tensor");
  n.own = Tensor(X.shape());
  const std::size_t rows = X.size() / X.cols(), k = X.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = X.data() + r * k;
    double* out = n.own.data() + r * k;
    const double mx = *std::max_element(in, in + k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      out[i] = std::exp(in[i] - mx);
      sum += out[i];
    }
    for (std::size_t i = 0; i < k; ++i) out[i] /= sum;
  }
  n.requires_grad = needs(x);
  n.backward = [x](Graph& g, Node& self) {
    const Tensor& s = self.own;
    Tensor& dx = g.grad_of(x);
    const std::size_t k = s.cols(), rows = s.size() / k;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * k;
      double dot = 0.0;
      for (std::size_t i = 0; i < k; ++i) dot += self.grad[o + i] * s[o + i];
      for (std::size_t i = 0; i < k; ++i) dx[o + i] += s[o + i] * (self.grad[o + i] - dot);
    }
  };
  return Push(std::move(n));
}

Var Graph::Hadamard(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.SameShape(B)) {
    throw ShapeError(fmt::format("hadamard: shapes {} and {} differ", A.ShapeString(),
                                 B.ShapeString()));
  }
  Node n;
  n.own = Tensor(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) n.own[i] = A[i] * B[i];
  n.requires_grad = needs(a) || needs(b);
  n.backward = [a, b](Graph& g, Node& self) {
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    if (g.needs(a)) {
      Tensor& da = g.grad_of(a);
      for (std::size_t i = 0; i < A.size(); ++i) da[i] += self.grad[i] * B[i];
    }
    if (g.needs(b)) {
      Tensor& db = g.grad_of(b);
      for (std::size_t i = 0; i < A.size(); ++i) db[i] += self.grad[i] * A[i];
    }
  };
  return Push(std::move(n));
}

Var Graph::Add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.SameShape(B)) {
    throw ShapeError(fmt::format("add: shapes {} and {} differ", A.ShapeString(),
                                 B.ShapeString()));
  }
  Node n;
  n.own = Tensor(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) n.own[i] = A[i] + B[i];
  n.requires_grad = needs(a) || needs(b);
  n.backward = [a, b](Graph& g, Node& self) {
    if (g.needs(a)) AsMatrix(g.grad_of(a)) += AsMatrix(self.grad);
    if (g.needs(b)) AsMatrix(g.grad_of(b)) += AsMatrix(self.grad);
  };
  return Push(std::move(n));
}

Var Graph::BatchNorm(Var x, Var gamma, Var beta, BatchNormState& state) {
  const Tensor& X = value(x);
  if (X.rank() != 2) throw ShapeError("batchnorm expects [batch x features]");
  const std::size_t batch = X.rows(), m = X.cols();
  if (value(gamma).size() != m || value(beta).size() != m ||
      state.running_mean.size() != m || state.running_var.size() != m) {
    throw ShapeError(fmt::format("batchnorm: {} features but gamma {}, beta {}, state {}",
                                 m, value(gamma).size(), value(beta).size(),
                                 state.running_mean.size()));
  }
  if (!(state.epsilon > 0.0)) throw Error("batchnorm epsilon must be positive");
  if (batch == 0) throw ShapeError("batchnorm needs a non-empty batch");
  const bool training = state.training;
  if (!training && !state.initialized) {
    throw Error("batchnorm in eval mode before any training update");
  }

  std::vector<double> mean(m), var(m);
  if (training) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < batch; ++r) s += X.at(r, j);
      mean[j] = s / batch;
      double ss = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        const double d = X.at(r, j) - mean[j];
        ss += d * d;
      }
      var[j] = ss / batch;
    }
    const double mom = state.momentum;
    for (std::size_t j = 0; j < m; ++j) {
      if (state.initialized) {
        state.running_mean[j] = mom * state.running_mean[j] + (1.0 - mom) * mean[j];
        state.running_var[j] = mom * state.running_var[j] + (1.0 - mom) * var[j];
      } else {
        state.running_mean[j] = mean[j];
        state.running_var[j] = var[j];
      }
    }
    state.initialized = true;
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }

  // aux holds x_hat followed by 1/sqrt(var + eps) per feature.
  Node n;
  n.aux = Tensor({batch + 1, m});
  n.own = Tensor({batch, m});
  const Tensor& G = value(gamma);
  const Tensor& Bt = value(beta);
  for (std::size_t j = 0; j < m; ++j) {
    const double inv_std = 1.0 / std::sqrt(var[j] + state.epsilon);
    n.aux.at(batch, j) = inv_std;
    for (std::size_t r = 0; r < batch; ++r) {
      const double xh = (X.at(r, j) - mean[j]) * inv_std;
      n.aux.at(r, j) = xh;
      n.own.at(r, j) = G[j] * xh + Bt[j];
    }
  }
  n.requires_grad = needs(x) || needs(gamma) || needs(beta);
  n.backward = [x, gamma, beta, training](Graph& g, Node& self) {
    const std::size_t batch = self.own.rows(), m = self.own.cols();
    const Tensor& dy = self.grad;
    const Tensor& G = g.value(gamma);
    for (std::size_t j = 0; j < m; ++j) {
      double sum_dy = 0.0, sum_dy_xh = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        sum_dy += dy.at(r, j);
        sum_dy_xh += dy.at(r, j) * self.aux.at(r, j);
      }
      if (g.needs(gamma)) g.grad_of(gamma)[j] += sum_dy_xh;
      if (g.needs(beta)) g.grad_of(beta)[j] += sum_dy;
      if (g.needs(x)) {
        Tensor& dx = g.grad_of(x);
        const double inv_std = self.aux.at(batch, j);
        if (training) {
          const double scale = G[j] * inv_std / batch;
          for (std::size_t r = 0; r < batch; ++r) {
            dx.at(r, j) += scale * (batch * dy.at(r, j) - sum_dy -
                                    self.aux.at(r, j) * sum_dy_xh);
          }
        } else {
          for (std::size_t r = 0; r < batch; ++r) dx.at(r, j) += G[j] * inv_std * dy.at(r, j);
        }
      }
    }
  };
  return Push(std::move(n));
}

Var Graph::BceLoss(Var p, const Tensor& y) {
  const Tensor& P = value(p);
  if (P.size() != y.size()) {
    throw ShapeError(fmt::format("bce: prediction {} vs target {}", P.ShapeString(),
                                 y.ShapeString()));
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0 || y[i] > 1.0) throw Error("bce: target outside [0, 1]");
  }
  const std::size_t batch = P.size();
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) total += BinaryCrossEntropy(y[i], P[i]);
  Node n;
  n.own = Tensor::Scalar(total / batch);
  n.requires_grad = needs(p);
  n.backward = [p, y](Graph& g, Node& self) {
    const Tensor& P = g.value(p);
    Tensor& dp = g.grad_of(p);
    const double scale = self.grad[0] / P.size();
    for (std::size_t i = 0; i < P.size(); ++i) {
      const double v = P[i];
      if (v < kProbClip || v > 1.0 - kProbClip) continue;
      dp[i] += scale * (-y[i] / v + (1.0 - y[i]) / (1.0 - v));
    }
  };
  return Push(std::move(n));
}

Var Graph::CceLoss(Var q, const Tensor& y) {
  const Tensor& Q = value(q);
  if (!Q.SameShape(y)) {
    throw ShapeError(fmt::format("cce: prediction {} vs target {}", Q.ShapeString(),
                                 y.ShapeString()));
  }
  const std::size_t k = Q.cols(), rows = Q.size() / k;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    total += CategoricalCrossEntropy(y.values().subspan(r * k, k),
                                     Q.values().subspan(r * k, k));
  }
  Node n;
  n.own = Tensor::Scalar(total / rows);
  n.requires_grad = needs(q);
  n.backward = [q, y](Graph& g, Node& self) {
    const Tensor& Q = g.value(q);
    Tensor& dq = g.grad_of(q);
    const double scale = self.grad[0] / (Q.size() / Q.cols());
    for (std::size_t i = 0; i < Q.size(); ++i) {
      const double v = Q[i];
      if (y[i] == 0.0 || v < kProbClip || v > 1.0 - kProbClip) continue;
      dq[i] -= scale * y[i] / v;
    }
  };
  return Push(std::move(n));
}

Var Graph::L1Loss(Var prediction, const Tensor& y) {
  const Tensor& P = value(prediction);
  if (P.size() != y.size()) {
    throw ShapeError(fmt::format("l1: prediction {} vs target {}", P.ShapeString(),
                                 y.ShapeString()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) total += AbsoluteError(y[i], P[i]);
  Node n;
  n.own = Tensor::Scalar(total / P.size());
  n.requires_grad = needs(prediction);
  n.backward = [prediction, y](Graph& g, Node& self) {
    const Tensor& P = g.value(prediction);
    Tensor& dp = g.grad_of(prediction);
    const double scale = self.grad[0] / P.size();
    for (std::size_t i = 0; i < P.size(); ++i) {
      if (P[i] > y[i]) dp[i] += scale;
      if (P[i] < y[i]) dp[i] -= scale;
    }
  };
  return Push(std::move(n));
}

Var Graph::Dot(Var x, const Tensor& weights) {
  const Tensor& X = value(x);
  if (X.size() != weights.size()) {
    throw ShapeError(fmt::format("dot: {} vs weights {}", X.ShapeString(),
                                 weights.ShapeString()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) total += X[i] * weights[i];
  Node n;
  n.own = Tensor::Scalar(total);
  n.requires_grad = needs(x);
  n.backward = [x, weights](Graph& g, Node& self) {
    Tensor& dx = g.grad_of(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += weights[i] * self.grad[0];
  };
  return Push(std::move(n));
}

Var Graph::WeightedSum(const std::vector<std::pair<Var, double>>& terms) {
  double total = 0.0;
  bool any_grad = false;
  for (const auto& [v, w] : terms) {
    RequireScalarShape(value(v), "weighted sum term");
    total += w * value(v)[0];
    any_grad = any_grad || needs(v);
  }
  Node n;
  n.own = Tensor::Scalar(total);
  n.requires_grad = any_grad;
  n.backward = [terms](Graph& g, Node& self) {
    for (const auto& [v, w] : terms) {
      if (g.needs(v)) g.grad_of(v)[0] += w * self.grad[0];
    }
  };
  return Push(std::move(n));
}

void Graph::Backward(Var loss) {
  RequireScalarShape(value(loss), "loss");
  for (Node& n : nodes_) {
    n.grad = Tensor(n.value().shape());
    if (n.input_grad.size() > 0) n.input_grad.Fill(0.0);
  }
  node(loss).grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, n);
  }
  backward_done_ = true;
}

TensorMap Graph::ParameterGradients() const {
  if (!backward_done_) throw Error("gradients requested before Backward");
  TensorMap grads;
  for (const Node& n : nodes_) {
    if (!n.is_parameter) continue;
    auto [it, inserted] = grads.emplace(n.name, n.grad);
    if (!inserted) AsMatrix(it->second) += AsMatrix(n.grad);
  }
  return grads;
}

}  // namespace claimnet::diffkit
