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

#ifndef CLAIMNET_DIFFKIT_H_
#define CLAIMNET_DIFFKIT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "claimnet/common.h"

namespace claimnet::diffkit {

// Dense row-major tensor of doubles. Only rank 0-2 are used in practice:
// vectors of features and [batch x features] matrices.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  // Rejects a value count that disagrees with the shape and non-finite values.
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor Scalar(double v) { return Tensor({}, {v}); }
  static Tensor Vector(std::vector<double> v);
  static Tensor Matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  // Leading dimension for rank 2, 1 otherwise.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  // Trailing dimension (1 for scalars).
  std::size_t cols() const { return rank() == 0 ? 1 : shape_.back(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vec() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }
  bool AllFinite() const;
  void Fill(double v);
  std::string ShapeString() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

using TensorMap = std::map<std::string, Tensor>;

// Sparse [rows x cols] input in compressed-row form.
struct SparseRows {
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr = {0};
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  std::size_t rows() const { return row_ptr.size() - 1; }
  void AddRow(std::span<const std::uint32_t> indices, std::span<const double> values);
  Tensor Dense() const;
};

// Non-learned batch normalization state. The learned scale and shift are
// ordinary parameters passed to Graph::BatchNorm.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;
  bool training = true;
  // Set by the first train-mode forward; eval mode requires it.
  bool initialized = false;

  explicit BatchNormState(std::size_t features = 0)
      : running_mean(features, 0.0), running_var(features, 1.0) {}
};

// Scalar losses. Probabilities are clipped to [kProbClip, 1 - kProbClip].
inline constexpr double kProbClip = 1e-7;
double BinaryCrossEntropy(double y, double p);
double CategoricalCrossEntropy(std::span<const double> y, std::span<const double> q);
double AbsoluteError(double y, double prediction);

// Checks y >= 0 and |sum(y) - 1| <= 1e-9.
bool OnSimplex(std::span<const double> y, double tol = 1e-9);

struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the node list
// is already a topological order. Parameter leaves reference tensors owned by
// the caller; those tensors must outlive the graph and stay unchanged until
// Backward has run.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var Parameter(std::string name, const Tensor& value);
  Var Constant(Tensor value);
  Var Input(Tensor value, bool requires_grad = true);

  // y = x W^T + b for x [B x n], W [m x n], b [m]. With `track_input_grad`
  // the gradient w.r.t. the dense materialization of x is kept.
  Var SparseAffine(const SparseRows& x, Var w, std::optional<Var> b,
                   bool track_input_grad = false);
  // y = x W^T + b for dense x [B x n] (or a vector [n]).
  Var Affine(Var x, Var w, std::optional<Var> b);

  Var Relu(Var x);
  Var Sigmoid(Var x);
  // Row-wise softmax over the trailing dimension.
  Var Softmax(Var x);
  Var Hadamard(Var a, Var b);
  Var Add(Var a, Var b);
  // x [B x m]; gamma, beta [m]. Mode comes from state.training.
  Var BatchNorm(Var x, Var gamma, Var beta, BatchNormState& state);

  // Batch-mean losses; each returns a scalar node.
  Var BceLoss(Var p, const Tensor& y);
  Var CceLoss(Var q, const Tensor& y);
  Var L1Loss(Var prediction, const Tensor& y);
  // sum_i x_i * weights_i over all entries; scalar.
  Var Dot(Var x, const Tensor& weights);
  // sum_k weight_k * term_k over scalar terms.
  Var WeightedSum(const std::vector<std::pair<Var, double>>& terms);

  // Fills gradients of `loss` w.r.t. every node. Safe to call repeatedly.
  void Backward(Var loss);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  // Dense input gradient recorded by SparseAffine(track_input_grad=true).
  const Tensor& input_grad(Var sparse_affine) const;
  TensorMap ParameterGradients() const;
  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    const Tensor* ref = nullptr;  // parameter leaves
    Tensor own;
    Tensor grad;
    Tensor aux;  // op-specific cached intermediate
    Tensor input_grad;
    std::string name;  // parameters only
    bool requires_grad = false;
    bool is_parameter = false;
    std::function<void(Graph&, Node&)> backward;

    const Tensor& value() const { return ref ? *ref : own; }
  };

  Var Push(Node node);
  Node& node(Var v);
  const Node& node(Var v) const;
  bool needs(Var v) const { return node(v).requires_grad; }
  Tensor& grad_of(Var v) { return node(v).grad; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace claimnet::diffkit

#endif  // CLAIMNET_DIFFKIT_H_
