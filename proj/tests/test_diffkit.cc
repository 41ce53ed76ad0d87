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

#include <cmath>

#include "doctest.h"
#include "support/oracles.h"

namespace claimnet::diffkit {
namespace {

using VarMap = std::map<std::string, Var>;

Tensor Row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor::Matrix(1, n, std::move(v));
}

}  // namespace

TEST_CASE("tensor construction validates count and finiteness") {
  CHECK(Tensor({2, 3}).size() == 6);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor::Vector({1.0, std::nan("")}), Error);
  CHECK_THROWS_AS(Tensor::Vector({INFINITY}), Error);
  const Tensor m = Tensor::Matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6);
  CHECK(m.ShapeString() == "[2x3]");
}

TEST_CASE("dense: identity and zero input") {
  Graph g;
  const Tensor eye = Tensor::Matrix(2, 2, {1, 0, 0, 1});
  const Tensor zero_b = Tensor::Vector({0, 0});
  const Var y = g.Affine(g.Constant(Tensor::Vector({3, -4})), g.Constant(eye), g.Constant(zero_b));
  CHECK(g.value(y).vec() == std::vector<double>{3, -4});
  const Var z = g.Affine(g.Constant(Tensor::Vector({0, 0, 0})),
                         g.Constant(Tensor::Matrix(2, 3, {1, 2, 3, 4, 5, 6})),
                         g.Constant(Tensor::Vector({7, 8})));
  CHECK(g.value(z).vec() == std::vector<double>{7, 8});
}

TEST_CASE("dense: shape mismatch names both shapes") {
  Graph g;
  try {
    g.Affine(g.Constant(Tensor::Vector({1, 2})), g.Constant(Tensor({3, 4})), std::nullopt);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2]") != std::string::npos);
    CHECK(msg.find("[3x4]") != std::string::npos);
  }
}

TEST_CASE("dense: random 3x2 finite-difference check") {
  Rng rng(1);
  TensorMap leaves = {{"x", testing::RandomTensor(rng, {2})},
                      {"W", testing::RandomTensor(rng, {3, 2})},
                      {"b", testing::RandomTensor(rng, {3})}};
  const Tensor probe = testing::RandomTensor(rng, {3});
  const auto r = testing::CheckGraph(
      leaves,
      [&](Graph& g, const VarMap& v) {
        return g.Dot(g.Affine(v.at("x"), v.at("W"), v.at("b")), probe);
      },
      1e-5);
  CHECK(r.checked == 11);
  CHECK(r.rel_error < 1e-6);
}

TEST_CASE("elementwise ops: values") {
  Graph g;
  CHECK(g.value(g.Relu(g.Constant(Tensor::Vector({-1, 0, 2})))).vec() ==
        std::vector<double>{0, 0, 2});
  CHECK(g.value(g.Softmax(g.Constant(Row({0, 0})))).vec() == std::vector<double>{0.5, 0.5});
  CHECK(g.value(g.Hadamard(g.Constant(Tensor::Vector({2, 4})),
                           g.Constant(Tensor::Vector({0.5, 0.5}))))
            .vec() == std::vector<double>{1, 2});
  CHECK(g.value(g.Sigmoid(g.Constant(Tensor::Vector({0})))).vec()[0] == 0.5);
  CHECK_THROWS_AS(g.Hadamard(g.Constant(Tensor::Vector({1})), g.Constant(Tensor::Vector({1, 2}))),
                  ShapeError);
}

TEST_CASE("softmax: rows sum to one and ignore constant shifts") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 1 + rng.Below(4), cols = 1 + rng.Below(8);
    Tensor x = testing::RandomTensor(rng, {rows, cols}, -30, 30);
    Tensor shifted = x;
    const double c = rng.Uniform(-500, 500);
    for (double& v : shifted.values()) v += c;
    Graph g;
    const Tensor a = g.value(g.Softmax(g.Constant(x)));
    const Tensor b = g.value(g.Softmax(g.Constant(shifted)));
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < cols; ++k) {
        s += a.at(r, k);
        CHECK(std::abs(a.at(r, k) - b.at(r, k)) < 1e-9);
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("property: elementwise and softmax gradients on random shapes") {
  Rng rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t B = 1 + rng.Below(5), m = 1 + rng.Below(6);
    const Tensor probe = testing::RandomTensor(rng, {B, m});
    TensorMap one = {{"x", testing::RandomAwayFromZero(rng, {B, m})}};
    TensorMap two = {{"a", testing::RandomTensor(rng, {B, m})},
                     {"b", testing::RandomTensor(rng, {B, m})}};
    CHECK(testing::CheckGraph(one, [&](Graph& g, const VarMap& v) {
            return g.Dot(g.Relu(v.at("x")), probe);
          }).rel_error < 1e-6);
    CHECK(testing::CheckGraph(one, [&](Graph& g, const VarMap& v) {
            return g.Dot(g.Sigmoid(v.at("x")), probe);
          }).rel_error < 1e-6);
    CHECK(testing::CheckGraph(two, [&](Graph& g, const VarMap& v) {
            return g.Dot(g.Hadamard(v.at("a"), v.at("b")), probe);
          }).rel_error < 1e-6);
    CHECK(testing::CheckGraph(two, [&](Graph& g, const VarMap& v) {
            return g.Dot(g.Add(v.at("a"), v.at("b")), probe);
          }).rel_error < 1e-6);
    CHECK(testing::CheckGraph(one, [&](Graph& g, const VarMap& v) {
            return g.Dot(g.Softmax(v.at("x")), probe);
          }).rel_error < 1e-4);
  }
}

TEST_CASE("sparse affine matches its dense materialization") {
  Rng rng(4);
  SparseRows rows;
  rows.cols = 5;
  const std::vector<std::uint32_t> i0 = {0, 3}, i1 = {}, i2 = {1, 2, 4};
  const std::vector<double> v0 = {0.5, 0.5}, v1 = {}, v2 = {1, 1, 1};
  rows.AddRow(i0, v0);
  rows.AddRow(i1, v1);
  rows.AddRow(i2, v2);
  const Tensor W = testing::RandomTensor(rng, {4, 5});
  const Tensor b = testing::RandomTensor(rng, {4});
  Graph g;
  const Var sparse = g.SparseAffine(rows, g.Constant(W), g.Constant(b));
  const Var dense = g.Affine(g.Constant(rows.Dense()), g.Constant(W), g.Constant(b));
  for (std::size_t i = 0; i < g.value(sparse).size(); ++i) {
    CHECK(g.value(sparse)[i] == doctest::Approx(g.value(dense)[i]).epsilon(1e-12));
  }
  // The empty row yields the bias.
  for (std::size_t k = 0; k < 4; ++k) CHECK(g.value(sparse).at(1, k) == b[k]);
}

TEST_CASE("batchnorm: normalized input passes through, zero scale yields shift") {
  const Tensor x = Tensor::Matrix(4, 2, {-1, 1, 1, -1, -1, -1, 1, 1});  // mean 0, var 1
  BatchNormState state(2);
  Graph g;
  const Var y = g.BatchNorm(g.Constant(x), g.Constant(Tensor::Vector({1, 1})),
                            g.Constant(Tensor::Vector({0, 0})), state);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(g.value(y)[i] == doctest::Approx(x[i]).epsilon(1e-5));
  CHECK(state.initialized);
  // running <- 0.9 * running + 0.1 * batch
  CHECK(state.running_mean[0] == doctest::Approx(0.0));
  CHECK(state.running_var[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0));

  BatchNormState s2(2);
  Graph h;
  const Var z = h.BatchNorm(h.Constant(x), h.Constant(Tensor::Vector({0, 0})),
                            h.Constant(Tensor::Vector({3, -2})), s2);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(h.value(z).at(r, 0) == 3.0);
    CHECK(h.value(z).at(r, 1) == -2.0);
  }
}

TEST_CASE("batchnorm: eval mode before any training update is an error") {
  BatchNormState state(2);
  state.training = false;
  Graph g;
  CHECK_THROWS_AS(g.BatchNorm(g.Constant(Tensor({3, 2})), g.Constant(Tensor::Vector({1, 1})),
                              g.Constant(Tensor::Vector({0, 0})), state),
                  Error);
}

TEST_CASE("batchnorm: finite-difference check in both modes") {
  Rng rng(5);
  for (bool training : {true, false}) {
    BatchNormState state(3);
    state.training = training;
    state.initialized = !training;
    if (!training) state.running_var = {0.7, 1.3, 2.0};
    const Tensor probe = testing::RandomTensor(rng, {6, 3});
    TensorMap leaves = {{"x", testing::RandomTensor(rng, {6, 3}, -2, 2)},
                        {"gamma", testing::RandomTensor(rng, {3}, 0.5, 2)},
                        {"beta", testing::RandomTensor(rng, {3})}};
    const auto r = testing::CheckGraph(leaves, [&](Graph& g, const VarMap& v) {
      return g.Dot(g.BatchNorm(v.at("x"), v.at("gamma"), v.at("beta"), state), probe);
    });
    CAPTURE(training);
    CHECK(r.rel_error < 1e-5);
  }
}

TEST_CASE("losses: reference values") {
  CHECK(BinaryCrossEntropy(1, 0.5) == doctest::Approx(std::log(2.0)));
  const std::vector<double> onehot = {0, 1, 0};
  const std::vector<double> perfect = {0, 1, 0};
  CHECK(CategoricalCrossEntropy(onehot, perfect) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(AbsoluteError(7, 5) == 2);
  // Clipping keeps confident mistakes finite.
  CHECK(std::isfinite(BinaryCrossEntropy(1, 0.0)));
  CHECK(BinaryCrossEntropy(1, 0.0) == doctest::Approx(-std::log(1e-7)));
  const std::vector<double> not_simplex = {0.5, 0.6};
  const std::vector<double> q = {0.5, 0.5};
  CHECK_THROWS_AS(CategoricalCrossEntropy(not_simplex, q), Error);
}

TEST_CASE("loss nodes average over the batch and check gradients") {
  Rng rng(6);
  Tensor y0({4, 1});
  for (std::size_t i = 0; i < 4; ++i) y0[i] = i % 2;
  TensorMap z = {{"z", testing::RandomTensor(rng, {4, 1}, -2, 2)}};
  CHECK(testing::CheckGraph(z, [&](Graph& g, const VarMap& v) {
          return g.BceLoss(g.Sigmoid(v.at("z")), y0);
        }).rel_error < 1e-4);

  Tensor y1 = Tensor::Matrix(2, 3, {0.2, 0.3, 0.5, 0, 0, 1});
  TensorMap q = {{"z", testing::RandomTensor(rng, {2, 3}, -2, 2)}};
  CHECK(testing::CheckGraph(q, [&](Graph& g, const VarMap& v) {
          return g.CceLoss(g.Softmax(v.at("z")), y1);
        }).rel_error < 1e-4);

  Graph g;
  const Var l1 = g.L1Loss(g.Constant(Tensor::Matrix(2, 1, {5, 1})), Tensor::Matrix(2, 1, {7, 4}));
  CHECK(g.value(l1)[0] == doctest::Approx(2.5));
  const Var bce = g.BceLoss(g.Constant(Tensor::Matrix(2, 1, {0.5, 0.5})), Tensor::Matrix(2, 1, {1, 0}));
  CHECK(g.value(bce)[0] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("backward: constant loss, non-scalar loss, repeatability") {
  const Tensor w = Tensor::Vector({1, 2});
  Graph g;
  const Var p = g.Parameter("w", w);
  const Var c = g.Constant(Tensor::Scalar(3.0));
  g.Backward(c);
  CHECK(g.grad(p).vec() == std::vector<double>{0, 0});
  CHECK_THROWS_AS(g.Backward(p), ShapeError);

  Graph h;
  const Var q = h.Parameter("w", w);
  const Var loss = h.Dot(h.Hadamard(q, q), Tensor::Vector({1, 1}));
  h.Backward(loss);
  const auto first = h.grad(q).vec();
  h.Backward(loss);
  CHECK(h.grad(q).vec() == first);
  CHECK(first == std::vector<double>{2, 4});
}

TEST_CASE("parameter gradients merge repeated uses of one tensor") {
  const Tensor w = Tensor::Vector({1.5});
  Graph g;
  const Var a = g.Parameter("w", w);
  const Var b = g.Parameter("w", w);
  const Var loss = g.Dot(g.Add(a, b), Tensor::Vector({2.0}));
  g.Backward(loss);
  CHECK(g.ParameterGradients().at("w")[0] == 4.0);
}

TEST_CASE("weighted sums of scalar losses") {
  Graph g;
  const Var a = g.Constant(Tensor::Scalar(2.0));
  const Var b = g.Constant(Tensor::Scalar(5.0));
  CHECK(g.value(g.WeightedSum({{a, 1.0}, {b, 0.01}}))[0] == doctest::Approx(2.05));
  CHECK_THROWS_AS(g.WeightedSum({{g.Constant(Tensor::Vector({1, 2})), 1.0}}), ShapeError);
}

}  // namespace claimnet::diffkit
