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

#include "claimnet/train.h"

#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "claimnet/rng.h"

namespace claimnet::train {

using diffkit::Tensor;

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw Error("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw Error("Adam epsilon must be positive");
  if (batch_size < 1) throw Error("batch size must be >= 1");
  if (epochs < 0) throw Error("epoch count must be >= 0");
}

void AdamStep(diffkit::TensorMap& params, const diffkit::TensorMap& grads,
              OptimizerState& state, const TrainConfig& config) {
  for (const auto& [name, p] : params) {
    const auto it = grads.find(name);
    if (it == grads.end()) throw Error(fmt::format("adam: no gradient for '{}'", name));
    if (!it->second.SameShape(p)) {
      throw ShapeError(fmt::format("adam: gradient for '{}' has shape {}, parameter {}",
                                   name, it->second.ShapeString(), p.ShapeString()));
    }
  }
  ++state.t;
  const double b1 = config.beta1, b2 = config.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (auto& [name, p] : params) {
    const Tensor& g = grads.at(name);
    auto m_it = state.m.try_emplace(name, p.shape()).first;
    auto v_it = state.v.try_emplace(name, p.shape()).first;
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

std::vector<EpochLoss> TrainNetwork(model::Network& net, std::span<const Example> data,
                                    const TrainConfig& config) {
  config.Validate();
  if (data.empty()) throw Error("training data is empty");
  std::vector<EpochLoss> trace;
  if (config.epochs == 0) return trace;

  if (config.init_response_bias) {
    double sum = 0.0;
    for (const auto& ex : data) sum += ex.y->y3;
    net.params().at("head3.b")[0] = sum / static_cast<double>(data.size());
    net.params().at("head3.W").Fill(0.0);
  }

  Rng rng(config.shuffle_seed);
  OptimizerState opt;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const featurize::ClaimVector*> xs;
  std::vector<const ingest::TargetVector*> ys;

  net.SetTraining(true);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.Shuffle(order);
    EpochLoss sums;
    sums.epoch = epoch;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      xs.clear();
      ys.clear();
      for (std::size_t i = start; i < end; ++i) {
        xs.push_back(data[order[i]].x);
        ys.push_back(data[order[i]].y);
      }
      auto fwd = net.Run(xs);
      const model::LossVars lv = model::AddLoss(fwd, ys, net.config().lambda);
      const auto& g = fwd.graph;
      const model::LossComponents parts{g.value(lv.bce)[0], g.value(lv.cce_claim)[0],
                                        g.value(lv.cce_service)[0], g.value(lv.l1)[0]};
      const double total = g.value(lv.total)[0];
      if (!std::isfinite(total)) {
        throw TrainingError(fmt::format(
            "non-finite loss at epoch {}, batch {}: bce={} cce_claim={} cce_service={} "
            "l1={} total={}",
            epoch, batch_no, parts.bce, parts.cce_claim, parts.cce_service, parts.l1,
            total));
      }
      fwd.graph.Backward(lv.total);
      AdamStep(net.params(), fwd.graph.ParameterGradients(), opt, config);

      const double w = static_cast<double>(end - start);
      sums.parts.bce += w * parts.bce;
      sums.parts.cce_claim += w * parts.cce_claim;
      sums.parts.cce_service += w * parts.cce_service;
      sums.parts.l1 += w * parts.l1;
      sums.total += w * total;
    }
    const double n = static_cast<double>(order.size());
    sums.parts.bce /= n;
    sums.parts.cce_claim /= n;
    sums.parts.cce_service /= n;
    sums.parts.l1 /= n;
    sums.total /= n;
    trace.push_back(sums);
  }
  net.SetTraining(false);
  return trace;
}

TrainResult Train(std::span<const Example> data, const model::ModelConfig& model_config,
                  const TrainConfig& config) {
  config.Validate();
  if (data.empty()) throw Error("training data is empty");
  TrainResult result{model::Network(model_config), {}};
  result.trace = TrainNetwork(result.network, data, config);
  return result;
}

void WriteLossTrace(std::ostream& out, const std::vector<EpochLoss>& trace) {
  out << "epoch,bce,cce_claim,cce_service,l1,total\n";
  for (const auto& e : trace) {
    out << fmt::format("{},{:.8f},{:.8f},{:.8f},{:.8f},{:.8f}\n", e.epoch, e.parts.bce,
                       e.parts.cce_claim, e.parts.cce_service, e.parts.l1, e.total);
  }
}

}  // namespace claimnet::train
