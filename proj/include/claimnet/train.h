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

#ifndef CLAIMNET_TRAIN_H_
#define CLAIMNET_TRAIN_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "claimnet/diffkit.h"
#include "claimnet/featurize.h"
#include "claimnet/ingest.h"
#include "claimnet/model.h"

namespace claimnet::train {

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 256;
  int epochs = 30;
  std::uint64_t shuffle_seed = 0;
  // Start the response-day head at the constant mean-y3 predictor.
  bool init_response_bias = true;

  void Validate() const;
};

struct OptimizerState {
  diffkit::TensorMap m;
  diffkit::TensorMap v;
  std::int64_t t = 0;
};

// One bias-corrected Adam update of every parameter in `params`. Every
// parameter needs a gradient of the same shape.
void AdamStep(diffkit::TensorMap& params, const diffkit::TensorMap& grads,
              OptimizerState& state, const TrainConfig& config);

struct EpochLoss {
  int epoch = 0;
  model::LossComponents parts;
  double total = 0.0;
};

// Thrown when a batch produces a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

struct Example {
  const featurize::ClaimVector* x;
  const ingest::TargetVector* y;
};

struct TrainResult {
  model::Network network;
  std::vector<EpochLoss> trace;
};

// Mini-batch multi-task training from freshly initialized parameters.
TrainResult Train(std::span<const Example> data, const model::ModelConfig& model_config,
                  const TrainConfig& config);

// Continues training `net` in place; returns the per-epoch trace.
std::vector<EpochLoss> TrainNetwork(model::Network& net, std::span<const Example> data,
                                    const TrainConfig& config);

// CSV: epoch,bce,cce_claim,cce_service,l1,total
void WriteLossTrace(std::ostream& out, const std::vector<EpochLoss>& trace);

}  // namespace claimnet::train

#endif  // CLAIMNET_TRAIN_H_
