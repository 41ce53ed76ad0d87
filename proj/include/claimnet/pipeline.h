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

#ifndef CLAIMNET_PIPELINE_H_
#define CLAIMNET_PIPELINE_H_

#include <functional>
#include <string>
#include <vector>

#include "claimnet/eval.h"
#include "claimnet/featurize.h"
#include "claimnet/ingest.h"
#include "claimnet/model.h"
#include "claimnet/train.h"

namespace claimnet::pipeline {

struct ExperimentOptions {
  model::Variant variant = model::Variant::kDeepClaim2;
  std::size_t context_dim = 96;
  std::size_t embed_dim = 94;
  model::LossWeights lambda;
  train::TrainConfig train;
  featurize::Thresholds thresholds{5, 5, 1};
  int k_splits = 3;
  // Evaluate only the last (largest) split.
  bool last_split_only = false;
  std::uint64_t seed = 7;
};

// Everything produced while evaluating one split.
struct SplitRun {
  eval::CVSplit split;
  featurize::Vocabulary vocab;
  std::vector<featurize::ClaimVector> test_x;
  std::vector<model::Prediction> test_predictions;
  std::vector<train::EpochLoss> trace;
  eval::SplitMetrics metrics;
  model::Network network;
};

// Model configuration for `options` over `vocab`.
model::ModelConfig MakeModelConfig(const ExperimentOptions& options,
                                   const featurize::Vocabulary& vocab,
                                   const ingest::DenialCodeSet& denial_set);

// Trains on `train_idx`, scores `test_idx`. The vocabulary is built from the
// training claims only.
SplitRun RunSplit(const std::vector<ingest::LabeledClaim>& data, const eval::CVSplit& split,
                  const ingest::DenialCodeSet& denial_set, const ExperimentOptions& options);

// Time-series cross-validation of one variant. `on_split`, when set, sees
// every finished split.
eval::MetricsReport EvaluateVariant(const std::vector<ingest::LabeledClaim>& data,
                                    const ingest::DenialCodeSet& denial_set,
                                    const ExperimentOptions& options,
                                    const std::function<void(const SplitRun&)>& on_split = {});

std::vector<eval::MetricsReport> Bench(const std::vector<ingest::LabeledClaim>& data,
                                       const ingest::DenialCodeSet& denial_set,
                                       const ExperimentOptions& options);

}  // namespace claimnet::pipeline

#endif  // CLAIMNET_PIPELINE_H_
