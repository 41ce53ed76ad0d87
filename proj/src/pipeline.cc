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

#include "claimnet/pipeline.h"

#include <fmt/format.h>

namespace claimnet::pipeline {

model::ModelConfig MakeModelConfig(const ExperimentOptions& options,
                                   const featurize::Vocabulary& vocab,
                                   const ingest::DenialCodeSet& denial_set) {
  model::ModelConfig cfg = model::ModelConfig::ForVariant(
      options.variant, vocab, denial_set.num_classes(), denial_set.num_classes());
  cfg.context_dim = options.context_dim;
  cfg.embed_dim = options.embed_dim;
  cfg.lambda = options.lambda;
  cfg.seed = options.seed;
  return cfg;
}

SplitRun RunSplit(const std::vector<ingest::LabeledClaim>& data, const eval::CVSplit& split,
                  const ingest::DenialCodeSet& denial_set, const ExperimentOptions& options) {
  std::vector<ingest::ClaimRecord> train_claims;
  train_claims.reserve(split.train.size());
  for (std::size_t i : split.train) train_claims.push_back(data[i].claim);
  featurize::Vocabulary vocab = featurize::BuildVocab(train_claims, options.thresholds);

  std::vector<featurize::ClaimVector> train_x;
  train_x.reserve(split.train.size());
  for (const auto& c : train_claims) train_x.push_back(featurize::Vectorize(c, vocab));
  std::vector<train::Example> examples;
  examples.reserve(train_x.size());
  for (std::size_t k = 0; k < train_x.size(); ++k) {
    examples.push_back({&train_x[k], &data[split.train[k]].target});
  }

  train::TrainConfig tc = options.train;
  tc.shuffle_seed = options.seed * 1000003ULL + static_cast<std::uint64_t>(split.index);
  auto result = train::Train(examples, MakeModelConfig(options, vocab, denial_set), tc);

  std::vector<featurize::ClaimVector> test_x;
  test_x.reserve(split.test.size());
  for (std::size_t i : split.test) test_x.push_back(featurize::Vectorize(data[i].claim, vocab));
  auto preds = result.network.Predict(test_x);

  std::vector<double> scores, day_pred, day_true, train_days;
  std::vector<int> labels;
  for (std::size_t k = 0; k < split.test.size(); ++k) {
    const auto& y = data[split.test[k]].target;
    scores.push_back(preds[k].p_denial);
    labels.push_back(y.y0);
    day_pred.push_back(preds[k].response_days);
    day_true.push_back(y.y3);
  }
  for (std::size_t i : split.train) train_days.push_back(data[i].target.y3);

  eval::SplitMetrics metrics =
      eval::ScoreSplit(split.index, scores, labels, day_pred, day_true, train_days);
  return SplitRun{split,           std::move(vocab),        std::move(test_x),
                  std::move(preds), std::move(result.trace), metrics,
                  std::move(result.network)};
}

eval::MetricsReport EvaluateVariant(const std::vector<ingest::LabeledClaim>& data,
                                    const ingest::DenialCodeSet& denial_set,
                                    const ExperimentOptions& options,
                                    const std::function<void(const SplitRun&)>& on_split) {
  std::vector<Date> dates;
  dates.reserve(data.size());
  for (const auto& d : data) dates.push_back(d.claim.submission_date);
  const auto splits = eval::TimeSeriesSplits(dates, options.k_splits);

  eval::MetricsReport report;
  report.model = model::VariantName(options.variant);
  for (const auto& split : splits) {
    if (options.last_split_only && split.index != options.k_splits) continue;
    SplitRun run = RunSplit(data, split, denial_set, options);
    report.splits.push_back(run.metrics);
    if (on_split) on_split(run);
  }
  report.Finalize();
  return report;
}

std::vector<eval::MetricsReport> Bench(const std::vector<ingest::LabeledClaim>& data,
                                       const ingest::DenialCodeSet& denial_set,
                                       const ExperimentOptions& options) {
  std::vector<eval::MetricsReport> reports;
  for (model::Variant v : model::kAllVariants) {
    ExperimentOptions o = options;
    o.variant = v;
    reports.push_back(EvaluateVariant(data, denial_set, o));
  }
  return reports;
}

}  // namespace claimnet::pipeline
