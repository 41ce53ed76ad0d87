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

#include <sstream>

#include "claimnet/eval.h"
#include "claimnet/explain.h"
#include "claimnet/featurize.h"
#include "claimnet/ingest.h"
#include "claimnet/model.h"
#include "claimnet/pipeline.h"
#include "claimnet/synth.h"
#include "claimnet/train.h"
#include "doctest.h"

namespace claimnet {
namespace {

struct Corpus {
  synth::SynthConfig config;
  std::vector<ingest::LabeledClaim> labeled;
  ingest::DenialCodeSet denial;
};

// Generates a corpus and reads it back through the text formats.
Corpus LoadCorpus(std::size_t n, std::uint64_t seed) {
  const auto cfg = synth::PlantedConfig(n, 0.2, 2, 1.0, 0.0, seed);
  const auto out = synth::Generate(cfg);
  std::istringstream claims(out.ClaimsJsonl()), remits(out.RemitsJsonl()),
      codes(out.DenialCodesText());
  auto denial = ingest::DenialCodeSet::Parse(codes, "denial_codes.txt");
  auto result = ingest::JoinAndLabel(ingest::ParseClaims(claims), ingest::ParseRemits(remits),
                                     denial);
  return {cfg, std::move(result.labeled), std::move(denial)};
}

pipeline::ExperimentOptions SmallOptions(model::Variant v) {
  pipeline::ExperimentOptions o;
  o.variant = v;
  o.context_dim = 16;
  o.embed_dim = 12;
  o.train.epochs = 15;
  o.train.batch_size = 64;
  o.train.learning_rate = 0.01;
  o.thresholds = {1, 1, 1};
  return o;
}

}  // namespace

TEST_CASE("text files to cross-validated metrics") {
  const auto corpus = LoadCorpus(1200, 31);
  REQUIRE(corpus.labeled.size() == 1200);
  std::vector<pipeline::SplitRun> runs;
  const auto report = pipeline::EvaluateVariant(
      corpus.labeled, corpus.denial, SmallOptions(model::Variant::kNoGates),
      [&](const pipeline::SplitRun& r) { runs.push_back(r); });
  REQUIRE(report.splits.size() == 3);
  REQUIRE(runs.size() == 3);
  for (const auto& s : report.splits) {
    CHECK(s.pr_auc >= 0.0);
    CHECK(s.pr_auc <= 1.0);
    CHECK(s.recall_at_95 >= 0.0);
    CHECK(s.mae >= 0.0);
  }
  // Planted single-procedure rules are easy for the additive fusion model.
  CHECK(report.splits.back().pr_auc > 0.9);
  // Later splits train on strictly more data.
  CHECK(runs[0].split.train.size() < runs[2].split.train.size());
}

TEST_CASE("zeroing the top suspicious field lowers mean denial probability") {
  const auto corpus = LoadCorpus(1500, 33);
  auto options = SmallOptions(model::Variant::kDeepClaim2);
  options.last_split_only = true;
  std::vector<pipeline::SplitRun> runs;
  pipeline::EvaluateVariant(corpus.labeled, corpus.denial, options,
                            [&](const pipeline::SplitRun& r) { runs.push_back(r); });
  REQUIRE(runs.size() == 1);
  auto& run = runs.front();
  double before = 0.0, after = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < run.test_x.size(); ++k) {
    if (!corpus.labeled[run.split.test[k]].target.y0) continue;
    const auto report = explain::Suspiciousness(run.network, run.test_x[k], 0.8);
    std::size_t j = explain::TopK(report, 1).front().index;
    auto x = run.test_x[k];
    featurize::SparseVector* part = &x.procedures;
    if (j >= x.procedures.dim) {
      j -= x.procedures.dim;
      part = &x.diagnoses;
      if (j >= x.diagnoses.dim) {
        j -= x.diagnoses.dim;
        part = &x.other;
      }
    }
    for (std::size_t e = 0; e < part->nnz(); ++e) {
      if (part->index[e] == j) part->value[e] = 0.0;
    }
    run.network.SetTraining(false);
    const std::vector<featurize::ClaimVector> pair = {run.test_x[k], x};
    const auto p = run.network.Predict(pair);
    before += p[0].p_denial;
    after += p[1].p_denial;
    ++n;
  }
  REQUIRE(n > 20);
  MESSAGE("mean p_denial " << before / n << " -> " << after / n << " over " << n << " claims");
  CHECK(after < before);
}

TEST_CASE("features and checkpoints round-trip to identical predictions") {
  const auto corpus = LoadCorpus(400, 32);
  std::vector<ingest::ClaimRecord> claims;
  for (const auto& l : corpus.labeled) claims.push_back(l.claim);
  const auto vocab = featurize::BuildVocab(claims, {1, 1, 1});
  std::vector<featurize::FeatureRow> rows;
  for (const auto& l : corpus.labeled) {
    rows.push_back({l.claim.patient_control_number, l.claim.submission_date,
                    featurize::Vectorize(l.claim, vocab), l.target});
  }
  std::stringstream feat_text, vocab_text;
  featurize::WriteFeatures(feat_text, rows);
  vocab.Save(vocab_text);
  const auto vocab2 = featurize::Vocabulary::Load(vocab_text);
  const auto rows2 = featurize::ReadFeatures(feat_text, vocab2);
  REQUIRE(rows2.size() == rows.size());
  CHECK(vocab2.Hash() == vocab.Hash());

  const auto options = SmallOptions(model::Variant::kDeepClaim2);
  auto cfg = pipeline::MakeModelConfig(options, vocab2, corpus.denial);
  std::vector<train::Example> examples;
  for (const auto& r : rows2) examples.push_back({&r.x, &r.y});
  train::TrainConfig tc = options.train;
  tc.epochs = 3;
  auto result = train::Train(examples, cfg, tc);

  std::stringstream ck;
  result.network.Save(ck, vocab2.Hash());
  auto reloaded = model::Network::Load(ck, vocab2.Hash());
  std::vector<featurize::ClaimVector> xs;
  for (const auto& r : rows) xs.push_back(r.x);
  result.network.SetTraining(false);
  reloaded.SetTraining(false);
  const auto a = result.network.Predict(xs), b = reloaded.Predict(xs);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].p_denial == b[i].p_denial);
    CHECK(a[i].response_days == b[i].response_days);
  }

  const auto report = explain::Suspiciousness(reloaded, xs[0], 0.8);
  CHECK(report.fields.size() == vocab.total_size());
  CHECK(!report.flagged.empty());

  std::stringstream ck2;
  result.network.Save(ck2, vocab2.Hash());
  CHECK_THROWS_AS(model::Network::Load(ck2, vocab2.Hash() + 1), Error);
}

}  // namespace claimnet
