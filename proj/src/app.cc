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

#include "claimnet/app.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "claimnet/eval.h"
#include "claimnet/explain.h"
#include "claimnet/featurize.h"
#include "claimnet/ingest.h"
#include "claimnet/model.h"
#include "claimnet/pipeline.h"
#include "claimnet/synth.h"
#include "claimnet/train.h"

namespace claimnet::cli {

namespace fs = std::filesystem;

namespace {

bool quiet = false;

template <typename... Args>
void Log(fmt::format_string<Args...> format, Args&&... args) {
  if (!quiet) fmt::print(stderr, format, std::forward<Args>(args)...);
}

struct RunConfig {
  std::string claims, remits, denial_codes, vocab, checkpoint, features;
  std::string out = ".";
  std::uint64_t seed = 7;
  std::string variant = "deepclaim2";
  int k_splits = 3;
  double threshold = 0.8;
  std::size_t top_k = 5;
  std::string pcn;

  // synth
  std::size_t n_claims = 2000;
  double denial_rate = 0.15;
  int n_rules = 2;
  double rule_probability = 1.0;
  double noise = 0.0;
  double response_noise_sd = 2.0;

  // model / training
  std::size_t context_dim = 96;
  std::size_t embed_dim = 94;
  std::vector<double> lambda = {1.0, 1.0, 0.01};
  int epochs = 30;
  std::size_t batch_size = 256;
  double lr = 0.001;

  // vocabulary
  int min_count_proc = 5;
  int min_count_diag = 5;
  int min_count_other = 1;
};

std::ifstream OpenInput(const std::string& path, const char* what) {
  if (path.empty()) throw Error(fmt::format("missing --{} path", what));
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {} file '{}'", what, path));
  return in;
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
}

template <typename Fn>
void WriteWith(const fs::path& path, Fn&& fn) {
  std::ostringstream buf;
  fn(buf);
  WriteText(path, buf.str());
}

ingest::DenialCodeSet LoadDenialSet(const RunConfig& rc) {
  auto in = OpenInput(rc.denial_codes, "denial-codes");
  return ingest::DenialCodeSet::Parse(in, rc.denial_codes);
}

ingest::LabelResult LoadLabeled(const RunConfig& rc, const ingest::DenialCodeSet& denial) {
  auto claims_in = OpenInput(rc.claims, "claims");
  auto remits_in = OpenInput(rc.remits, "remits");
  const auto claims = ingest::ParseClaims(claims_in);
  const auto remits = ingest::ParseRemits(remits_in);
  auto result = ingest::JoinAndLabel(claims, remits, denial);
  for (const auto& msg : result.rejected) Log("rejected: {}\n", msg);
  Log("labeled {} claims ({} without remittance, {} rejected)\n",
             result.labeled.size(), result.excluded_no_remit, result.rejected.size());
  if (result.labeled.empty()) throw Error("no labeled claims");
  return result;
}

featurize::Thresholds ThresholdsOf(const RunConfig& rc) {
  return {rc.min_count_proc, rc.min_count_diag, rc.min_count_other};
}

pipeline::ExperimentOptions OptionsOf(const RunConfig& rc) {
  pipeline::ExperimentOptions o;
  o.variant = model::ParseVariant(rc.variant);
  o.context_dim = rc.context_dim;
  o.embed_dim = rc.embed_dim;
  if (rc.lambda.size() != 3) throw Error("--lambda takes three values");
  o.lambda = {rc.lambda[0], rc.lambda[1], rc.lambda[2]};
  o.train.epochs = rc.epochs;
  o.train.batch_size = rc.batch_size;
  o.train.learning_rate = rc.lr;
  o.thresholds = ThresholdsOf(rc);
  o.k_splits = rc.k_splits;
  o.seed = rc.seed;
  return o;
}

void CmdSynth(const RunConfig& rc) {
  auto cfg = synth::PlantedConfig(rc.n_claims, rc.denial_rate, rc.n_rules,
                                  rc.rule_probability, rc.noise, rc.seed);
  cfg.response.noise_sd = rc.response_noise_sd;
  const auto out = synth::Generate(cfg);
  const fs::path dir(rc.out);
  WriteText(dir / "claims.jsonl", out.ClaimsJsonl());
  WriteText(dir / "remits.jsonl", out.RemitsJsonl());
  WriteText(dir / "truth.jsonl", out.TruthJsonl());
  WriteText(dir / "denial_codes.txt", out.DenialCodesText());
  std::string rules;
  for (const auto& r : cfg.rules) rules += fmt::format(" {}->{}", r.trigger.front(), r.carc);
  Log("wrote {} claims to {} (rules:{}, expected denial rate {:.4f})\n",
             out.claims.size(), dir.string(), rules,
             synth::ExpectedDenialRate(cfg).value_or(-1.0));
}

void CmdLabel(const RunConfig& rc) {
  const auto denial = LoadDenialSet(rc);
  const auto result = LoadLabeled(rc, denial);
  WriteWith(fs::path(rc.out) / "labels.jsonl", [&](std::ostream& os) {
    for (const auto& l : result.labeled) {
      nlohmann::json obj = {{"pcn", l.claim.patient_control_number},
                            {"remit_date", FormatDate(l.remit_date)},
                            {"y0", l.target.y0},
                            {"y1", l.target.y1},
                            {"y2", l.target.y2},
                            {"y3", l.target.y3}};
      os << obj.dump() << '\n';
    }
  });
}

void CmdFeaturize(const RunConfig& rc) {
  const auto denial = LoadDenialSet(rc);
  const auto result = LoadLabeled(rc, denial);
  std::vector<ingest::ClaimRecord> claims;
  for (const auto& l : result.labeled) claims.push_back(l.claim);
  const auto vocab = featurize::BuildVocab(claims, ThresholdsOf(rc));
  std::vector<featurize::FeatureRow> rows;
  for (const auto& l : result.labeled) {
    rows.push_back({l.claim.patient_control_number, l.claim.submission_date,
                    featurize::Vectorize(l.claim, vocab), l.target});
  }
  const fs::path dir(rc.out);
  WriteWith(dir / "vocab.json", [&](std::ostream& os) { vocab.Save(os); });
  WriteWith(dir / "features.jsonl", [&](std::ostream& os) { featurize::WriteFeatures(os, rows); });
  Log("vocabulary sizes (procedure, diagnosis, other) = ({}, {}, {})\n",
             vocab.size(featurize::Category::kProcedure),
             vocab.size(featurize::Category::kDiagnosis), vocab.size(featurize::Category::kOther));
}

featurize::Vocabulary LoadVocab(const RunConfig& rc) {
  auto in = OpenInput(rc.vocab, "vocab");
  return featurize::Vocabulary::Load(in);
}

void CmdTrain(const RunConfig& rc) {
  const auto vocab = LoadVocab(rc);
  auto in = OpenInput(rc.features, "features");
  const auto rows = featurize::ReadFeatures(in, vocab);
  if (rows.empty()) throw Error("no feature rows");
  const auto options = OptionsOf(rc);
  model::ModelConfig cfg = model::ModelConfig::ForVariant(
      options.variant, vocab, rows.front().y.y1.size(), rows.front().y.y2.size());
  cfg.context_dim = options.context_dim;
  cfg.embed_dim = options.embed_dim;
  cfg.lambda = options.lambda;
  cfg.seed = options.seed;
  std::vector<train::Example> examples;
  for (const auto& r : rows) examples.push_back({&r.x, &r.y});
  train::TrainConfig tc = options.train;
  tc.shuffle_seed = options.seed;
  const auto result = train::Train(examples, cfg, tc);
  const fs::path dir(rc.out);
  WriteWith(dir / "checkpoint.json", [&](std::ostream& os) { result.network.Save(os, vocab.Hash()); });
  WriteWith(dir / "loss_trace.csv", [&](std::ostream& os) { train::WriteLossTrace(os, result.trace); });
  if (!result.trace.empty()) {
    Log("trained {} epochs; final total loss {:.6f}\n", result.trace.size(),
               result.trace.back().total);
  }
}

void CmdExplain(const RunConfig& rc) {
  const auto vocab = LoadVocab(rc);
  auto ck = OpenInput(rc.checkpoint, "checkpoint");
  auto net = model::Network::Load(ck, vocab.Hash());
  auto claims_in = OpenInput(rc.claims, "claims");
  const auto claims = ingest::ParseClaims(claims_in);
  if (claims.empty()) throw Error("claims file is empty");
  const ingest::ClaimRecord* target = &claims.front();
  if (!rc.pcn.empty()) {
    target = nullptr;
    for (const auto& c : claims) {
      if (c.patient_control_number == rc.pcn) target = &c;
    }
    if (!target) throw Error(fmt::format("no claim with pcn '{}'", rc.pcn));
  }
  const auto x = featurize::Vectorize(*target, vocab);
  const auto report = explain::Suspiciousness(net, x, rc.threshold);
  const fs::path dir(rc.out);
  WriteWith(dir / "saliency.csv", [&](std::ostream& os) { explain::WriteSaliencyCsv(os, report); });
  WriteWith(dir / "saliency.json",
            [&](std::ostream& os) { explain::WriteSaliencyJson(os, report, rc.top_k); });
  Log("pcn {}: p_denial={:.4f}, {} field(s) flagged at {}\n",
             target->patient_control_number, report.p_denial, report.flagged.size(),
             rc.threshold);
}

void WriteReports(const RunConfig& rc, const std::vector<eval::MetricsReport>& reports) {
  const fs::path dir(rc.out);
  WriteWith(dir / "metrics.json", [&](std::ostream& os) { eval::WriteReportsJson(os, reports); });
  WriteWith(dir / "metrics.csv", [&](std::ostream& os) { eval::WriteReportsCsv(os, reports); });
  for (const auto& r : reports) {
    Log("{}: recall@95%={:.4f} ({:.4f}) pr_auc={:.4f} ({:.4f}) mae={:.4f} ({:.4f})\n",
               r.model, r.recall_at_95.mean, r.recall_at_95.sd, r.pr_auc.mean, r.pr_auc.sd,
               r.mae.mean, r.mae.sd);
  }
}

void CmdEvaluate(const RunConfig& rc) {
  const auto denial = LoadDenialSet(rc);
  const auto data = LoadLabeled(rc, denial).labeled;
  WriteReports(rc, {pipeline::EvaluateVariant(data, denial, OptionsOf(rc))});
}

void CmdBench(const RunConfig& rc) {
  const auto denial = LoadDenialSet(rc);
  const auto data = LoadLabeled(rc, denial).labeled;
  WriteReports(rc, pipeline::Bench(data, denial, OptionsOf(rc)));
}

}  // namespace

int Run(int argc, const char* const* argv) {
  quiet = false;
  CLI::App app{"Payer response prediction from claims data"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");

  RunConfig rc;
  app.add_flag("--quiet", quiet, "Suppress progress messages");
  app.add_option("--claims", rc.claims, "Claims JSONL");
  app.add_option("--remits", rc.remits, "Remittances JSONL");
  app.add_option("--denial-codes", rc.denial_codes, "Denial code list, one per line");
  app.add_option("--vocab", rc.vocab, "Vocabulary JSON");
  app.add_option("--checkpoint", rc.checkpoint, "Model checkpoint JSON");
  app.add_option("--features", rc.features, "Sparse feature JSONL");
  app.add_option("--out", rc.out, "Output directory")->capture_default_str();
  app.add_option("--seed", rc.seed, "Top-level random seed")->capture_default_str();
  app.add_option("--variant", rc.variant,
                 "deepclaim1 | deepclaim2 | no_multipliers | no_gates | baseline_nn")
      ->capture_default_str();
  app.add_option("--k-splits", rc.k_splits, "Time-series CV splits")->capture_default_str();
  app.add_option("--threshold", rc.threshold, "Suspiciousness flag threshold")->capture_default_str();
  app.add_option("--top-k", rc.top_k, "Fields listed in saliency.json")->capture_default_str();
  app.add_option("--pcn", rc.pcn, "Claim to explain (default: first claim)");
  app.add_option("--n-claims", rc.n_claims, "Synthetic claim count")->capture_default_str();
  app.add_option("--denial-rate", rc.denial_rate, "Synthetic target denial rate")->capture_default_str();
  app.add_option("--rules", rc.n_rules, "Synthetic planted rule count (1-3)")->capture_default_str();
  app.add_option("--rule-prob", rc.rule_probability, "Rule firing probability")->capture_default_str();
  app.add_option("--noise", rc.noise, "Background denial noise rate")->capture_default_str();
  app.add_option("--response-noise-sd", rc.response_noise_sd, "Response-day noise sd")
      ->capture_default_str();
  app.add_option("--context-dim", rc.context_dim, "Context vector width")->capture_default_str();
  app.add_option("--embed-dim", rc.embed_dim, "Claim embedding width")->capture_default_str();
  app.add_option("--lambda", rc.lambda, "Loss weights l0 l1 l2")->expected(3)->capture_default_str();
  app.add_option("--epochs", rc.epochs, "Training epochs")->capture_default_str();
  app.add_option("--batch-size", rc.batch_size, "Mini-batch size")->capture_default_str();
  app.add_option("--lr", rc.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--min-count-proc", rc.min_count_proc, "Procedure OOV threshold")->capture_default_str();
  app.add_option("--min-count-diag", rc.min_count_diag, "Diagnosis OOV threshold")->capture_default_str();
  app.add_option("--min-count-other", rc.min_count_other, "Other-token OOV threshold")
      ->capture_default_str();

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with planted rules");
  auto* label_cmd = app.add_subcommand("label", "Join claims and remittances into targets");
  auto* featurize_cmd = app.add_subcommand("featurize", "Build the vocabulary and sparse features");
  auto* train_cmd = app.add_subcommand("train", "Train one model on a feature file");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Time-series cross-validation of one variant");
  auto* explain_cmd = app.add_subcommand("explain", "Per-field suspiciousness of one claim");
  auto* bench_cmd = app.add_subcommand("bench", "Cross-validate all five variants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth_cmd) CmdSynth(rc);
    if (*label_cmd) CmdLabel(rc);
    if (*featurize_cmd) CmdFeaturize(rc);
    if (*train_cmd) CmdTrain(rc);
    if (*evaluate_cmd) CmdEvaluate(rc);
    if (*explain_cmd) CmdExplain(rc);
    if (*bench_cmd) CmdBench(rc);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace claimnet::cli
