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

#ifndef CLAIMNET_SYNTH_H_
#define CLAIMNET_SYNTH_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "claimnet/common.h"
#include "claimnet/ingest.h"

namespace claimnet::synth {

enum class Level { kClaim, kService };

// Emits `carc` at `level` with `probability` when every trigger field is
// present in the claim. Trigger entries use featurize field names, e.g.
// "proc:P004" or "payer_id=PYR02".
struct PlantedRule {
  std::vector<std::string> trigger;
  std::string carc;
  Level level = Level::kClaim;
  double probability = 1.0;
};

// Response days = base + per-payer offset + rounded Gaussian noise, floored
// at zero.
struct ResponseModel {
  int base_days = 10;
  int max_payer_offset = 20;
  double noise_sd = 2.0;
};

struct SynthConfig {
  std::size_t n_claims = 1000;
  std::size_t n_procedures = 60;
  std::size_t n_diagnoses = 120;
  std::size_t n_payers = 8;
  // Token ranks follow p(r) proportional to 1 / r^zipf_exponent.
  double zipf_exponent = 1.1;
  int min_procedures = 1;
  int max_procedures = 4;
  int min_diagnoses = 1;
  int max_diagnoses = 4;
  Date start_date{std::chrono::year{2019}, std::chrono::January, std::chrono::day{1}};
  // Two years, so calendar-month tokens of late test claims were seen in training.
  int span_days = 730;
  std::vector<PlantedRule> rules;
  // Probability of an unexplained denial code on any claim.
  double background_noise = 0.0;
  std::vector<std::string> noise_carcs = {"16", "29"};
  // Probability of a non-denial adjustment code ("45") on a remittance.
  double benign_carc_rate = 0.3;
  // Probability of a second, later remittance for the same claim.
  double duplicate_remit_rate = 0.05;
  // Probability that a claim receives no remittance at all.
  double missing_remit_rate = 0.0;
  ResponseModel response;
  std::uint64_t seed = 7;

  void Validate() const;
};

std::string ProcedureCode(std::size_t rank);  // rank is 1-based
std::string DiagnosisCode(std::size_t rank);
std::string PayerId(std::size_t index);

struct RuleFiring {
  int rule = -1;  // index into SynthConfig::rules, -1 for background noise
  std::string carc;
  Level level = Level::kClaim;
  std::vector<std::string> trigger;
};

struct TruthRecord {
  std::string pcn;
  std::vector<RuleFiring> firings;
};

struct SynthOutput {
  std::vector<ingest::ClaimRecord> claims;
  std::vector<ingest::RemittanceRecord> remits;
  std::vector<TruthRecord> truth;
  // Rule CARCs plus the noise CARCs.
  std::set<std::string> denial_codes;

  ingest::DenialCodeSet denial_set() const;
  std::string ClaimsJsonl() const;
  std::string RemitsJsonl() const;
  std::string TruthJsonl() const;
  std::string DenialCodesText() const;
};

SynthOutput Generate(const SynthConfig& config);

// Probability that a generated claim contains at least one procedure from
// `ranks` (1-based).
double ContainmentProbability(const SynthConfig& config, const std::vector<std::size_t>& ranks);

// Exact expected fraction of denied claims (among claims with a remittance)
// when every rule triggers on a single procedure field; nullopt otherwise.
std::optional<double> ExpectedDenialRate(const SynthConfig& config);

// A corpus with `n_rules` single-procedure rules whose combined firing rate
// is as close as possible to `target_rate`. Rules alternate claim/service
// level and use CARCs "50", "97", "96", "197".
SynthConfig PlantedConfig(std::size_t n_claims, double target_rate, int n_rules,
                          double probability, double background_noise, std::uint64_t seed);

}  // namespace claimnet::synth

#endif  // CLAIMNET_SYNTH_H_
