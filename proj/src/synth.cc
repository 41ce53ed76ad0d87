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

#include "claimnet/synth.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "claimnet/featurize.h"
#include "claimnet/rng.h"

namespace claimnet::synth {

namespace {

constexpr const char* kStates[] = {"CA", "NY", "TX", "WA", "FL", "IL"};
constexpr const char* kBenignCarc = "45";

std::vector<double> ZipfWeights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t r = 1; r <= n; ++r) w[r - 1] = 1.0 / std::pow(static_cast<double>(r), exponent);
  return w;
}

std::vector<double> Cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) c[i] = (s += w[i]);
  return c;
}

std::vector<double> Normalized(std::vector<double> w) {
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

const char* LevelName(Level l) { return l == Level::kClaim ? "claim" : "service"; }

// Rank of the procedure a single-field trigger refers to, or 0.
std::size_t ProcedureRank(const PlantedRule& rule, std::size_t n_procedures) {
  if (rule.trigger.size() != 1) return 0;
  for (std::size_t r = 1; r <= n_procedures; ++r) {
    if (rule.trigger[0] == featurize::FieldName(featurize::Category::kProcedure,
                                                ProcedureCode(r))) {
      return r;
    }
  }
  return 0;
}

// P(every procedure in `ranks` appears) for i.i.d. draws, by
// inclusion-exclusion over the complement events.
double AllPresentProbability(const SynthConfig& c, const std::vector<double>& p,
                             const std::vector<std::size_t>& ranks) {
  const std::size_t m = ranks.size();
  double total = 0.0;
  for (int k = c.min_procedures; k <= c.max_procedures; ++k) {
    double pk = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
      double mass = 0.0;
      int bits = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (mask >> j & 1) {
          mass += p[ranks[j] - 1];
          ++bits;
        }
      }
      pk += (bits % 2 ? -1.0 : 1.0) * std::pow(1.0 - mass, k);
    }
    total += pk;
  }
  return total / static_cast<double>(c.max_procedures - c.min_procedures + 1);
}

}  // namespace

void SynthConfig::Validate() const {
  if (n_claims < 1) throw Error("n_claims must be >= 1");
  if (n_procedures < 1 || n_diagnoses < 1 || n_payers < 1) {
    throw Error("synthetic vocabularies must be non-empty");
  }
  if (min_procedures < 0 || max_procedures < min_procedures || min_diagnoses < 0 ||
      max_diagnoses < min_diagnoses) {
    throw Error("invalid per-claim code count range");
  }
  if (span_days < 1) throw Error("date span must be >= 1 day");
  const auto rate_ok = [](double r) { return r >= 0.0 && r < 1.0; };
  if (!rate_ok(background_noise) || !rate_ok(benign_carc_rate) ||
      !rate_ok(duplicate_remit_rate) || !rate_ok(missing_remit_rate)) {
    throw Error("noise rates must lie in [0, 1)");
  }
  if (background_noise > 0.0 && noise_carcs.empty()) {
    throw Error("background noise needs at least one noise CARC");
  }
  for (const auto& r : rules) {
    if (r.trigger.empty()) throw Error("planted rule needs a non-empty trigger");
    if (!(r.probability > 0.0 && r.probability <= 1.0)) {
      throw Error("rule firing probability must lie in (0, 1]");
    }
    if (r.carc.empty() || r.carc == kBenignCarc) throw Error("invalid rule CARC");
  }
  if (response.noise_sd < 0.0 || response.max_payer_offset < 0) {
    throw Error("invalid response-day model");
  }
}

std::string ProcedureCode(std::size_t rank) { return fmt::format("P{:03d}", rank); }
std::string DiagnosisCode(std::size_t rank) { return fmt::format("D{:03d}", rank); }
std::string PayerId(std::size_t index) { return fmt::format("PYR{:02d}", index); }

ingest::DenialCodeSet SynthOutput::denial_set() const {
  return ingest::DenialCodeSet(denial_codes, "synthetic");
}

std::string SynthOutput::ClaimsJsonl() const {
  std::ostringstream out;
  ingest::WriteClaims(out, claims);
  return out.str();
}

std::string SynthOutput::RemitsJsonl() const {
  std::ostringstream out;
  ingest::WriteRemits(out, remits);
  return out.str();
}

std::string SynthOutput::TruthJsonl() const {
  std::ostringstream out;
  for (const auto& t : truth) {
    nlohmann::json firings = nlohmann::json::array();
    for (const auto& f : t.firings) {
      firings.push_back({{"rule", f.rule},
                         {"carc", f.carc},
                         {"level", LevelName(f.level)},
                         {"trigger", f.trigger}});
    }
    out << nlohmann::json{{"pcn", t.pcn}, {"firings", std::move(firings)}}.dump() << '\n';
  }
  return out.str();
}

std::string SynthOutput::DenialCodesText() const {
  std::string text = "# synthetic denial reason codes\n";
  for (const auto& c : denial_codes) text += c + "\n";
  return text;
}

SynthOutput Generate(const SynthConfig& config) {
  config.Validate();
  Rng rng(config.seed);

  const auto proc_cdf = Cumulative(ZipfWeights(config.n_procedures, config.zipf_exponent));
  const auto diag_cdf = Cumulative(ZipfWeights(config.n_diagnoses, config.zipf_exponent));
  const auto payer_cdf = Cumulative(ZipfWeights(config.n_payers, 0.7));
  const auto gender_cdf = Cumulative({0.50, 0.47, 0.03});
  const char* genders[] = {"F", "M", "U"};
  const auto rel_cdf = Cumulative({0.6, 0.2, 0.15, 0.05});
  const char* relationships[] = {"18", "01", "19", "G8"};

  std::vector<int> payer_offset(config.n_payers);
  for (auto& o : payer_offset) o = rng.Between(0, config.response.max_payer_offset);

  SynthOutput out;
  for (const auto& r : config.rules) out.denial_codes.insert(r.carc);
  if (config.background_noise > 0.0) {
    out.denial_codes.insert(config.noise_carcs.begin(), config.noise_carcs.end());
  }
  if (out.denial_codes.empty()) out.denial_codes.insert(config.noise_carcs.begin(), config.noise_carcs.end());
  if (out.denial_codes.empty()) throw Error("synthetic corpus has no denial codes");

  out.claims.reserve(config.n_claims);
  for (std::size_t i = 0; i < config.n_claims; ++i) {
    ingest::ClaimRecord c;
    c.patient_control_number = fmt::format("PCN{:07d}", i + 1);
    const std::size_t payer = rng.Categorical(payer_cdf);
    c.payer_id = PayerId(payer + 1);
    c.payer_state = kStates[payer % std::size(kStates)];
    c.subscriber_gender = genders[rng.Categorical(gender_cdf)];
    c.relationship_code = relationships[rng.Categorical(rel_cdf)];
    c.subscriber_age = rng.Between(18, 80);
    if (c.relationship_code == "18") {
      c.patient_age = c.subscriber_age;
    } else if (c.relationship_code == "19") {
      c.patient_age = rng.Between(0, std::min(25, c.subscriber_age - 16));
    } else {
      c.patient_age = std::max(18, c.subscriber_age + rng.Between(-6, 6));
    }
    c.submission_date = AddDays(config.start_date, static_cast<int>(rng.Below(
                                                       static_cast<std::uint64_t>(config.span_days))));
    c.service_start_date = AddDays(c.submission_date, -rng.Between(0, 20));
    const int max_len = std::min(3, DaysBetween(c.service_start_date, c.submission_date));
    c.service_end_date = AddDays(c.service_start_date, rng.Between(0, max_len));
    const double dollars = std::exp(5.5 + 1.0 * rng.Normal());
    c.total_charge = static_cast<std::int64_t>(std::llround(dollars * 100.0));
    const int n_proc = rng.Between(config.min_procedures, config.max_procedures);
    for (int k = 0; k < n_proc; ++k) c.procedures.push_back(ProcedureCode(rng.Categorical(proc_cdf) + 1));
    const int n_diag = rng.Between(config.min_diagnoses, config.max_diagnoses);
    for (int k = 0; k < n_diag; ++k) c.diagnoses.push_back(DiagnosisCode(rng.Categorical(diag_cdf) + 1));

    // Rule evaluation draws one uniform per rule so the stream stays aligned.
    const auto fields = featurize::ClaimFieldNames(c);
    TruthRecord truth;
    truth.pcn = c.patient_control_number;
    ingest::RemittanceRecord remit;
    remit.patient_control_number = c.patient_control_number;
    for (std::size_t r = 0; r < config.rules.size(); ++r) {
      const PlantedRule& rule = config.rules[r];
      const double u = rng.Uniform();
      const bool present = std::all_of(rule.trigger.begin(), rule.trigger.end(), [&](const std::string& t) {
        return std::find(fields.begin(), fields.end(), t) != fields.end();
      });
      if (!present || u >= rule.probability) continue;
      (rule.level == Level::kClaim ? remit.claim_level_carcs : remit.service_level_carcs).push_back(rule.carc);
      truth.firings.push_back({static_cast<int>(r), rule.carc, rule.level, rule.trigger});
    }
    const double u_noise = rng.Uniform();
    const std::size_t noise_pick = config.noise_carcs.empty() ? 0 : rng.Below(config.noise_carcs.size());
    const bool noise_claim_level = rng.Bernoulli(0.5);
    if (u_noise < config.background_noise) {
      const std::string& code = config.noise_carcs[noise_pick];
      const Level level = noise_claim_level ? Level::kClaim : Level::kService;
      (level == Level::kClaim ? remit.claim_level_carcs : remit.service_level_carcs).push_back(code);
      truth.firings.push_back({-1, code, level, {}});
    }
    if (rng.Bernoulli(config.benign_carc_rate)) remit.claim_level_carcs.push_back(kBenignCarc);

    const double jitter = std::round(config.response.noise_sd * rng.Normal());
    const int days = std::max(0, config.response.base_days + payer_offset[payer] + static_cast<int>(jitter));
    remit.remit_date = AddDays(c.submission_date, days);

    const bool missing = rng.Bernoulli(config.missing_remit_rate);
    const bool duplicate = rng.Bernoulli(config.duplicate_remit_rate);
    const int later = rng.Between(5, 30);
    if (!missing) {
      out.remits.push_back(remit);
      if (duplicate) {
        ingest::RemittanceRecord second;
        second.patient_control_number = c.patient_control_number;
        second.remit_date = AddDays(remit.remit_date, later);
        second.service_level_carcs.push_back(kBenignCarc);
        out.remits.push_back(std::move(second));
      }
    }
    out.truth.push_back(std::move(truth));
    out.claims.push_back(std::move(c));
  }
  return out;
}

double ContainmentProbability(const SynthConfig& config, const std::vector<std::size_t>& ranks) {
  const auto p = Normalized(ZipfWeights(config.n_procedures, config.zipf_exponent));
  double mass = 0.0;
  for (std::size_t r : ranks) mass += p.at(r - 1);
  double total = 0.0;
  for (int k = config.min_procedures; k <= config.max_procedures; ++k) {
    total += 1.0 - std::pow(1.0 - mass, k);
  }
  return total / static_cast<double>(config.max_procedures - config.min_procedures + 1);
}

std::optional<double> ExpectedDenialRate(const SynthConfig& config) {
  const auto p = Normalized(ZipfWeights(config.n_procedures, config.zipf_exponent));
  std::vector<std::size_t> ranks;
  std::vector<double> probs;
  for (const auto& rule : config.rules) {
    const std::size_t r = ProcedureRank(rule, config.n_procedures);
    if (r == 0) return std::nullopt;
    ranks.push_back(r);
    probs.push_back(rule.probability);
  }
  // E[prod_j (1 - q_j 1[present_j])] = sum_T prod_{j in T}(-q_j) P(all of T present).
  const std::size_t m = ranks.size();
  double no_fire = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    double coef = 1.0;
    std::vector<std::size_t> subset;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask >> j & 1) {
        coef *= -probs[j];
        subset.push_back(ranks[j]);
      }
    }
    // Rules sharing a trigger share presence.
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    no_fire += coef * AllPresentProbability(config, p, subset);
  }
  return 1.0 - no_fire * (1.0 - config.background_noise);
}

SynthConfig PlantedConfig(std::size_t n_claims, double target_rate, int n_rules,
                          double probability, double background_noise, std::uint64_t seed) {
  if (n_rules < 1 || n_rules > 3) throw Error("planted configs support 1 to 3 rules");
  SynthConfig cfg;
  cfg.n_claims = n_claims;
  cfg.seed = seed;
  cfg.background_noise = background_noise;
  const char* carcs[] = {"50", "97", "96", "197"};

  const auto make_rules = [&](const std::vector<std::size_t>& ranks) {
    std::vector<PlantedRule> rules;
    for (std::size_t j = 0; j < ranks.size(); ++j) {
      rules.push_back({{featurize::FieldName(featurize::Category::kProcedure, ProcedureCode(ranks[j]))},
                       carcs[j],
                       j % 2 == 0 ? Level::kClaim : Level::kService,
                       probability});
    }
    return rules;
  };

  // Exhaustive search over rank combinations, skipping the most common code.
  std::vector<std::size_t> best, current;
  double best_err = INFINITY;
  const auto search = [&](auto&& self, std::size_t from) -> void {
    if (current.size() == static_cast<std::size_t>(n_rules)) {
      cfg.rules = make_rules(current);
      const double err = std::abs(*ExpectedDenialRate(cfg) - target_rate);
      if (err < best_err) {
        best_err = err;
        best = current;
      }
      return;
    }
    for (std::size_t r = from; r <= cfg.n_procedures; ++r) {
      current.push_back(r);
      self(self, r + 1);
      current.pop_back();
    }
  };
  search(search, 2);
  cfg.rules = make_rules(best);
  cfg.Validate();
  return cfg;
}

}  // namespace claimnet::synth
