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

#include <nlohmann/json.hpp>

#include "claimnet/featurize.h"
#include "doctest.h"

namespace claimnet::synth {

TEST_CASE("generation is deterministic in the seed") {
  SynthConfig cfg = PlantedConfig(300, 0.15, 2, 1.0, 0.05, 9);
  const auto a = Generate(cfg), b = Generate(cfg);
  CHECK(a.ClaimsJsonl() == b.ClaimsJsonl());
  CHECK(a.RemitsJsonl() == b.RemitsJsonl());
  CHECK(a.TruthJsonl() == b.TruthJsonl());
  cfg.seed = 10;
  CHECK(Generate(cfg).ClaimsJsonl() != a.ClaimsJsonl());
}

TEST_CASE("generated records round-trip through ingest") {
  const auto out = Generate(PlantedConfig(200, 0.15, 2, 1.0, 0.0, 3));
  std::istringstream claims(out.ClaimsJsonl()), remits(out.RemitsJsonl());
  const auto parsed_claims = ingest::ParseClaims(claims);
  const auto parsed_remits = ingest::ParseRemits(remits);
  REQUIRE(parsed_claims.size() == out.claims.size());
  REQUIRE(parsed_remits.size() == out.remits.size());
  std::ostringstream again;
  ingest::WriteClaims(again, parsed_claims);
  CHECK(again.str() == out.ClaimsJsonl());
  for (const auto& c : parsed_claims) {
    CHECK(c.service_start_date <= c.service_end_date);
    CHECK(c.service_end_date <= c.submission_date);
    CHECK(!c.procedures.empty());
  }
}

TEST_CASE("a certain rule always emits its CARC and truth records it") {
  const auto cfg = PlantedConfig(1000, 0.15, 2, 1.0, 0.0, 4);
  const auto out = Generate(cfg);
  std::map<std::string, const ingest::RemittanceRecord*> first;
  for (const auto& r : out.remits) first.emplace(r.patient_control_number, &r);
  for (std::size_t i = 0; i < out.claims.size(); ++i) {
    const auto fields = featurize::ClaimFieldNames(out.claims[i]);
    const auto* remit = first.at(out.claims[i].patient_control_number);
    for (std::size_t r = 0; r < cfg.rules.size(); ++r) {
      const auto& rule = cfg.rules[r];
      const bool present =
          std::find(fields.begin(), fields.end(), rule.trigger[0]) != fields.end();
      const auto& carcs = rule.level == Level::kClaim ? remit->claim_level_carcs
                                                      : remit->service_level_carcs;
      const bool emitted = std::find(carcs.begin(), carcs.end(), rule.carc) != carcs.end();
      CHECK(present == emitted);
      const auto& firings = out.truth[i].firings;
      const bool logged = std::any_of(firings.begin(), firings.end(),
                                      [&](const RuleFiring& f) { return f.rule == static_cast<int>(r); });
      CHECK(present == logged);
    }
  }
}

TEST_CASE("planted corpus hits the target denial rate") {
  const auto cfg = PlantedConfig(5000, 0.15, 2, 1.0, 0.0, 7);
  const auto out = Generate(cfg);
  const auto labels = ingest::JoinAndLabel(out.claims, out.remits, out.denial_set());
  std::size_t denied = 0;
  for (const auto& l : labels.labeled) denied += l.target.y0;
  const double rate = static_cast<double>(denied) / static_cast<double>(labels.labeled.size());
  CHECK(std::abs(rate - 0.15) <= 0.02);
}

TEST_CASE("expected denial rate agrees with simulation within three sigma") {
  struct Case {
    int rules;
    double prob, noise;
  };
  for (const Case c : {Case{1, 1.0, 0.0}, Case{2, 0.7, 0.0}, Case{3, 0.5, 0.1}}) {
    CAPTURE(c.rules);
    const auto cfg = PlantedConfig(6000, 0.2, c.rules, c.prob, c.noise, 100 + c.rules);
    const double expected = *ExpectedDenialRate(cfg);
    const auto out = Generate(cfg);
    std::size_t denied = 0;
    for (const auto& t : out.truth) denied += !t.firings.empty();
    const double n = static_cast<double>(out.truth.size());
    const double sigma = std::sqrt(expected * (1 - expected) / n);
    CHECK(std::abs(denied / n - expected) <= 3 * sigma);
  }
}

TEST_CASE("containment probability matches a hand computation") {
  SynthConfig cfg;
  cfg.n_procedures = 2;
  cfg.zipf_exponent = 1.0;
  cfg.min_procedures = 1;
  cfg.max_procedures = 2;
  // p(P001) = 2/3; one draw: 2/3, two draws: 1 - 1/9.
  CHECK(ContainmentProbability(cfg, {1}) == doctest::Approx((2.0 / 3 + 8.0 / 9) / 2));
  CHECK(ContainmentProbability(cfg, {1, 2}) == doctest::Approx(1.0));
}

TEST_CASE("expected rate needs single-procedure triggers") {
  SynthConfig cfg;
  cfg.rules = {{{"payer_id=PYR01"}, "50", Level::kClaim, 1.0}};
  CHECK_FALSE(ExpectedDenialRate(cfg).has_value());
}

TEST_CASE("the rule-aware oracle classifier is exact") {
  const auto cfg = PlantedConfig(2000, 0.15, 2, 1.0, 0.0, 8);
  const auto out = Generate(cfg);
  const auto labels = ingest::JoinAndLabel(out.claims, out.remits, out.denial_set());
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& l : labels.labeled) {
    const auto fields = featurize::ClaimFieldNames(l.claim);
    bool predicted = false;
    for (const auto& rule : cfg.rules) {
      predicted |= std::find(fields.begin(), fields.end(), rule.trigger[0]) != fields.end();
    }
    tp += predicted && l.target.y0;
    fp += predicted && !l.target.y0;
    fn += !predicted && l.target.y0;
  }
  REQUIRE(tp > 0);
  CHECK(fp == 0);
  CHECK(fn == 0);
}

TEST_CASE("truth log lines are valid json with one line per claim") {
  const auto out = Generate(PlantedConfig(100, 0.3, 2, 1.0, 0.2, 5));
  std::istringstream in(out.TruthJsonl());
  std::string line;
  std::size_t n = 0, noise = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["pcn"] == out.claims[n].patient_control_number);
    for (const auto& f : j["firings"]) {
      if (f["rule"] == -1) ++noise;
      CHECK((f["level"] == "claim" || f["level"] == "service"));
    }
    ++n;
  }
  CHECK(n == 100);
  CHECK(noise > 0);
  CHECK(out.DenialCodesText().rfind("# ", 0) == 0);
}

TEST_CASE("invalid configurations are rejected") {
  SynthConfig cfg;
  cfg.n_claims = 0;
  CHECK_THROWS_AS(Generate(cfg), Error);
  cfg = {};
  cfg.background_noise = 1.0;
  CHECK_THROWS_AS(Generate(cfg), Error);
  cfg = {};
  cfg.rules = {{{"proc:P001"}, "50", Level::kClaim, 0.0}};
  CHECK_THROWS_AS(Generate(cfg), Error);
  cfg.rules = {{{"proc:P001"}, "45", Level::kClaim, 1.0}};
  CHECK_THROWS_AS(Generate(cfg), Error);
  CHECK_THROWS_AS(PlantedConfig(10, 0.1, 4, 1.0, 0.0, 1), Error);
}

}  // namespace claimnet::synth
