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

#ifndef CLAIMNET_TESTS_SUPPORT_FIXTURES_H_
#define CLAIMNET_TESTS_SUPPORT_FIXTURES_H_

#include <sstream>
#include <string>
#include <vector>

#include "claimnet/featurize.h"
#include "claimnet/ingest.h"
#include "claimnet/rng.h"
#include "claimnet/synth.h"

namespace claimnet::testing {

inline ingest::ClaimRecord MakeClaim(std::string pcn = "PCN1",
                                     std::string submitted = "2019-01-01") {
  ingest::ClaimRecord c;
  c.patient_control_number = std::move(pcn);
  c.payer_id = "PYR01";
  c.payer_state = "CA";
  c.subscriber_gender = "F";
  c.relationship_code = "18";
  c.subscriber_age = 34;
  c.patient_age = 34;
  c.submission_date = ParseDate(submitted);
  c.service_start_date = AddDays(c.submission_date, -3);
  c.service_end_date = AddDays(c.submission_date, -1);
  c.total_charge = 123456;
  c.procedures = {"P001", "P001", "P002"};
  c.diagnoses = {"D001"};
  return c;
}

inline ingest::RemittanceRecord MakeRemit(std::string pcn, std::string date,
                                          std::vector<std::string> claim_carcs = {},
                                          std::vector<std::string> service_carcs = {}) {
  ingest::RemittanceRecord r;
  r.patient_control_number = std::move(pcn);
  r.remit_date = ParseDate(date);
  r.claim_level_carcs = std::move(claim_carcs);
  r.service_level_carcs = std::move(service_carcs);
  return r;
}

inline const char* kClaimLine =
    R"({"pcn":"A1","payer_id":"PYR01","payer_state":"CA","subscriber_gender":"F",)"
    R"("relationship_code":"18","subscriber_age":34,"patient_age":34,)"
    R"("service_start":"2019-06-01","service_end":"2019-06-04","submitted":"2019-06-10",)"
    R"("total_charge_cents":123456,"procedures":["P1","P2"],"diagnoses":["D1"]})";

// A few synthetic claims with random targets over `classes` reason classes.
struct RandomBatch {
  featurize::Vocabulary vocab;
  std::vector<featurize::ClaimVector> x;
  std::vector<ingest::TargetVector> y;

  std::vector<const featurize::ClaimVector*> xs() const {
    std::vector<const featurize::ClaimVector*> out;
    for (const auto& v : x) out.push_back(&v);
    return out;
  }
  std::vector<const ingest::TargetVector*> ys() const {
    std::vector<const ingest::TargetVector*> out;
    for (const auto& v : y) out.push_back(&v);
    return out;
  }
};

inline RandomBatch MakeRandomBatch(std::size_t n, std::uint64_t seed, std::size_t classes) {
  synth::SynthConfig cfg;
  cfg.n_claims = 200;
  cfg.n_procedures = 12;
  cfg.n_diagnoses = 15;
  cfg.seed = seed;
  const auto out = synth::Generate(cfg);
  RandomBatch rb{featurize::BuildVocab(out.claims, {1, 1, 1}), {}, {}};
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    rb.x.push_back(featurize::Vectorize(out.claims[rng.Below(out.claims.size())], rb.vocab));
    ingest::TargetVector t;
    t.y0 = static_cast<int>(rng.Below(2));
    for (auto* dist : {&t.y1, &t.y2}) {
      double s = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        dist->push_back(rng.Uniform(0.05, 1.0));
        s += dist->back();
      }
      for (double& v : *dist) v /= s;
    }
    t.y3 = static_cast<int>(rng.Below(40));
    rb.y.push_back(t);
  }
  return rb;
}

}  // namespace claimnet::testing

#endif  // CLAIMNET_TESTS_SUPPORT_FIXTURES_H_
