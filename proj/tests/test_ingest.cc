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

#include "claimnet/ingest.h"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "claimnet/rng.h"
#include "doctest.h"
#include "support/fixtures.h"

namespace claimnet::ingest {
namespace {

DenialCodeSet Codes(std::set<std::string> codes) { return DenialCodeSet(std::move(codes), "t"); }

std::string Replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

ParseError ClaimError(const std::string& text) {
  std::istringstream in(text);
  try {
    ParseClaims(in);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected a parse error");
  return ParseError(0, "", "");
}

}  // namespace

TEST_CASE("empty streams parse to empty lists") {
  std::istringstream a(""), b("\n  \n");
  CHECK(ParseClaims(a).empty());
  CHECK(ParseRemits(b).empty());
}

TEST_CASE("a well-formed claim line parses field by field") {
  std::istringstream in(testing::kClaimLine);
  const auto claims = ParseClaims(in);
  REQUIRE(claims.size() == 1);
  const auto& c = claims[0];
  CHECK(c.patient_control_number == "A1");
  CHECK(c.total_charge == 123456);
  CHECK(c.subscriber_age == 34);
  CHECK(FormatDate(c.service_end_date) == "2019-06-04");
  CHECK(c.procedures == std::vector<std::string>{"P1", "P2"});
}

TEST_CASE("claims round-trip through the writer") {
  std::vector<ClaimRecord> claims = {testing::MakeClaim("X", "2019-03-03"),
                                     testing::MakeClaim("Y", "2019-04-04")};
  claims[1].procedures.clear();
  std::ostringstream out;
  WriteClaims(out, claims);
  std::istringstream in(out.str());
  const auto back = ParseClaims(in);
  REQUIRE(back.size() == 2);
  CHECK(back[1].procedures.empty());
  CHECK(back[0].diagnoses == claims[0].diagnoses);
  CHECK(back[0].submission_date == claims[0].submission_date);
  std::ostringstream again;
  WriteClaims(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("claim invariant violations name the field and line") {
  const std::string good = testing::kClaimLine;
  auto e = ClaimError(good + "\n" +
                      Replace(good, R"("service_end":"2019-06-04")", R"("service_end":"2019-05-30")"));
  CHECK(e.line() == 2);
  CHECK(e.field() == "service_end_date");

  e = ClaimError(Replace(good, R"("submitted":"2019-06-10")", R"("submitted":"2019-05-01")"));
  CHECK(e.field() == "submission_date");

  e = ClaimError(Replace(good, R"("total_charge_cents":123456)", R"("total_charge_cents":-1)"));
  CHECK(e.field() == "total_charge");

  e = ClaimError(Replace(good, R"("pcn":"A1",)", ""));
  CHECK(e.field() == "patient_control_number");

  e = ClaimError(Replace(good, R"("pcn":"A1")", R"("pcn":"")"));
  CHECK(e.field() == "patient_control_number");

  e = ClaimError(Replace(good, R"("service_start":"2019-06-01")", R"("service_start":"2019-06-31")"));
  CHECK(e.field() == "service_start_date");

  e = ClaimError(Replace(good, R"("patient_age":34)", R"("patient_age":"34")"));
  CHECK(e.field() == "patient_age");

  e = ClaimError(Replace(good, R"("pcn":"A1")", R"("pcn":"A1","extra":1)"));
  CHECK(e.field() == "extra");

  e = ClaimError("{not json");
  CHECK(e.line() == 1);
}

TEST_CASE("remittance lines keep code order") {
  std::istringstream in(
      R"({"pcn":"A1","remit_date":"2019-06-20","claim_carcs":["50","97"],"service_carcs":[]})");
  const auto remits = ParseRemits(in);
  REQUIRE(remits.size() == 1);
  CHECK(remits[0].claim_level_carcs == std::vector<std::string>{"50", "97"});
  CHECK(remits[0].service_level_carcs.empty());

  std::istringstream missing(R"({"remit_date":"2019-06-20","claim_carcs":[],"service_carcs":[]})");
  try {
    ParseRemits(missing);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field() == "patient_control_number");
  }
}

TEST_CASE("denial code files allow comments and reserve no_denial") {
  std::istringstream in("# codes\n50\n 97 # contractual\n\n50\n");
  const auto set = DenialCodeSet::Parse(in, "sysA");
  CHECK(set.codes() == std::set<std::string>{"50", "97"});
  CHECK(set.num_classes() == 3);
  CHECK(set.class_index("50") == 0);
  CHECK(set.class_index("97") == 1);
  CHECK(set.class_index("45") == set.no_denial_index());
  CHECK(set.class_names().back() == "no_denial");
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(DenialCodeSet::Parse(empty), Error);
  CHECK_THROWS_AS(Codes({"no_denial"}), Error);
}

TEST_CASE("labels follow the membership and frequency rules") {
  const auto codes = Codes({"50", "97"});
  const std::vector<ClaimRecord> claims = {testing::MakeClaim("A", "2019-01-01"),
                                           testing::MakeClaim("B", "2019-01-01"),
                                           testing::MakeClaim("C", "2019-01-01")};
  const std::vector<RemittanceRecord> remits = {
      testing::MakeRemit("A", "2019-01-15", {"97", "97", "50"}, {}),
      testing::MakeRemit("B", "2019-01-20", {"45"}, {"50"}),
      testing::MakeRemit("C", "2019-01-03", {"45"}, {})};
  const auto r = JoinAndLabel(claims, remits, codes);
  REQUIRE(r.labeled.size() == 3);
  const auto& a = r.labeled[0].target;
  CHECK(a.y0 == 1);
  CHECK(a.y1[0] == doctest::Approx(1.0 / 3.0));
  CHECK(a.y1[1] == doctest::Approx(2.0 / 3.0));
  CHECK(a.y1[2] == 0.0);
  CHECK(a.y2 == std::vector<double>{0, 0, 1});
  CHECK(a.y3 == 14);
  const auto& b = r.labeled[1].target;
  CHECK(b.y0 == 1);
  CHECK(b.y1 == std::vector<double>{0, 0, 1});
  CHECK(b.y2 == std::vector<double>{1, 0, 0});
  const auto& c = r.labeled[2].target;
  CHECK(c.y0 == 0);
  CHECK(c.y1 == std::vector<double>{0, 0, 1});
  CHECK(c.y3 == 2);
}

TEST_CASE("join uses the earliest remittance and reports exclusions") {
  const auto codes = Codes({"50"});
  const std::vector<ClaimRecord> claims = {testing::MakeClaim("A", "2019-01-01"),
                                           testing::MakeClaim("B", "2019-01-01"),
                                           testing::MakeClaim("C", "2019-02-01")};
  const std::vector<RemittanceRecord> remits = {
      testing::MakeRemit("A", "2019-01-30", {"50"}), testing::MakeRemit("A", "2019-01-10"),
      testing::MakeRemit("C", "2019-01-20"), testing::MakeRemit("Z", "2019-01-20")};
  const auto r = JoinAndLabel(claims, remits, codes);
  REQUIRE(r.labeled.size() == 1);
  CHECK(r.labeled[0].target.y0 == 0);
  CHECK(r.labeled[0].target.y3 == 9);
  CHECK(FormatDate(r.labeled[0].remit_date) == "2019-01-10");
  CHECK(r.excluded_no_remit == 1);
  REQUIRE(r.rejected.size() == 1);
  CHECK(r.rejected[0].find("C") != std::string::npos);
}

TEST_CASE("property: targets are distributions and y0=0 means no-denial one-hot") {
  Rng rng(5);
  const std::vector<std::string> pool = {"50", "97", "96", "45", "16", "CO"};
  const auto codes = Codes({"50", "97", "96"});
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> cl, sv;
    for (int i = rng.Between(0, 6); i > 0; --i) cl.push_back(pool[rng.Below(pool.size())]);
    for (int i = rng.Between(0, 6); i > 0; --i) sv.push_back(pool[rng.Below(pool.size())]);
    const auto r = JoinAndLabel({testing::MakeClaim("A")},
                                {testing::MakeRemit("A", "2019-01-05", cl, sv)}, codes);
    REQUIRE(r.labeled.size() == 1);
    const auto& t = r.labeled[0].target;
    for (const auto* d : {&t.y1, &t.y2}) {
      CHECK(std::abs(std::accumulate(d->begin(), d->end(), 0.0) - 1.0) < 1e-9);
      CHECK(std::all_of(d->begin(), d->end(), [](double v) { return v >= 0.0; }));
    }
    if (t.y0 == 0) {
      CHECK(t.y1.back() == 1.0);
      CHECK(t.y2.back() == 1.0);
    }
  }
}

TEST_CASE("property: permuting remittances does not change labels") {
  Rng rng(11);
  const auto codes = Codes({"50", "97"});
  std::vector<ClaimRecord> claims;
  std::vector<RemittanceRecord> remits;
  for (int i = 0; i < 40; ++i) {
    const std::string pcn = "C" + std::to_string(i);
    claims.push_back(testing::MakeClaim(pcn, "2019-01-01"));
    for (int k = rng.Between(1, 3); k > 0; --k) {
      const std::string day = "2019-01-" + std::to_string(10 + rng.Between(0, 3));
      remits.push_back(testing::MakeRemit(pcn, day, {rng.Bernoulli(0.5) ? "50" : "45"},
                                          {rng.Bernoulli(0.3) ? "97" : "1"}));
    }
  }
  const auto ref = JoinAndLabel(claims, remits, codes);
  for (int trial = 0; trial < 20; ++trial) {
    rng.Shuffle(remits);
    const auto got = JoinAndLabel(claims, remits, codes);
    REQUIRE(got.labeled.size() == ref.labeled.size());
    for (std::size_t i = 0; i < got.labeled.size(); ++i) {
      CHECK(got.labeled[i].target.y0 == ref.labeled[i].target.y0);
      CHECK(got.labeled[i].target.y1 == ref.labeled[i].target.y1);
      CHECK(got.labeled[i].target.y2 == ref.labeled[i].target.y2);
      CHECK(got.labeled[i].target.y3 == ref.labeled[i].target.y3);
    }
  }
}

}  // namespace claimnet::ingest
