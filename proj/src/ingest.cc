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
#include <map>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace claimnet::ingest {

using nlohmann::json;

namespace {

struct KeySpec {
  const char* key;
  const char* field;
};

// JSON key -> record field name, in schema order.
constexpr KeySpec kClaimKeys[] = {
    {"pcn", "patient_control_number"},
    {"payer_id", "payer_id"},
    {"payer_state", "payer_state"},
    {"subscriber_gender", "subscriber_gender"},
    {"relationship_code", "relationship_code"},
    {"subscriber_age", "subscriber_age"},
    {"patient_age", "patient_age"},
    {"service_start", "service_start_date"},
    {"service_end", "service_end_date"},
    {"submitted", "submission_date"},
    {"total_charge_cents", "total_charge"},
    {"procedures", "procedures"},
    {"diagnoses", "diagnoses"},
};

constexpr KeySpec kRemitKeys[] = {
    {"pcn", "patient_control_number"},
    {"remit_date", "remit_date"},
    {"claim_carcs", "claim_level_carcs"},
    {"service_carcs", "service_level_carcs"},
};

// Reads one JSONL line and checks the key set against `keys`.
template <std::size_t N>
class LineReader {
 public:
  LineReader(const std::string& text, std::size_t line_no,
             const KeySpec (&keys)[N])
      : line_no_(line_no), keys_(keys) {
    try {
      obj_ = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, "<line>", fmt::format("invalid JSON: {}", e.what()));
    }
    if (!obj_.is_object()) {
      throw ParseError(line_no, "<line>", "expected a JSON object");
    }
    for (const auto& item : obj_.items()) {
      bool known = false;
      for (const auto& entry : keys_) known = known || item.key() == entry.key;
      if (!known) {
        throw ParseError(line_no, item.key(),
                         fmt::format("unexpected key '{}'", item.key()));
      }
    }
  }

  const json& Get(const char* key) const {
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) {
      Fail(key, fmt::format("missing key '{}'", key));
    }
    return *it;
  }

  std::string String(const char* key, bool non_empty = false) const {
    const json& v = Get(key);
    if (!v.is_string()) Fail(key, "expected a string");
    std::string s = v.get<std::string>();
    if (non_empty && s.empty()) Fail(key, "must be non-empty");
    return s;
  }

  std::int64_t Integer(const char* key) const {
    const json& v = Get(key);
    if (!v.is_number_integer()) Fail(key, "expected an integer");
    return v.get<std::int64_t>();
  }

  Date DateValue(const char* key) const {
    const std::string s = String(key);
    try {
      return ParseDate(s);
    } catch (const Error& e) {
      Fail(key, e.what());
    }
  }

  std::vector<std::string> StringList(const char* key) const {
    const json& v = Get(key);
    if (!v.is_array()) Fail(key, "expected an array of strings");
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& item : v) {
      if (!item.is_string()) Fail(key, "expected an array of strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  [[noreturn]] void Fail(const char* key, const std::string& message) const {
    throw ParseError(line_no_, FieldName(key), message);
  }

 private:
  std::string FieldName(const char* key) const {
    for (const auto& entry : keys_) {
      if (std::string_view(entry.key) == key) return entry.field;
    }
    return key;
  }

  json obj_;
  std::size_t line_no_;
  const KeySpec (&keys_)[N];
};

bool IsBlank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

template <typename Fn>
void ForEachLine(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    fn(line, line_no);
  }
}

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

DenialCodeSet::DenialCodeSet(std::set<std::string> codes, std::string label)
    : codes_(std::move(codes)), label_(std::move(label)) {
  if (codes_.empty()) throw Error("denial code set must not be empty");
  if (codes_.count("no_denial")) {
    throw Error("'no_denial' is reserved and cannot be a denial code");
  }
}

DenialCodeSet DenialCodeSet::Parse(std::istream& in, std::string label) {
  std::set<std::string> codes;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (!line.empty()) codes.insert(line);
  }
  return DenialCodeSet(std::move(codes), std::move(label));
}

std::size_t DenialCodeSet::class_index(const std::string& code) const {
  const auto it = codes_.find(code);
  if (it == codes_.end()) return no_denial_index();
  return static_cast<std::size_t>(std::distance(codes_.begin(), it));
}

std::vector<std::string> DenialCodeSet::class_names() const {
  std::vector<std::string> names(codes_.begin(), codes_.end());
  names.push_back("no_denial");
  return names;
}

std::vector<ClaimRecord> ParseClaims(std::istream& in) {
  std::vector<ClaimRecord> claims;
  ForEachLine(in, [&](const std::string& text, std::size_t line_no) {
    LineReader reader(text, line_no, kClaimKeys);
    ClaimRecord c;
    c.patient_control_number = reader.String("pcn", /*non_empty=*/true);
    c.payer_id = reader.String("payer_id");
    c.payer_state = reader.String("payer_state");
    c.subscriber_gender = reader.String("subscriber_gender");
    c.relationship_code = reader.String("relationship_code");
    c.subscriber_age = static_cast<int>(reader.Integer("subscriber_age"));
    c.patient_age = static_cast<int>(reader.Integer("patient_age"));
    c.service_start_date = reader.DateValue("service_start");
    c.service_end_date = reader.DateValue("service_end");
    c.submission_date = reader.DateValue("submitted");
    c.total_charge = reader.Integer("total_charge_cents");
    c.procedures = reader.StringList("procedures");
    c.diagnoses = reader.StringList("diagnoses");

    if (c.subscriber_age < 0) reader.Fail("subscriber_age", "must be >= 0");
    if (c.patient_age < 0) reader.Fail("patient_age", "must be >= 0");
    if (c.service_end_date < c.service_start_date) {
      reader.Fail("service_end", "service_end_date precedes service_start_date");
    }
    if (c.submission_date < c.service_start_date) {
      reader.Fail("submitted", "submission_date precedes service_start_date");
    }
    if (c.total_charge < 0) reader.Fail("total_charge_cents", "must be >= 0");
    claims.push_back(std::move(c));
  });
  return claims;
}

std::vector<RemittanceRecord> ParseRemits(std::istream& in) {
  std::vector<RemittanceRecord> remits;
  ForEachLine(in, [&](const std::string& text, std::size_t line_no) {
    LineReader reader(text, line_no, kRemitKeys);
    RemittanceRecord r;
    r.patient_control_number = reader.String("pcn", /*non_empty=*/true);
    r.remit_date = reader.DateValue("remit_date");
    r.claim_level_carcs = reader.StringList("claim_carcs");
    r.service_level_carcs = reader.StringList("service_carcs");
    remits.push_back(std::move(r));
  });
  return remits;
}

void WriteClaims(std::ostream& out, const std::vector<ClaimRecord>& claims) {
  for (const auto& c : claims) {
    json obj = json::object();
    obj["pcn"] = c.patient_control_number;
    obj["payer_id"] = c.payer_id;
    obj["payer_state"] = c.payer_state;
    obj["subscriber_gender"] = c.subscriber_gender;
    obj["relationship_code"] = c.relationship_code;
    obj["subscriber_age"] = c.subscriber_age;
    obj["patient_age"] = c.patient_age;
    obj["service_start"] = FormatDate(c.service_start_date);
    obj["service_end"] = FormatDate(c.service_end_date);
    obj["submitted"] = FormatDate(c.submission_date);
    obj["total_charge_cents"] = c.total_charge;
    obj["procedures"] = c.procedures;
    obj["diagnoses"] = c.diagnoses;
    out << obj.dump() << '\n';
  }
}

void WriteRemits(std::ostream& out,
                 const std::vector<RemittanceRecord>& remits) {
  for (const auto& r : remits) {
    json obj = json::object();
    obj["pcn"] = r.patient_control_number;
    obj["remit_date"] = FormatDate(r.remit_date);
    obj["claim_carcs"] = r.claim_level_carcs;
    obj["service_carcs"] = r.service_level_carcs;
    out << obj.dump() << '\n';
  }
}

std::vector<double> ReasonDistribution(const std::vector<std::string>& carcs,
                                       const DenialCodeSet& denial_set) {
  std::vector<double> dist(denial_set.num_classes(), 0.0);
  std::size_t hits = 0;
  for (const auto& code : carcs) {
    if (denial_set.contains(code)) {
      dist[denial_set.class_index(code)] += 1.0;
      ++hits;
    }
  }
  if (hits == 0) {
    dist[denial_set.no_denial_index()] = 1.0;
  } else {
    for (double& v : dist) v /= static_cast<double>(hits);
  }
  return dist;
}

LabelResult JoinAndLabel(const std::vector<ClaimRecord>& claims,
                         const std::vector<RemittanceRecord>& remits,
                         const DenialCodeSet& denial_set) {
  // Earliest remittance per PCN. Same-day responses are ordered by their code
  // lists so the choice does not depend on input order.
  std::unordered_map<std::string, const RemittanceRecord*> first;
  for (const auto& r : remits) {
    auto [it, inserted] = first.emplace(r.patient_control_number, &r);
    if (inserted) continue;
    const RemittanceRecord& cur = *it->second;
    if (std::tie(r.remit_date, r.claim_level_carcs, r.service_level_carcs) <
        std::tie(cur.remit_date, cur.claim_level_carcs, cur.service_level_carcs)) {
      it->second = &r;
    }
  }

  LabelResult result;
  for (const auto& claim : claims) {
    const auto it = first.find(claim.patient_control_number);
    if (it == first.end()) {
      ++result.excluded_no_remit;
      continue;
    }
    const RemittanceRecord& remit = *it->second;
    const int days = DaysBetween(claim.submission_date, remit.remit_date);
    if (days < 0) {
      result.rejected.push_back(fmt::format(
          "pcn {}: remit_date {} precedes submission_date {}",
          claim.patient_control_number, FormatDate(remit.remit_date),
          FormatDate(claim.submission_date)));
      continue;
    }

    LabeledClaim labeled;
    labeled.claim = claim;
    labeled.remit_date = remit.remit_date;
    TargetVector& t = labeled.target;
    const auto in_set = [&](const std::string& c) { return denial_set.contains(c); };
    t.y0 = std::any_of(remit.claim_level_carcs.begin(),
                       remit.claim_level_carcs.end(), in_set) ||
                   std::any_of(remit.service_level_carcs.begin(),
                               remit.service_level_carcs.end(), in_set)
               ? 1
               : 0;
    t.y1 = ReasonDistribution(remit.claim_level_carcs, denial_set);
    t.y2 = ReasonDistribution(remit.service_level_carcs, denial_set);
    t.y3 = days;
    result.labeled.push_back(std::move(labeled));
  }
  return result;
}

}  // namespace claimnet::ingest
