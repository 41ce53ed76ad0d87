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

#ifndef CLAIMNET_INGEST_H_
#define CLAIMNET_INGEST_H_

#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include "claimnet/common.h"

namespace claimnet::ingest {

// One submitted claim (the fields a claim submission carries that the model
// consumes). Charges are in integer cents.
struct ClaimRecord {
  std::string patient_control_number;
  std::string payer_id;
  std::string payer_state;
  std::string subscriber_gender;
  std::string relationship_code;
  int subscriber_age = 0;
  int patient_age = 0;
  Date service_start_date;
  Date service_end_date;
  Date submission_date;
  std::int64_t total_charge = 0;
  std::vector<std::string> procedures;
  std::vector<std::string> diagnoses;
};

// First payer response for a claim.
struct RemittanceRecord {
  std::string patient_control_number;
  Date remit_date;
  std::vector<std::string> claim_level_carcs;
  std::vector<std::string> service_level_carcs;
};

// Reason codes that mark a claim as denied.
class DenialCodeSet {
 public:
  DenialCodeSet(std::set<std::string> codes, std::string label);

  // One code per line; blank lines and '#' comments ignored.
  static DenialCodeSet Parse(std::istream& in, std::string label = "");

  const std::set<std::string>& codes() const { return codes_; }
  const std::string& label() const { return label_; }
  bool contains(const std::string& code) const { return codes_.count(code) > 0; }

  // Reason-code class count including the trailing no-denial class.
  std::size_t num_classes() const { return codes_.size() + 1; }
  // Class index of `code`, or the no-denial index when absent.
  std::size_t class_index(const std::string& code) const;
  std::size_t no_denial_index() const { return codes_.size(); }
  // Class names in index order; the last is "no_denial".
  std::vector<std::string> class_names() const;

 private:
  std::set<std::string> codes_;
  std::string label_;
};

struct TargetVector {
  int y0 = 0;
  std::vector<double> y1;  // claim-level reason-code distribution
  std::vector<double> y2;  // service-level reason-code distribution
  int y3 = 0;              // days from submission to first remittance
};

struct LabeledClaim {
  ClaimRecord claim;
  TargetVector target;
  Date remit_date;
};

struct LabelResult {
  std::vector<LabeledClaim> labeled;
  // Claims without any matching remittance.
  std::size_t excluded_no_remit = 0;
  // One line per claim rejected because its remittance predates submission.
  std::vector<std::string> rejected;
};

std::vector<ClaimRecord> ParseClaims(std::istream& in);
std::vector<RemittanceRecord> ParseRemits(std::istream& in);

// Writes records in the same JSONL layout ParseClaims/ParseRemits accept.
void WriteClaims(std::ostream& out, const std::vector<ClaimRecord>& claims);
void WriteRemits(std::ostream& out,
                 const std::vector<RemittanceRecord>& remits);

// Builds the reason-code distribution for one level: relative frequencies of
// in-set codes, or one-hot on no-denial when no in-set code appears.
std::vector<double> ReasonDistribution(const std::vector<std::string>& carcs,
                                       const DenialCodeSet& denial_set);

// Joins claims to their earliest remittance and derives targets. Output
// order follows `claims`.
LabelResult JoinAndLabel(const std::vector<ClaimRecord>& claims,
                         const std::vector<RemittanceRecord>& remits,
                         const DenialCodeSet& denial_set);

}  // namespace claimnet::ingest

#endif  // CLAIMNET_INGEST_H_
