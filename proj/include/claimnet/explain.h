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

#ifndef CLAIMNET_EXPLAIN_H_
#define CLAIMNET_EXPLAIN_H_

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "claimnet/featurize.h"
#include "claimnet/model.h"

namespace claimnet::explain {

struct FieldScore {
  std::size_t index = 0;
  std::string field_name;
  char category = 'o';  // 'c', 'd' or 'o'
  double raw_gradient = 0.0;  // |d p_denial / d x_j|
  double score = 0.0;         // raw / max raw, in [0, 1]
};

struct SuspiciousnessReport {
  std::vector<FieldScore> fields;  // one per input index, in (c, d, o) order
  double threshold = 0.8;
  std::vector<std::size_t> flagged;  // indices with score >= threshold
  double p_denial = 0.0;
};

// Divides magnitudes by their maximum; all zeros stay zero.
std::vector<double> NormalizeSaliency(std::span<const double> raw_magnitudes);

// One eval-mode forward and backward pass from p_denial to the dense input.
SuspiciousnessReport Suspiciousness(model::Network& net, const featurize::ClaimVector& x,
                                    double threshold = 0.8);

// Builds the report from precomputed signed input gradients.
SuspiciousnessReport BuildReport(std::span<const double> input_gradient,
                                 const std::vector<std::string>& field_names,
                                 std::array<std::size_t, 3> segment_dims, double p_denial,
                                 double threshold);

// Fields by descending score, ties by ascending index, at most k.
std::vector<FieldScore> TopK(const SuspiciousnessReport& report, std::size_t k);

// CSV: index,field_name,category,score
void WriteSaliencyCsv(std::ostream& out, const SuspiciousnessReport& report);
void WriteSaliencyJson(std::ostream& out, const SuspiciousnessReport& report,
                       std::size_t top_k = 5);

}  // namespace claimnet::explain

#endif  // CLAIMNET_EXPLAIN_H_
