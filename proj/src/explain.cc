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

#include "claimnet/explain.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace claimnet::explain {

std::vector<double> NormalizeSaliency(std::span<const double> raw_magnitudes) {
  double mx = 0.0;
  for (double v : raw_magnitudes) mx = std::max(mx, v);
  std::vector<double> out(raw_magnitudes.size(), 0.0);
  if (mx <= 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = raw_magnitudes[i] / mx;
  return out;
}

SuspiciousnessReport BuildReport(std::span<const double> input_gradient,
                                 const std::vector<std::string>& field_names,
                                 std::array<std::size_t, 3> segment_dims, double p_denial,
                                 double threshold) {
  const std::size_t total = segment_dims[0] + segment_dims[1] + segment_dims[2];
  if (input_gradient.size() != total || field_names.size() != total) {
    throw ShapeError(fmt::format("saliency: {} gradients, {} names, {} inputs",
                                 input_gradient.size(), field_names.size(), total));
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(fmt::format("flag threshold {} outside (0, 1]", threshold));
  }
  std::vector<double> raw(total);
  for (std::size_t j = 0; j < total; ++j) raw[j] = std::abs(input_gradient[j]);
  const std::vector<double> scores = NormalizeSaliency(raw);

  SuspiciousnessReport report;
  report.threshold = threshold;
  report.p_denial = p_denial;
  report.fields.reserve(total);
  std::size_t segment = 0, seg_end = segment_dims[0];
  for (std::size_t j = 0; j < total; ++j) {
    while (j >= seg_end) seg_end += segment_dims[++segment];
    FieldScore f;
    f.index = j;
    f.field_name = field_names[j];
    f.category = featurize::CategoryCode(featurize::kCategories[segment]);
    f.raw_gradient = raw[j];
    f.score = scores[j];
    if (f.score >= threshold) report.flagged.push_back(j);
    report.fields.push_back(std::move(f));
  }
  return report;
}

SuspiciousnessReport Suspiciousness(model::Network& net, const featurize::ClaimVector& x,
                                    double threshold) {
  if (!x.field_names) throw Error("claim vector carries no field names");
  const bool was_training = net.training();
  net.SetTraining(false);
  SuspiciousnessReport report;
  try {
    const featurize::ClaimVector* batch[] = {&x};
    auto fwd = net.Run(batch, /*track_input_grad=*/true);
    fwd.graph.Backward(fwd.p_denial);
    const diffkit::Tensor grad = fwd.InputGradient();
    report = BuildReport(grad.values(), *x.field_names, fwd.input_dims,
                         fwd.graph.value(fwd.p_denial)[0], threshold);
  } catch (...) {
    net.SetTraining(was_training);
    throw;
  }
  net.SetTraining(was_training);
  return report;
}

std::vector<FieldScore> TopK(const SuspiciousnessReport& report, std::size_t k) {
  if (k < 1) throw Error("top-k needs k >= 1");
  std::vector<FieldScore> sorted = report.fields;
  std::stable_sort(sorted.begin(), sorted.end(), [](const FieldScore& a, const FieldScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  if (sorted.size() > k) sorted.resize(k);
  return sorted;
}

void WriteSaliencyCsv(std::ostream& out, const SuspiciousnessReport& report) {
  out << "index,field_name,category,score\n";
  for (const auto& f : report.fields) {
    std::string name = f.field_name;
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : name) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      name = quoted + "\"";
    }
    out << fmt::format("{},{},{},{:.8f}\n", f.index, name, f.category, f.score);
  }
}

void WriteSaliencyJson(std::ostream& out, const SuspiciousnessReport& report,
                       std::size_t top_k) {
  nlohmann::json flagged = nlohmann::json::array();
  for (std::size_t j : report.flagged) {
    const auto& f = report.fields[j];
    flagged.push_back({{"index", f.index},
                       {"field_name", f.field_name},
                       {"category", std::string(1, f.category)},
                       {"score", f.score}});
  }
  nlohmann::json top = nlohmann::json::array();
  if (!report.fields.empty()) {
    for (const auto& f : TopK(report, top_k)) {
      top.push_back({{"index", f.index},
                     {"field_name", f.field_name},
                     {"category", std::string(1, f.category)},
                     {"score", f.score},
                     {"raw_gradient", f.raw_gradient}});
    }
  }
  nlohmann::json obj = {{"p_denial", report.p_denial},
                        {"threshold", report.threshold},
                        {"flagged", std::move(flagged)},
                        {"top", std::move(top)}};
  out << obj.dump(2) << '\n';
}

}  // namespace claimnet::explain
