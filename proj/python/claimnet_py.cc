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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "claimnet/app.h"
#include "claimnet/eval.h"
#include "claimnet/explain.h"
#include "claimnet/synth.h"

namespace py = pybind11;

namespace {

int RunCli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"claimnet"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return claimnet::cli::Run(static_cast<int>(argv.size()), argv.data());
}

py::dict GenerateCorpus(std::size_t n_claims, double denial_rate, int rules,
                        double rule_probability, double noise, std::uint64_t seed) {
  const auto cfg = claimnet::synth::PlantedConfig(n_claims, denial_rate, rules,
                                                  rule_probability, noise, seed);
  const auto out = claimnet::synth::Generate(cfg);
  py::list triggers;
  for (const auto& r : cfg.rules) triggers.append(py::make_tuple(r.trigger.front(), r.carc));
  py::dict d;
  d["claims"] = out.ClaimsJsonl();
  d["remits"] = out.RemitsJsonl();
  d["truth"] = out.TruthJsonl();
  d["denial_codes"] = out.DenialCodesText();
  d["rules"] = triggers;
  d["expected_denial_rate"] = claimnet::synth::ExpectedDenialRate(cfg).value_or(-1.0);
  return d;
}

py::tuple PrMetrics(const std::vector<double>& scores, const std::vector<int>& labels,
                    double target) {
  const auto curve = claimnet::eval::PrCurve(scores, labels);
  return py::make_tuple(claimnet::eval::RecallAtPrecision(curve, target),
                        claimnet::eval::PrAuc(curve));
}

py::list Splits(const std::vector<std::string>& dates, int k) {
  std::vector<claimnet::Date> parsed;
  for (const auto& s : dates) parsed.push_back(claimnet::ParseDate(s));
  py::list out;
  for (const auto& s : claimnet::eval::TimeSeriesSplits(parsed, k)) {
    out.append(py::make_tuple(s.train, s.test));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_claimnet, m) {
  m.doc() = "Payer response prediction from claims data";
  py::register_exception<claimnet::Error>(m, "ClaimnetError", PyExc_ValueError);

  m.def("run", &RunCli, py::arg("args"),
        "Runs the command-line interface in-process; returns the exit status.");
  m.def("generate_corpus", &GenerateCorpus, py::arg("n_claims") = 2000,
        py::arg("denial_rate") = 0.15, py::arg("rules") = 2, py::arg("rule_probability") = 1.0,
        py::arg("noise") = 0.0, py::arg("seed") = 7,
        "Synthetic claims, remittances and truth log as JSONL text.");
  m.def("pr_metrics", &PrMetrics, py::arg("scores"), py::arg("labels"),
        py::arg("target_precision") = 0.95,
        "(recall at the target precision, non-interpolated PR-AUC)");
  m.def("time_series_splits", &Splits, py::arg("dates"), py::arg("k") = 3,
        "Expanding-window (train, test) index lists over ISO dates.");
  m.def("normalize_saliency",
        [](const std::vector<double>& raw) { return claimnet::explain::NormalizeSaliency(raw); },
        py::arg("raw"));
  m.def("mean_absolute_error",
        [](const std::vector<double>& p, const std::vector<double>& t) {
          return claimnet::eval::MeanAbsoluteError(p, t);
        },
        py::arg("predictions"), py::arg("truths"));
  m.def("relative_gain", &claimnet::eval::RelativeGain, py::arg("candidate"),
        py::arg("baseline"));
}
