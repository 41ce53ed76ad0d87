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

#include "claimnet/eval.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace claimnet::eval {

std::vector<CVSplit> TimeSeriesSplits(std::span<const Date> dates, int k) {
  if (k < 1) throw Error("split count must be >= 1");
  const std::size_t n = dates.size();
  const std::size_t folds = static_cast<std::size_t>(k) + 1;
  if (n < folds) {
    throw Error(fmt::format("{} records cannot form {} chronological folds", n, folds));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dates[a] < dates[b]; });

  // Positions p where a fold may start: the date changes between p-1 and p.
  std::vector<std::size_t> cuts;
  for (std::size_t p = 1; p < n; ++p) {
    if (dates[order[p - 1]] < dates[order[p]]) cuts.push_back(p);
  }
  if (cuts.size() < folds - 1) {
    throw Error(fmt::format("{} distinct dates cannot form {} chronological folds",
                            cuts.size() + 1, folds));
  }

  // Nominal fold starts; the first n % folds folds get one extra record.
  const std::size_t base = n / folds, extra = n % folds;
  std::vector<std::size_t> starts = {0};
  std::size_t lo = 0;  // first admissible index into `cuts`
  std::size_t pos = 0;
  for (std::size_t f = 0; f + 1 < folds; ++f) {
    pos += base + (f < extra ? 1 : 0);
    const std::size_t hi = cuts.size() - (folds - 2 - f);  // exclusive
    // Nearest admissible cut to the nominal start; later cut wins a tie.
    std::size_t best = lo;
    for (std::size_t c = lo; c < hi; ++c) {
      const auto dist = [&](std::size_t idx) {
        return cuts[idx] > pos ? cuts[idx] - pos : pos - cuts[idx];
      };
      if (dist(c) < dist(best) || (dist(c) == dist(best) && cuts[c] > cuts[best])) best = c;
      if (cuts[c] > pos && dist(c) > dist(best)) break;
    }
    starts.push_back(cuts[best]);
    lo = best + 1;
  }
  starts.push_back(n);

  std::vector<CVSplit> splits;
  for (int i = 1; i <= k; ++i) {
    CVSplit s;
    s.index = i;
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(starts[i]));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(starts[i]),
                  order.begin() + static_cast<std::ptrdiff_t>(starts[i + 1]));
    splits.push_back(std::move(s));
  }
  return splits;
}

std::vector<PRPoint> PrCurve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(fmt::format("{} scores but {} labels", scores.size(), labels.size()));
  }
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0) throw Error("precision-recall curve needs at least one positive");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<PRPoint> curve;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (labels[order[i]]) {
      ++tp;
    } else {
      ++fp;
    }
    const bool last_of_group =
        i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]];
    if (!last_of_group) continue;
    PRPoint p;
    p.threshold = scores[order[i]];
    p.tp = tp;
    p.fp = fp;
    p.fn = positives - tp;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = static_cast<double>(tp) / static_cast<double>(positives);
    curve.push_back(p);
  }
  return curve;
}

double RecallAtPrecision(std::span<const PRPoint> curve, double target) {
  double best = 0.0;
  for (const auto& p : curve) {
    if (p.precision >= target) best = std::max(best, p.recall);
  }
  return best;
}

double PrAuc(std::span<const PRPoint> curve) {
  if (curve.empty()) throw Error("empty precision-recall curve");
  double area = 0.0, prev_recall = 0.0;
  for (const auto& p : curve) {
    area += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return area;
}

double MeanAbsoluteError(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.empty()) throw Error("mae of an empty set");
  if (predictions.size() != truths.size()) {
    throw Error(fmt::format("{} predictions but {} truths", predictions.size(), truths.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) sum += std::abs(predictions[i] - truths[i]);
  return sum / static_cast<double>(truths.size());
}

double AverageBaselineMae(std::span<const double> train_truths,
                          std::span<const double> test_truths) {
  if (train_truths.empty() || test_truths.empty()) throw Error("baseline mae of an empty set");
  const double mean = std::accumulate(train_truths.begin(), train_truths.end(), 0.0) /
                      static_cast<double>(train_truths.size());
  const std::vector<double> preds(test_truths.size(), mean);
  return MeanAbsoluteError(preds, test_truths);
}

double RelativeGain(double candidate, double baseline) {
  if (!(baseline > 0.0)) throw Error("relative gain needs a positive baseline");
  return 100.0 * (candidate - baseline) / baseline;
}

double RelativeReduction(double candidate, double baseline) {
  if (!(baseline > 0.0)) throw Error("relative reduction needs a positive baseline");
  return 100.0 * (1.0 - candidate / baseline);
}

MeanSd Summarize(std::span<const double> values) {
  MeanSd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

void MetricsReport::Finalize() {
  std::vector<double> r, a, m, b, d;
  for (const auto& s : splits) {
    r.push_back(s.recall_at_95);
    a.push_back(s.pr_auc);
    m.push_back(s.mae);
    b.push_back(s.baseline_mae);
    d.push_back(s.denial_rate);
  }
  recall_at_95 = Summarize(r);
  pr_auc = Summarize(a);
  mae = Summarize(m);
  baseline_mae = Summarize(b);
  denial_rate = Summarize(d).mean;
}

SplitMetrics ScoreSplit(int split, std::span<const double> scores,
                        std::span<const int> labels, std::span<const double> day_predictions,
                        std::span<const double> day_truths,
                        std::span<const double> train_day_truths) {
  SplitMetrics s;
  s.split = split;
  s.test_size = scores.size();
  s.train_size = train_day_truths.size();
  const auto curve = PrCurve(scores, labels);
  s.recall_at_95 = RecallAtPrecision(curve, 0.95);
  s.pr_auc = PrAuc(curve);
  s.mae = MeanAbsoluteError(day_predictions, day_truths);
  s.baseline_mae = AverageBaselineMae(train_day_truths, day_truths);
  s.denial_rate = static_cast<double>(std::count(labels.begin(), labels.end(), 1)) /
                  static_cast<double>(labels.size());
  return s;
}

void WriteReportsJson(std::ostream& out, std::span<const MetricsReport> reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json splits = nlohmann::json::array();
    for (const auto& s : r.splits) {
      splits.push_back({{"split", s.split},
                        {"recall_at_95_precision", s.recall_at_95},
                        {"pr_auc", s.pr_auc},
                        {"mae", s.mae},
                        {"baseline_mae", s.baseline_mae},
                        {"denial_rate", s.denial_rate},
                        {"train_size", s.train_size},
                        {"test_size", s.test_size}});
    }
    const auto ms = [](const MeanSd& v) {
      return nlohmann::json{{"mean", v.mean}, {"sd", v.sd}};
    };
    arr.push_back({{"model", r.model},
                   {"splits", std::move(splits)},
                   {"recall_at_95_precision", ms(r.recall_at_95)},
                   {"pr_auc", ms(r.pr_auc)},
                   {"mae", ms(r.mae)},
                   {"baseline_mae", ms(r.baseline_mae)},
                   {"denial_rate", r.denial_rate}});
  }
  out << arr.dump(2) << '\n';
}

void WriteReportsCsv(std::ostream& out, std::span<const MetricsReport> reports) {
  out << "model,split,recall95,pr_auc,mae\n";
  for (const auto& r : reports) {
    for (const auto& s : r.splits) {
      out << fmt::format("{},{},{:.6f},{:.6f},{:.6f}\n", r.model, s.split, s.recall_at_95,
                         s.pr_auc, s.mae);
    }
    out << fmt::format("{},mean,{:.6f},{:.6f},{:.6f}\n", r.model, r.recall_at_95.mean,
                       r.pr_auc.mean, r.mae.mean);
    out << fmt::format("{},sd,{:.6f},{:.6f},{:.6f}\n", r.model, r.recall_at_95.sd,
                       r.pr_auc.sd, r.mae.sd);
  }
}

}  // namespace claimnet::eval
