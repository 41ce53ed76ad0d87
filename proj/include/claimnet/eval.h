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

#ifndef CLAIMNET_EVAL_H_
#define CLAIMNET_EVAL_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "claimnet/common.h"

namespace claimnet::eval {

// Expanding-window split: train on folds 1..i, test on fold i+1.
struct CVSplit {
  int index = 0;  // 1-based
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Chronological splits over records with the given submission dates.
// Indices refer to positions in `dates`. Records are stably sorted by date
// and cut into k+1 folds whose sizes differ by at most one before tie
// adjustment (earlier folds take the remainder). A fold boundary never
// separates two records with the same date; it moves to the nearest date
// change instead. Throws when fewer than k+1 records or distinct dates exist.
std::vector<CVSplit> TimeSeriesSplits(std::span<const Date> dates, int k = 3);

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// One point per distinct score, thresholds descending; a record is flagged
// when score >= threshold. Requires at least one positive label.
std::vector<PRPoint> PrCurve(std::span<const double> scores, std::span<const int> labels);

// Largest recall among points with precision >= target, 0 when none.
double RecallAtPrecision(std::span<const PRPoint> curve, double target = 0.95);

// Non-interpolated average precision: sum of (R_n - R_{n-1}) * P_n.
double PrAuc(std::span<const PRPoint> curve);

double MeanAbsoluteError(std::span<const double> predictions, std::span<const double> truths);

// MAE of predicting the mean of `train_truths` for every test record.
double AverageBaselineMae(std::span<const double> train_truths,
                          std::span<const double> test_truths);

// 100 * (candidate - baseline) / baseline.
double RelativeGain(double candidate, double baseline);
// 100 * (1 - candidate / baseline), e.g. for error reductions.
double RelativeReduction(double candidate, double baseline);

struct SplitMetrics {
  int split = 0;
  double recall_at_95 = 0.0;
  double pr_auc = 0.0;
  double mae = 0.0;
  double baseline_mae = 0.0;
  double denial_rate = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

// Mean and sample standard deviation (0 for a single value).
MeanSd Summarize(std::span<const double> values);

struct MetricsReport {
  std::string model;
  std::vector<SplitMetrics> splits;
  MeanSd recall_at_95;
  MeanSd pr_auc;
  MeanSd mae;
  MeanSd baseline_mae;
  double denial_rate = 0.0;

  void Finalize();
};

// Metrics of one test fold.
SplitMetrics ScoreSplit(int split, std::span<const double> scores,
                        std::span<const int> labels, std::span<const double> day_predictions,
                        std::span<const double> day_truths,
                        std::span<const double> train_day_truths);

void WriteReportsJson(std::ostream& out, std::span<const MetricsReport> reports);
// Rows: model,split,recall95,pr_auc,mae then "mean" and "sd" rows per model.
void WriteReportsCsv(std::ostream& out, std::span<const MetricsReport> reports);

}  // namespace claimnet::eval

#endif  // CLAIMNET_EVAL_H_
