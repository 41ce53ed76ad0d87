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

#ifndef CLAIMNET_FEATURIZE_H_
#define CLAIMNET_FEATURIZE_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "claimnet/ingest.h"

namespace claimnet::featurize {

// The three input contexts, in concatenation order.
enum class Category : int { kProcedure = 0, kDiagnosis = 1, kOther = 2 };
inline constexpr int kNumCategories = 3;
inline constexpr std::array<Category, kNumCategories> kCategories = {
    Category::kProcedure, Category::kDiagnosis, Category::kOther};

const char* CategoryName(Category c);  // "procedure", "diagnosis", "other"
char CategoryCode(Category c);         // 'c', 'd', 'o'

// Sparse vector with strictly increasing indices.
struct SparseVector {
  std::size_t dim = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const { return index.size(); }
  std::vector<double> Dense() const;
  double Sum() const;
};

// Per-category minimum corpus counts. Tokens seen fewer times fold to OOV.
struct Thresholds {
  int procedure = 500;
  int diagnosis = 400;
  int other = 1;

  int For(Category c) const;
};

class Vocabulary {
 public:
  static constexpr const char* kOovToken = "<OOV>";
  static constexpr std::uint32_t kOovIndex = 0;

  // Builds an unfrozen vocabulary holding only the OOV entries.
  explicit Vocabulary(Thresholds thresholds = {});

  std::size_t size(Category c) const { return tokens_[Idx(c)].size(); }
  std::size_t total_size() const;
  const std::vector<std::string>& tokens(Category c) const { return tokens_[Idx(c)]; }
  const Thresholds& thresholds() const { return thresholds_; }
  bool frozen() const { return frozen_; }

  // Appends a token; rejected once frozen. Returns its index.
  std::uint32_t Add(Category c, const std::string& token);
  void Freeze() { frozen_ = true; }

  // Index of `token`, or kOovIndex.
  std::uint32_t Lookup(Category c, const std::string& token) const;

  // Human-readable field name for every index of the concatenated input.
  const std::vector<std::string>& field_names() const;
  std::shared_ptr<const std::vector<std::string>> shared_field_names() const;

  // Stable fingerprint of the token lists and thresholds.
  std::uint64_t Hash() const;

  void Save(std::ostream& out) const;
  static Vocabulary Load(std::istream& in);

 private:
  static std::size_t Idx(Category c) { return static_cast<std::size_t>(c); }

  Thresholds thresholds_;
  std::array<std::vector<std::string>, kNumCategories> tokens_;
  std::array<std::unordered_map<std::string, std::uint32_t>, kNumCategories> index_;
  bool frozen_ = false;
  mutable std::shared_ptr<const std::vector<std::string>> field_names_;
};

// The sparse claim input (x_c, x_d, x_o).
struct ClaimVector {
  SparseVector procedures;  // relative frequencies
  SparseVector diagnoses;   // relative frequencies
  SparseVector other;       // binary indicators
  std::shared_ptr<const std::vector<std::string>> field_names;

  const SparseVector& part(Category c) const;
  std::size_t total_dim() const {
    return procedures.dim + diagnoses.dim + other.dim;
  }
  std::vector<double> Dense() const;
};

// Name of the field carrying a procedure/diagnosis code or other token.
std::string FieldName(Category c, const std::string& token);

// "th=..", "hu=..", "te=..", "on=.." digit tokens of the dollar amount.
std::array<std::string, 4> QuantizeCharge(std::int64_t amount_cents);

// Single-valued tokens of a claim, ordered by field key.
std::vector<std::string> TokenizeOther(const ingest::ClaimRecord& claim);

// Every field name present in a claim (procedures, diagnoses, other tokens),
// before OOV folding.
std::vector<std::string> ClaimFieldNames(const ingest::ClaimRecord& claim);

// Counts tokens and keeps those with count >= threshold. The result is frozen.
Vocabulary BuildVocab(const std::vector<ingest::ClaimRecord>& claims,
                      const Thresholds& thresholds);

ClaimVector Vectorize(const ingest::ClaimRecord& claim, const Vocabulary& vocab);

// One line of the sparse feature corpus.
struct FeatureRow {
  std::string pcn;
  Date submission_date;
  ClaimVector x;
  ingest::TargetVector y;
};

// JSONL: {"pcn","submitted","c":[[i,v]..],"d":[[i,v]..],"o":[i..],
//         "y0","y1","y2","y3"}. Dimensions come from the vocabulary.
void WriteFeatures(std::ostream& out, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> ReadFeatures(std::istream& in, const Vocabulary& vocab);

}  // namespace claimnet::featurize

#endif  // CLAIMNET_FEATURIZE_H_
