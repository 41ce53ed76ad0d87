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

#include "claimnet/featurize.h"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace claimnet::featurize {

using nlohmann::json;

const char* CategoryName(Category c) {
  switch (c) {
    case Category::kProcedure: return "procedure";
    case Category::kDiagnosis: return "diagnosis";
    case Category::kOther: return "other";
  }
  return "?";
}

char CategoryCode(Category c) {
  switch (c) {
    case Category::kProcedure: return 'c';
    case Category::kDiagnosis: return 'd';
    case Category::kOther: return 'o';
  }
  return '?';
}

std::vector<double> SparseVector::Dense() const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < index.size(); ++k) out[index[k]] = value[k];
  return out;
}

double SparseVector::Sum() const {
  double s = 0.0;
  for (double v : value) s += v;
  return s;
}

int Thresholds::For(Category c) const {
  switch (c) {
    case Category::kProcedure: return procedure;
    case Category::kDiagnosis: return diagnosis;
    case Category::kOther: return other;
  }
  return 1;
}

std::string FieldName(Category c, const std::string& token) {
  switch (c) {
    case Category::kProcedure: return "proc:" + token;
    case Category::kDiagnosis: return "diag:" + token;
    case Category::kOther:
      return token == Vocabulary::kOovToken ? "other:" + token : token;
  }
  return token;
}

Vocabulary::Vocabulary(Thresholds thresholds) : thresholds_(thresholds) {
  for (Category c : kCategories) {
    if (thresholds_.For(c) < 1) {
      throw Error(fmt::format("{} threshold must be >= 1", CategoryName(c)));
    }
    tokens_[Idx(c)].push_back(kOovToken);
    index_[Idx(c)].emplace(kOovToken, kOovIndex);
  }
}

std::size_t Vocabulary::total_size() const {
  std::size_t n = 0;
  for (const auto& t : tokens_) n += t.size();
  return n;
}

std::uint32_t Vocabulary::Add(Category c, const std::string& token) {
  if (frozen_) {
    throw Error(fmt::format("vocabulary is frozen; cannot add '{}'", token));
  }
  auto& idx = index_[Idx(c)];
  const auto it = idx.find(token);
  if (it != idx.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(tokens_[Idx(c)].size());
  tokens_[Idx(c)].push_back(token);
  idx.emplace(token, id);
  field_names_.reset();
  return id;
}

std::uint32_t Vocabulary::Lookup(Category c, const std::string& token) const {
  const auto& idx = index_[Idx(c)];
  const auto it = idx.find(token);
  return it == idx.end() ? kOovIndex : it->second;
}

std::shared_ptr<const std::vector<std::string>> Vocabulary::shared_field_names()
    const {
  if (!field_names_) {
    auto names = std::make_shared<std::vector<std::string>>();
    names->reserve(total_size());
    for (Category c : kCategories) {
      for (const auto& t : tokens_[Idx(c)]) names->push_back(FieldName(c, t));
    }
    field_names_ = std::move(names);
  }
  return field_names_;
}

const std::vector<std::string>& Vocabulary::field_names() const {
  return *shared_field_names();
}

std::uint64_t Vocabulary::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Category c : kCategories) {
    h = Fnv1a64(fmt::format("{}:{}|", CategoryName(c), thresholds_.For(c)), h);
    for (const auto& t : tokens_[Idx(c)]) {
      h = Fnv1a64(t, h);
      h = Fnv1a64(std::string_view("\0", 1), h);
    }
  }
  return h;
}

void Vocabulary::Save(std::ostream& out) const {
  json obj = json::object();
  for (Category c : kCategories) {
    obj[CategoryName(c)] = {{"min_count", thresholds_.For(c)},
                            {"tokens", tokens_[Idx(c)]}};
  }
  out << obj.dump(1) << '\n';
}

Vocabulary Vocabulary::Load(std::istream& in) {
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(fmt::format("vocabulary: {}", e.what()));
  }
  Thresholds th;
  try {
    th.procedure = obj.at("procedure").at("min_count").get<int>();
    th.diagnosis = obj.at("diagnosis").at("min_count").get<int>();
    th.other = obj.at("other").at("min_count").get<int>();
  } catch (const json::exception& e) {
    throw Error(fmt::format("vocabulary: {}", e.what()));
  }
  Vocabulary vocab(th);
  for (Category c : kCategories) {
    const auto tokens = obj.at(CategoryName(c)).at("tokens").get<std::vector<std::string>>();
    if (tokens.empty() || tokens[0] != kOovToken) {
      throw Error(fmt::format("vocabulary: {} tokens must start with {}",
                              CategoryName(c), kOovToken));
    }
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      if (vocab.Add(c, tokens[i]) != i) {
        throw Error(fmt::format("vocabulary: duplicate {} token '{}'",
                                CategoryName(c), tokens[i]));
      }
    }
  }
  vocab.Freeze();
  return vocab;
}

const SparseVector& ClaimVector::part(Category c) const {
  switch (c) {
    case Category::kProcedure: return procedures;
    case Category::kDiagnosis: return diagnoses;
    case Category::kOther: return other;
  }
  return other;
}

std::vector<double> ClaimVector::Dense() const {
  std::vector<double> out;
  out.reserve(total_dim());
  for (Category c : kCategories) {
    const auto d = part(c).Dense();
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

std::array<std::string, 4> QuantizeCharge(std::int64_t amount_cents) {
  if (amount_cents < 0) throw Error("charge amount must be >= 0");
  const std::int64_t d = amount_cents / 100;
  return {fmt::format("th={}", d / 1000), fmt::format("hu={}", d / 100 % 10),
          fmt::format("te={}", d / 10 % 10), fmt::format("on={}", d % 10)};
}

std::vector<std::string> TokenizeOther(const ingest::ClaimRecord& claim) {
  const auto y = [](const Date& d) { return static_cast<int>(d.year()); };
  const auto m = [](const Date& d) { return static_cast<unsigned>(d.month()); };
  const auto dd = [](const Date& d) { return static_cast<unsigned>(d.day()); };

  std::vector<std::string> tokens = {
      "gender=" + claim.subscriber_gender,
      "relationship=" + claim.relationship_code,
      "payer_state=" + claim.payer_state,
      "payer_id=" + claim.payer_id,
      fmt::format("svc_dur_days={}",
                  DaysBetween(claim.service_start_date, claim.service_end_date)),
      fmt::format("subscriber_age={}", claim.subscriber_age),
      fmt::format("patient_age={}", claim.patient_age),
      fmt::format("svc_y={:04d}", y(claim.service_start_date)),
      fmt::format("svc_m={:02d}", m(claim.service_start_date)),
      fmt::format("svc_d={:02d}", dd(claim.service_start_date)),
      fmt::format("sub_y={:04d}", y(claim.submission_date)),
      fmt::format("sub_m={:02d}", m(claim.submission_date)),
      fmt::format("sub_d={:02d}", dd(claim.submission_date)),
  };
  for (auto& t : QuantizeCharge(claim.total_charge)) tokens.push_back(std::move(t));

  const auto key = [](const std::string& t) {
    return std::string_view(t).substr(0, t.find('='));
  };
  std::stable_sort(tokens.begin(), tokens.end(),
                   [&](const std::string& a, const std::string& b) {
                     return key(a) < key(b);
                   });
  return tokens;
}

std::vector<std::string> ClaimFieldNames(const ingest::ClaimRecord& claim) {
  std::vector<std::string> names;
  for (const auto& p : claim.procedures) names.push_back(FieldName(Category::kProcedure, p));
  for (const auto& d : claim.diagnoses) names.push_back(FieldName(Category::kDiagnosis, d));
  for (auto& t : TokenizeOther(claim)) names.push_back(std::move(t));
  return names;
}

Vocabulary BuildVocab(const std::vector<ingest::ClaimRecord>& claims,
                      const Thresholds& thresholds) {
  if (claims.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  Vocabulary vocab(thresholds);

  std::array<std::map<std::string, long>, kNumCategories> counts;
  for (const auto& claim : claims) {
    for (const auto& p : claim.procedures) ++counts[0][p];
    for (const auto& d : claim.diagnoses) ++counts[1][d];
    for (const auto& t : TokenizeOther(claim)) ++counts[2][t];
  }
  for (Category c : kCategories) {
    const long min_count = thresholds.For(c);
    for (const auto& [token, n] : counts[static_cast<int>(c)]) {
      if (n >= min_count && token != Vocabulary::kOovToken) vocab.Add(c, token);
    }
  }
  vocab.Freeze();
  return vocab;
}

namespace {

SparseVector RelativeFrequency(const std::vector<std::string>& codes,
                               Category c, const Vocabulary& vocab) {
  SparseVector v;
  v.dim = vocab.size(c);
  if (codes.empty()) return v;
  std::map<std::uint32_t, int> counts;
  for (const auto& code : codes) ++counts[vocab.Lookup(c, code)];
  const double total = static_cast<double>(codes.size());
  for (const auto& [i, n] : counts) {
    v.index.push_back(i);
    v.value.push_back(n / total);
  }
  return v;
}

}  // namespace

ClaimVector Vectorize(const ingest::ClaimRecord& claim, const Vocabulary& vocab) {
  if (!vocab.frozen()) throw Error("vectorize requires a frozen vocabulary");
  ClaimVector x;
  x.procedures = RelativeFrequency(claim.procedures, Category::kProcedure, vocab);
  x.diagnoses = RelativeFrequency(claim.diagnoses, Category::kDiagnosis, vocab);
  x.other.dim = vocab.size(Category::kOther);
  std::vector<std::uint32_t> idx;
  for (const auto& t : TokenizeOther(claim)) idx.push_back(vocab.Lookup(Category::kOther, t));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  x.other.index = std::move(idx);
  x.other.value.assign(x.other.index.size(), 1.0);
  x.field_names = vocab.shared_field_names();
  return x;
}

void WriteFeatures(std::ostream& out, const std::vector<FeatureRow>& rows) {
  for (const auto& row : rows) {
    json obj = json::object();
    obj["pcn"] = row.pcn;
    obj["submitted"] = FormatDate(row.submission_date);
    const auto pairs = [](const SparseVector& v) {
      json arr = json::array();
      for (std::size_t k = 0; k < v.nnz(); ++k) arr.push_back({v.index[k], v.value[k]});
      return arr;
    };
    obj["c"] = pairs(row.x.procedures);
    obj["d"] = pairs(row.x.diagnoses);
    obj["o"] = row.x.other.index;
    obj["y0"] = row.y.y0;
    obj["y1"] = row.y.y1;
    obj["y2"] = row.y.y2;
    obj["y3"] = row.y.y3;
    out << obj.dump() << '\n';
  }
}

std::vector<FeatureRow> ReadFeatures(std::istream& in, const Vocabulary& vocab) {
  std::vector<FeatureRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      FeatureRow row;
      row.pcn = obj.at("pcn").get<std::string>();
      row.submission_date = ParseDate(obj.at("submitted").get<std::string>());
      const auto read_pairs = [&](const json& arr, Category c) {
        SparseVector v;
        v.dim = vocab.size(c);
        for (const auto& p : arr) {
          const auto i = p.at(0).get<std::uint32_t>();
          if (i >= v.dim || (!v.index.empty() && i <= v.index.back())) {
            throw Error(fmt::format("bad {} index {}", CategoryName(c), i));
          }
          v.index.push_back(i);
          v.value.push_back(p.at(1).get<double>());
        }
        return v;
      };
      row.x.procedures = read_pairs(obj.at("c"), Category::kProcedure);
      row.x.diagnoses = read_pairs(obj.at("d"), Category::kDiagnosis);
      row.x.other.dim = vocab.size(Category::kOther);
      for (const auto& i : obj.at("o")) {
        const auto k = i.get<std::uint32_t>();
        if (k >= row.x.other.dim) throw Error(fmt::format("bad other index {}", k));
        row.x.other.index.push_back(k);
        row.x.other.value.push_back(1.0);
      }
      row.x.field_names = vocab.shared_field_names();
      row.y.y0 = obj.at("y0").get<int>();
      row.y.y1 = obj.at("y1").get<std::vector<double>>();
      row.y.y2 = obj.at("y2").get<std::vector<double>>();
      row.y.y3 = obj.at("y3").get<int>();
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw ParseError(line_no, "<line>", e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, "<line>", e.what());
    }
  }
  return rows;
}

}  // namespace claimnet::featurize
