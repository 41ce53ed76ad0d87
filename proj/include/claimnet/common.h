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

#ifndef CLAIMNET_COMMON_H_
#define CLAIMNET_COMMON_H_

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace claimnet {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that fails to parse or violates a record invariant.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& message);

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// Shapes or dimensions that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Calendar date with day resolution.
using Date = std::chrono::year_month_day;

// Parses YYYY-MM-DD. Throws Error on malformed or invalid dates.
Date ParseDate(std::string_view text);
std::string FormatDate(const Date& date);

// Signed number of whole days from `from` to `to`.
inline int DaysBetween(const Date& from, const Date& to) {
  return static_cast<int>((std::chrono::sys_days{to} -
                           std::chrono::sys_days{from})
                              .count());
}

inline Date AddDays(const Date& date, int days) {
  return Date{std::chrono::sys_days{date} + std::chrono::days{days}};
}

// 64-bit FNV-1a, used to fingerprint vocabularies.
std::uint64_t Fnv1a64(std::string_view data,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace claimnet

#endif  // CLAIMNET_COMMON_H_
