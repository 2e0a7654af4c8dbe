//
// Copyright 2026 The dpalloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#ifndef DPALLOC_TESTS_TEST_UTIL_HPP_
#define DPALLOC_TESTS_TEST_UTIL_HPP_

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dpalloc/core_model.hpp"
#include "dpalloc/error.hpp"

namespace dpalloc::testing {

// Returns pre-set noise values in order and records the scales requested.
class ScriptedNoise {
 public:
  explicit ScriptedNoise(std::vector<double> values)
      : values_(std::move(values)) {}

  double laplace(double scale) {
    if (next_ >= values_.size()) throw std::out_of_range("script exhausted");
    scales_.push_back(scale);
    return values_[next_++];
  }

  const std::vector<double>& scales() const { return scales_; }
  std::size_t consumed() const { return next_; }

 private:
  std::vector<double> values_;
  std::vector<double> scales_;
  std::size_t next_ = 0;
};

// Uniform source returning one constant.
struct ConstantUniform {
  double u;
  double uniform() const { return u; }
};

inline StatMatrix VraMatrix(
    std::vector<std::pair<const char*, std::vector<double>>> rows) {
  std::vector<AssigneeId> ids;
  std::vector<double> values;
  for (auto& [id, v] : rows) {
    ids.emplace_back(id);
    values.insert(values.end(), v.begin(), v.end());
  }
  return StatMatrix(std::move(ids), {queries::kVac, queries::kLep, queries::kLit},
                    std::move(values));
}

#define EXPECT_DPALLOC_ERROR(stmt, expected_code)                    \
  do {                                                               \
    try {                                                            \
      stmt;                                                          \
      ADD_FAILURE() << "expected " << #expected_code;                \
    } catch (const ::dpalloc::Error& e) {                            \
      EXPECT_EQ(e.code(), expected_code) << e.what();                \
    }                                                                \
  } while (0)

}  // namespace dpalloc::testing

#endif  // DPALLOC_TESTS_TEST_UTIL_HPP_
