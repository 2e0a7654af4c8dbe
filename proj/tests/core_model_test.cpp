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
#include "dpalloc/core_model.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace dpalloc {
namespace {

using ::dpalloc::testing::VraMatrix;

TEST(StatMatrixTest, RowMajorAccessInGivenOrder) {
  const StatMatrix m = VraMatrix({{"b", {10, 5, 1}}, {"a", {20, 8, 3}}});
  EXPECT_EQ(m.num_assignees(), 2u);
  EXPECT_EQ(m.num_queries(), 3u);
  EXPECT_EQ(m.assignees()[0].str(), "b");
  EXPECT_EQ(m.at(1, 1), 8);
  EXPECT_EQ(m.column(queries::kLit), (std::vector<double>{1, 3}));
  EXPECT_EQ(m.query_index(queries::kLep), 1u);
  EXPECT_FALSE(m.query_index(queries::kTot).has_value());
}

TEST(StatMatrixTest, ConstructionErrors) {
  EXPECT_DPALLOC_ERROR(
      StatMatrix(MakeAssigneeIds({"a"}), {queries::kTot}, {1, 2}),
      ErrorCode::kShapeMismatch);
  EXPECT_DPALLOC_ERROR(
      StatMatrix(MakeAssigneeIds({"a", "a"}), {queries::kTot}, {1, 2}),
      ErrorCode::kDuplicateAssignee);
  EXPECT_DPALLOC_ERROR(
      StatMatrix(MakeAssigneeIds({""}), {queries::kTot}, {1}),
      ErrorCode::kEmptyId);
  EXPECT_DPALLOC_ERROR(StatMatrix(MakeAssigneeIds({"a"}),
                                  {queries::kTot, queries::kTot}, {1, 2}),
                       ErrorCode::kSchemaMismatch);
}

TEST(StatMatrixTest, RequireQueryNamesMissingColumn) {
  const StatMatrix m(MakeAssigneeIds({"a"}), {queries::kTot}, {5});
  EXPECT_DPALLOC_ERROR(m.require_query(queries::kEli),
                       ErrorCode::kMissingQuery);
}

TEST(ValidateStatMatrixTest, TrueDataMustBeFiniteAndNonNegative) {
  const QueryId schema[] = {queries::kTot};
  EXPECT_NO_THROW(ValidateStatMatrix(
      StatMatrix(MakeAssigneeIds({"a"}), {queries::kTot}, {0}), schema));
  EXPECT_DPALLOC_ERROR(
      ValidateStatMatrix(
          StatMatrix(MakeAssigneeIds({"a"}), {queries::kTot}, {-1}), schema),
      ErrorCode::kNegativeTrueCount);
  EXPECT_DPALLOC_ERROR(
      ValidateStatMatrix(
          StatMatrix(MakeAssigneeIds({"a"}), {queries::kTot}, {NAN}), schema),
      ErrorCode::kNonFiniteValue);
  EXPECT_DPALLOC_ERROR(
      ValidateStatMatrix(
          StatMatrix(MakeAssigneeIds({"a"}), {queries::kEli}, {1}), schema),
      ErrorCode::kMissingQuery);
}

TEST(ValidateStatMatrixTest, NoisyDataMayBeNegative) {
  const QueryId schema[] = {queries::kTot};
  EXPECT_NO_THROW(ValidateStatMatrix(
      StatMatrix(MakeAssigneeIds({"a"}), {queries::kTot}, {-3.5}), schema,
      DataMode::kNoisy));
}

TEST(PrivacyParamsTest, Validation) {
  EXPECT_NO_THROW(PrivacyParams(0.1, 0.05));
  EXPECT_DPALLOC_ERROR(PrivacyParams(0, 0.05), ErrorCode::kNonPositiveEpsilon);
  EXPECT_DPALLOC_ERROR(PrivacyParams(1, 1), ErrorCode::kDomainError);
}

TEST(TrialEnsembleTest, KeepsOrderAndCountsDegenerateTrials) {
  const auto ids = MakeAssigneeIds({"x", "y"});
  TrialEnsemble ens(42);
  ens.Add({ids, Fractions{0.5, 0.5}, true});
  ens.Add({ids, Fractions{0.25, 0.75}});
  EXPECT_EQ(ens.n_trials(), 2u);
  EXPECT_EQ(ens.degenerate_trials(), 1);
  EXPECT_EQ(ens[1].fractions()[1], 0.75);
  EXPECT_EQ(ens.base_seed(), 42u);
}

TEST(TrialEnsembleTest, RejectsMismatchedTrials) {
  TrialEnsemble ens;
  ens.Add({MakeAssigneeIds({"x", "y"}), Fractions{0.5, 0.5}});
  EXPECT_DPALLOC_ERROR(ens.Add({MakeAssigneeIds({"y", "x"}), Fractions{1, 0}}),
                       ErrorCode::kShapeMismatch);
  EXPECT_DPALLOC_ERROR(ens.Add({MakeAssigneeIds({"x", "y"}), Seats{1, 1}}),
                       ErrorCode::kShapeMismatch);
}

TEST(ErrorTest, MessageCarriesCodeAndLine) {
  const Error e(ErrorCode::kParseError, "bad", 7);
  EXPECT_EQ(std::string(e.what()), "ParseError (line 7): bad");
  EXPECT_TRUE(IsDegenerateConfiguration(ErrorCode::kNonPositiveDenominator));
  EXPECT_FALSE(IsDegenerateConfiguration(ErrorCode::kParseError));
}

}  // namespace
}  // namespace dpalloc
