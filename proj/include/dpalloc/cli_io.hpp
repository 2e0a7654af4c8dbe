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
// Dataset loading, synthetic dataset generation and report serialization.
//
#ifndef DPALLOC_CLI_IO_HPP_
#define DPALLOC_CLI_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dpalloc/core_model.hpp"
#include "dpalloc/error.hpp"
#include "dpalloc/harness.hpp"
#include "dpalloc/rng.hpp"
#include "json.hpp"

namespace dpalloc {

// ---------------------------------------------------------------------------
// CSV input
// ---------------------------------------------------------------------------

namespace internal {

// Splits one CSV record. Double quotes delimit fields that may contain commas;
// "" inside a quoted field is a literal quote. Records span one line.
inline std::vector<std::string> SplitCsvLine(std::string_view line,
                                             std::int64_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (was_quoted || !cur.empty()) {
        throw Error(ErrorCode::kParseError, "stray quote", line_no);
      }
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      if (was_quoted) {
        throw Error(ErrorCode::kParseError, "text after closing quote",
                    line_no);
      }
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorCode::kParseError, "unterminated quote", line_no);
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double ParseReal(std::string_view field, std::int64_t line_no,
                        const std::string& column) {
  const std::string_view s = Trim(field);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() ||
      !std::isfinite(v)) {
    throw Error(ErrorCode::kParseError,
                "column '" + column + "': cannot parse '" + std::string(field) +
                    "' as a finite decimal",
                line_no);
  }
  return v;
}

}  // namespace internal

inline std::string HeaderFor(Problem p) {
  std::string h = "assignee";
  for (const auto& q : SchemaFor(p)) h += "," + q.str();
  return h;
}

// Reads a dataset in the fixed schema for `problem`. Row order becomes the
// assignee order. Malformed input is rejected with the offending line.
inline StatMatrix ParseCsv(std::istream& in, Problem problem) {
  const std::vector<QueryId> schema = SchemaFor(problem);
  std::string line;
  std::int64_t line_no = 0;

  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParseError, "missing header row", 1);
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto header = internal::SplitCsvLine(line, line_no);
    std::vector<std::string> want{"assignee"};
    for (const auto& q : schema) want.push_back(q.str());
    if (header != want) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "expected header '" + HeaderFor(problem) + "', found '" +
                      line + "'",
                  line_no);
    }
  }

  std::vector<AssigneeId> ids;
  std::vector<double> values;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = internal::SplitCsvLine(line, line_no);
    if (fields.size() != schema.size() + 1) {
      throw Error(ErrorCode::kParseError,
                  "expected " + std::to_string(schema.size() + 1) +
                      " fields, found " + std::to_string(fields.size()),
                  line_no);
    }
    const std::string id(internal::Trim(fields[0]));
    if (id.empty()) {
      throw Error(ErrorCode::kEmptyId, "empty assignee id", line_no);
    }
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kDuplicateAssignee, "assignee '" + id + "'",
                  line_no);
    }
    for (std::size_t q = 0; q < schema.size(); ++q) {
      const double v =
          internal::ParseReal(fields[q + 1], line_no, schema[q].str());
      if (v < 0) {
        throw Error(ErrorCode::kNegativeTrueCount,
                    "column '" + schema[q].str() + "' is negative", line_no);
      }
      values.push_back(v);
    }
    ids.emplace_back(id);
  }
  if (ids.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no data rows", line_no);
  }
  return StatMatrix(std::move(ids), schema, std::move(values));
}

inline StatMatrix LoadCsv(const std::string& path, Problem problem) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  return ParseCsv(in, problem);
}

namespace internal {

inline std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void WriteFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write to '" + path + "' failed");
}

}  // namespace internal

inline std::string FormatCsv(const StatMatrix& m) {
  std::string out = "assignee";
  for (const auto& q : m.queries()) out += "," + q.str();
  out += "\n";
  for (std::size_t a = 0; a < m.num_assignees(); ++a) {
    out += internal::CsvField(m.assignees()[a].str());
    for (std::size_t q = 0; q < m.num_queries(); ++q) {
      out += "," + FormatDouble(m.at(a, q));
    }
    out += "\n";
  }
  return out;
}

inline void WriteCsv(const StatMatrix& m, const std::string& path) {
  internal::WriteFile(path, FormatCsv(m));
}

// ---------------------------------------------------------------------------
// Synthetic profiles
// ---------------------------------------------------------------------------

enum class SynthProfile { kMichiganLike, kFloridaLike, kIndiaLike };

inline SynthProfile ParseSynthProfile(const std::string& s) {
  if (s == "michigan-like") return SynthProfile::kMichiganLike;
  if (s == "florida-like") return SynthProfile::kFloridaLike;
  if (s == "india-like") return SynthProfile::kIndiaLike;
  throw Error(ErrorCode::kInvalidConfig, "unknown profile '" + s + "'");
}

inline Problem ProblemOf(SynthProfile p) {
  return p == SynthProfile::kIndiaLike ? Problem::kApportionment
                                       : Problem::kTitle1;
}

inline std::int64_t DefaultSynthSize(SynthProfile p) {
  switch (p) {
    case SynthProfile::kMichiganLike: return 888;
    case SynthProfile::kFloridaLike: return 74;
    case SynthProfile::kIndiaLike: return 35;
  }
  return 1;
}

namespace internal {

inline std::vector<AssigneeId> NumberedIds(const std::string& prefix,
                                           std::int64_t n, int min_width) {
  const int width =
      std::max(min_width, static_cast<int>(std::to_string(n).size()));
  std::vector<AssigneeId> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 1; i <= n; ++i) {
    std::string num = std::to_string(i);
    ids.emplace_back(prefix + std::string(width - num.size(), '0') + num);
  }
  return ids;
}

// Rounded log-normal counts with the smallest forced to exactly `floor`.
inline std::vector<double> LogNormalCounts(RngStream& rng, std::int64_t n,
                                           double median, double sigma,
                                           double floor) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) {
    x = std::max(floor, std::round(median *
                                   std::exp(sigma * SampleStandardNormal(rng))));
  }
  *std::min_element(v.begin(), v.end()) = floor;
  return v;
}

}  // namespace internal

// Deterministic stand-ins for the real datasets.
//   michigan-like: many small districts, heavy right tail, smallest 8.
//   florida-like:  larger districts, smallest 49.
//   india-like:    populations log-spread over [1e4, 1e8].
inline StatMatrix SynthGenerate(SynthProfile profile, std::int64_t n,
                                std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidConfig, "n must be >= 1");
  RngStream rng = RngStream::FromSeed(seed, static_cast<std::uint64_t>(profile));
  const auto rows = static_cast<std::size_t>(n);

  if (profile == SynthProfile::kIndiaLike) {
    std::vector<double> logs(rows);
    for (double& l : logs) l = rng.uniform();
    const auto [lo, hi] = std::minmax_element(logs.begin(), logs.end());
    const double lmin = *lo;
    const double span = *hi - *lo;
    std::vector<double> tot(rows);
    for (std::size_t a = 0; a < rows; ++a) {
      const double t = span > 0 ? (logs[a] - lmin) / span : 0.0;
      tot[a] = std::round(std::pow(10.0, 4.0 + 4.0 * t));
    }
    return StatMatrix(internal::NumberedIds("state_", n, 2), {queries::kTot},
                      std::move(tot));
  }

  const bool michigan = profile == SynthProfile::kMichiganLike;
  const std::vector<double> eli =
      michigan ? internal::LogNormalCounts(rng, n, 250, 1.2, 8)
               : internal::LogNormalCounts(rng, n, 5000, 1.3, 49);
  const double per_pupil = michigan ? 11000 : 9000;
  std::vector<double> values;
  values.reserve(2 * rows);
  for (double e : eli) {
    values.push_back(e);
    values.push_back(per_pupil);
  }
  return StatMatrix(internal::NumberedIds("district_", n, 3),
                    {queries::kEli, queries::kExp}, std::move(values));
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

enum class ReportFormat { kJson, kCsvLong };

inline ReportFormat ParseReportFormat(const std::string& s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv-long") return ReportFormat::kCsvLong;
  throw Error(ErrorCode::kInvalidConfig, "unknown format '" + s + "'");
}

namespace internal {

inline std::string JsonString(const std::string& s) {
  return nlohmann::json(s).dump();
}

inline std::string JsonNumber(double v) {
  return std::isfinite(v) ? FormatDouble(v) : "null";
}

inline std::string JsonNumber(const std::optional<double>& v) {
  return v ? JsonNumber(*v) : "null";
}

}  // namespace internal

// Hand-emitted so every number carries 17 significant digits and key order is
// fixed; the output is a valid JSON document.
inline std::string FormatJson(const FairnessReport& r) {
  using internal::JsonNumber;
  using internal::JsonString;
  std::ostringstream o;
  const ConfigEcho& c = r.config;
  o << "{\n  \"config\": {\n";
  o << "    \"problem\": " << JsonString(c.problem) << ",\n";
  o << "    \"mechanism\": " << JsonString(c.mechanism) << ",\n";
  o << "    \"pipeline\": " << JsonString(c.pipeline) << ",\n";
  o << "    \"epsilons\": [";
  for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
    o << (i ? ", " : "") << JsonNumber(c.epsilons[i]);
  }
  o << "],\n";
  o << "    \"n_trials\": " << c.n_trials << ",\n";
  o << "    \"seed\": " << c.seed << ",\n";
  o << "    \"params\": {";
  {
    std::size_t i = 0;
    for (const auto& [k, v] : c.params) {
      o << (i++ ? ",\n" : "\n") << "      " << JsonString(k) << ": "
        << JsonString(v);
    }
    o << (c.params.empty() ? "}" : "\n    }") << "\n  },\n";
  }

  o << "  \"assignees\": [";
  for (std::size_t a = 0; a < r.assignees.size(); ++a) {
    o << (a ? ", " : "") << JsonString(r.assignees[a].str());
  }
  o << "],\n";

  o << "  \"results\": [";
  for (std::size_t b = 0; b < r.blocks.size(); ++b) {
    const EpsilonBlock& blk = r.blocks[b];
    o << (b ? ",\n" : "\n") << "    {\n";
    o << "      \"epsilon\": " << JsonNumber(blk.epsilon) << ",\n";
    o << "      \"aggregates\": {";
    std::size_t i = 0;
    for (const auto& [k, v] : blk.aggregates) {
      o << (i++ ? ",\n" : "\n") << "        " << JsonString(k) << ": "
        << JsonNumber(v);
    }
    o << (blk.aggregates.empty() ? "}" : "\n      }") << ",\n";
    o << "      \"per_assignee\": {";
    if (!blk.per_assignee.empty()) {
      for (std::size_t a = 0; a < r.assignees.size(); ++a) {
        o << (a ? ",\n" : "\n") << "        "
          << JsonString(r.assignees[a].str()) << ": {";
        std::size_t m = 0;
        for (const auto& [name, vals] : blk.per_assignee) {
          o << (m++ ? ", " : "") << JsonString(name) << ": "
            << JsonNumber(vals.at(a));
        }
        o << "}";
      }
      o << "\n      ";
    }
    o << "}\n    }";
  }
  o << (r.blocks.empty() ? "]" : "\n  ]") << "\n}\n";
  return o.str();
}

inline FairnessReport ParseJsonReport(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  auto number = [](const nlohmann::json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  try {
    FairnessReport r;
    const auto& c = j.at("config");
    r.config.problem = c.at("problem").get<std::string>();
    r.config.mechanism = c.at("mechanism").get<std::string>();
    r.config.pipeline = c.at("pipeline").get<std::string>();
    for (const auto& e : c.at("epsilons")) {
      r.config.epsilons.push_back(e.get<double>());
    }
    r.config.n_trials = c.at("n_trials").get<std::int64_t>();
    r.config.seed = c.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : c.at("params").items()) {
      r.config.params[k] = v.get<std::string>();
    }
    for (const auto& a : j.at("assignees")) {
      r.assignees.emplace_back(a.get<std::string>());
    }
    for (const auto& b : j.at("results")) {
      EpsilonBlock blk;
      blk.epsilon = b.at("epsilon").get<double>();
      for (const auto& [k, v] : b.at("aggregates").items()) {
        blk.aggregates[k] = number(v).value_or(std::nan(""));
      }
      const auto& pa = b.at("per_assignee");
      for (std::size_t a = 0; a < r.assignees.size(); ++a) {
        const auto it = pa.find(r.assignees[a].str());
        if (it == pa.end()) continue;
        for (const auto& [name, v] : it->items()) {
          auto& vec = blk.per_assignee[name];
          vec.resize(r.assignees.size());
          vec[a] = number(v);
        }
      }
      r.blocks.push_back(std::move(blk));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, e.what());
  }
}

// One row per (epsilon, per-assignee metric, assignee); undefined values
// are written as NA.
inline std::string FormatCsvLong(const FairnessReport& r) {
  std::string out = "assignee,epsilon,metric,value\n";
  for (const auto& blk : r.blocks) {
    const std::string eps = FormatDouble(blk.epsilon);
    for (const auto& [name, vals] : blk.per_assignee) {
      for (std::size_t a = 0; a < r.assignees.size(); ++a) {
        const auto& v = vals.at(a);
        out += internal::CsvField(r.assignees[a].str());
        out += "," + eps + "," + name + ",";
        out += v && std::isfinite(*v) ? FormatDouble(*v) : "NA";
        out += "\n";
      }
    }
  }
  return out;
}

inline std::string FormatReport(const FairnessReport& r, ReportFormat format) {
  return format == ReportFormat::kJson ? FormatJson(r) : FormatCsvLong(r);
}

inline void EmitReport(const FairnessReport& r, ReportFormat format,
                       const std::string& out_path) {
  internal::WriteFile(out_path, FormatReport(r, format));
}

}  // namespace dpalloc

#endif  // DPALLOC_CLI_IO_HPP_
