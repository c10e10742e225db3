// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <initializer_list>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace spikeforge {

inline constexpr int kReportSchemaVersion = 1;

/// Quotes a field per RFC 4180 when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

/// Writes CRLF-terminated RFC 4180 records.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void row(const std::vector<std::string>& fields);
  void row(std::initializer_list<std::string_view> fields);

 private:
  std::ostream& out_;
};

/// Parses RFC 4180 text into records; the first record is returned as-is
/// (callers decide whether it is a header).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace spikeforge
