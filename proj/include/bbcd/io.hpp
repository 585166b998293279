#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "bbcd/infer.hpp"
#include "bbcd/sample.hpp"

namespace bbcd {

/// Reads observations from a CSV file with header `x,y` (or `x,y,count`
/// when freq is set), LF or CRLF line endings. Throws std::invalid_argument
/// with the offending line number on malformed input.
SampleData parse_csv(const std::filesystem::path& path, bool freq = false);
SampleData parse_csv_stream(std::istream& in, bool freq = false);

/// Writes the draws as CSV with header `x,y`, one pair per line.
void write_sample_csv(std::ostream& out, const SamplePairs& sample);

nlohmann::json to_json(const Params& params);
nlohmann::json to_json(const MomentSummary& moments);
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const GofReport& report);

}  // namespace bbcd
