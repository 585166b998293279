#include "bbcd/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace bbcd {

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

int parse_nonnegative_int(const std::string& field, std::size_t line_no) {
  int value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || value < 0) {
    throw std::invalid_argument("parse_csv: line " + std::to_string(line_no) +
                                ": expected a nonnegative integer, got '" + field + "'");
  }
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

SampleData parse_csv_stream(std::istream& in, bool freq) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("parse_csv: empty input, expected a header line");
  }
  const std::string expected = freq ? "x,y,count" : "x,y";
  if (strip_cr(line) != expected) {
    throw std::invalid_argument("parse_csv: line 1: expected header '" + expected +
                                "', got '" + strip_cr(line) + "'");
  }

  std::vector<std::pair<int, int>> pairs;
  std::map<std::pair<int, int>, double> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    const std::size_t want = freq ? 3 : 2;
    if (fields.size() != want) {
      throw std::invalid_argument("parse_csv: line " + std::to_string(line_no) +
                                  ": expected " + std::to_string(want) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    const int x = parse_nonnegative_int(fields[0], line_no);
    const int y = parse_nonnegative_int(fields[1], line_no);
    if (freq) {
      cells[{x, y}] += parse_nonnegative_int(fields[2], line_no);
    } else {
      pairs.emplace_back(x, y);
    }
  }
  if (freq) {
    if (cells.empty()) throw std::invalid_argument("parse_csv: no observations");
    return SampleData::from_weighted_cells(std::move(cells));
  }
  if (pairs.empty()) throw std::invalid_argument("parse_csv: no observations");
  return SampleData::from_pairs(std::move(pairs));
}

SampleData parse_csv(const std::filesystem::path& path, bool freq) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("parse_csv: cannot open '" + path.string() + "'");
  }
  return parse_csv_stream(in, freq);
}

void write_sample_csv(std::ostream& out, const SamplePairs& sample) {
  out << "x,y\n";
  for (const auto& [x, y] : sample.pairs) {
    out << x << ',' << y << '\n';
  }
}

nlohmann::json to_json(const Params& params) {
  return {{"n1", params.n1}, {"n2", params.n2}, {"p1", params.p1},
          {"p2", params.p2}, {"t", params.t}};
}

nlohmann::json to_json(const MomentSummary& moments) {
  return {{"mean_x", moments.mean_x}, {"mean_y", moments.mean_y},
          {"var_x", moments.var_x},   {"var_y", moments.var_y},
          {"cov", moments.cov},       {"corr", moments.corr}};
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json j = to_json(fit.params_hat);
  if (fit.log_lik) {
    j["log_lik"] = *fit.log_lik;
  } else {
    j["log_lik"] = nullptr;
  }
  j["converged"] = fit.converged;
  j["method"] = to_string(fit.method);
  j["n_evaluations"] = fit.n_evaluations;
  j["model_moments"] = to_json(fit.model_moments);
  if (!fit.diagnosis.empty()) j["diagnosis"] = fit.diagnosis;
  if (!fit.profile_trace.empty()) {
    nlohmann::json trace = nlohmann::json::array();
    for (const ProfilePoint& point : fit.profile_trace) {
      trace.push_back({{"n1", point.n1},
                       {"n2", point.n2},
                       {"log_lik", point.log_lik},
                       {"converged", point.converged}});
    }
    j["profile_trace"] = std::move(trace);
  }
  return j;
}

nlohmann::json to_json(const GofReport& report) {
  nlohmann::json pooled = nlohmann::json::array();
  for (const PooledCell& group : report.pooled_cells) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& [x, y] : group.members) members.push_back({x, y});
    pooled.push_back({{"cells", std::move(members)},
                      {"observed", group.observed},
                      {"expected", group.expected}});
  }
  return {{"statistic", report.statistic},
          {"dof", report.dof},
          {"p_value", report.p_value},
          {"pooled_cells", std::move(pooled)},
          {"dof_floored", report.dof_floored}};
}

}  // namespace bbcd
