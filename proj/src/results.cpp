#include "roomsim/results.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "roomsim/error.hpp"

namespace roomsim {

std::string EvalResult::pair_key() const {
  return room_id + "/" + condition_id + "/" + source_id + "/" + receiver_id;
}

std::string EvalResult::full_key() const {
  return engine + "/" + pair_key() + "/" + algorithm + "/" + metric;
}

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double parse_value(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || std::isnan(v))
    throw Error(ErrorKind::parse, "not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

namespace {

void check_field(const std::string& f) {
  if (f.find_first_of(",\"\n\r") != std::string::npos)
    throw Error(ErrorKind::invalid_argument, "field contains a CSV delimiter: '" + f + "'");
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

std::string results_to_csv(const std::vector<EvalResult>& rows) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : rows) {
    for (const auto* f : {&r.engine, &r.room_id, &r.condition_id, &r.source_id, &r.receiver_id,
                          &r.algorithm, &r.metric}) {
      check_field(*f);
      out += *f;
      out += ',';
    }
    out += format_value(r.value);
    out += '\n';
  }
  return out;
}

std::vector<EvalResult> results_from_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kResultsHeader)
    throw Error(ErrorKind::parse, origin + ": expected header '" + kResultsHeader + "'");
  std::vector<EvalResult> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8)
      throw Error(ErrorKind::parse, origin + ":" + std::to_string(lineno) + ": expected 8 fields");
    EvalResult r{f[0], f[1], f[2], f[3], f[4], f[5], f[6], 0.0};
    try {
      r.value = parse_value(f[7]);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_results(const std::filesystem::path& path, const std::vector<EvalResult>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::not_found, "cannot write " + path.string());
  out << results_to_csv(rows);
}

std::vector<EvalResult> read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, "results file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return results_from_csv(ss.str(), path.string());
}

void check_unique(const std::vector<EvalResult>& rows) {
  std::set<std::string> seen;
  for (const auto& r : rows)
    if (!seen.insert(r.full_key()).second)
      throw Error(ErrorKind::validation, "duplicate result key " + r.full_key());
}

}  // namespace roomsim
