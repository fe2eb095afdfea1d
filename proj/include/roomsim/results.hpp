#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace roomsim {

// One scored (engine, room, condition, source, receiver, algorithm, metric)
// record. A value of +inf is the "perfect" sentinel (SI-SDR of an exact
// reconstruction).
struct EvalResult {
  std::string engine;
  std::string room_id;
  std::string condition_id;
  std::string source_id;
  std::string receiver_id;
  std::string algorithm;
  std::string metric;
  double value = 0.0;

  bool is_sentinel() const { return std::isinf(value) && value > 0; }
  // room/condition/source/receiver, the key used to pair two result sets
  std::string pair_key() const;
  std::string full_key() const;

  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

inline constexpr const char* kResultsHeader =
    "engine,room_id,condition_id,source_id,receiver_id,algorithm,metric,value";

// Numbers are written with 12 significant digits, the sentinel as `inf`.
std::string format_value(double v);
double parse_value(const std::string& s);

std::string results_to_csv(const std::vector<EvalResult>& rows);
std::vector<EvalResult> results_from_csv(const std::string& text, const std::string& origin = "csv");
void write_results(const std::filesystem::path& path, const std::vector<EvalResult>& rows);
std::vector<EvalResult> read_results(const std::filesystem::path& path);

// Splits one CSV line on commas; fields must not contain commas or quotes.
std::vector<std::string> split_csv_line(const std::string& line);

// Throws Error(validation) on a duplicate full key.
void check_unique(const std::vector<EvalResult>& rows);

}  // namespace roomsim
