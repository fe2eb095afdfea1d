#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roomsim/results.hpp"

namespace roomsim::agreement {

// Reference/candidate values aligned on (room, condition, source, receiver).
struct PairedSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> keys;  // sorted
  std::size_t excluded = 0;       // pairs dropped because either side is the +inf sentinel
  std::vector<std::string> unmatched_reference;
  std::vector<std::string> unmatched_candidate;

  std::size_t n() const { return x.size(); }
  double mean_x() const;
  double mean_y() const;
};

// Inner join of the rows with the given algorithm and metric. When
// `engine` is non-empty only candidate rows of that engine are used.
// Throws Error(degenerate) with fewer than 2 matched pairs.
PairedSeries pair_results(const std::vector<EvalResult>& reference,
                          const std::vector<EvalResult>& candidate, const std::string& algorithm,
                          const std::string& metric, const std::string& engine = "");

// Throws Error(degenerate) when either series has zero variance.
double pearson(const PairedSeries& s);
double rmse(const PairedSeries& s);

struct ReportRow {
  std::string engine;
  std::string algorithm;
  std::string metric;
  std::string dataset = "pooled";
  double rho = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
  std::size_t excluded = 0;
  std::size_t unmatched = 0;
  std::optional<std::string> error;  // set when the row could not be computed
};

struct ScatterPoint {
  std::string engine;
  std::string algorithm;
  std::string metric;
  std::string dataset;
  std::string key;
  double x;
  double y;
};

struct ReportConfig {
  bool per_dataset = false;  // group by room_id instead of pooling
};

struct AgreementReport {
  std::string mode;  // "pooled" or "per_dataset"
  std::vector<ReportRow> rows;
  std::vector<ScatterPoint> scatter;

  std::size_t succeeded() const;
};

// One row per candidate engine x algorithm x metric (x dataset in
// per-dataset mode). Candidate sets are visited in order, engines and
// (algorithm, metric) pairs in sorted order.
AgreementReport build_report(const std::vector<EvalResult>& reference,
                             const std::vector<std::vector<EvalResult>>& candidates,
                             const ReportConfig& config = {});

nlohmann::json report_to_json(const AgreementReport& report);
// Rows only; the scatter data lives in the CSV export.
AgreementReport report_from_json(const nlohmann::json& j);
// Engines as rows, algorithm/metric as column groups with rho and RMSE.
std::string report_to_table(const AgreementReport& report);
// engine,algorithm,metric,dataset,key,x,y; each panel ends with two
// `y=x` rows giving the perfect-match line over the panel's range.
std::string scatter_to_csv(const AgreementReport& report);
std::string scatter_to_svg(const AgreementReport& report);

}  // namespace roomsim::agreement
