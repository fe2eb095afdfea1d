#include "roomsim/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "roomsim/error.hpp"

namespace roomsim::agreement {

double PairedSeries::mean_x() const {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double PairedSeries::mean_y() const {
  double s = 0.0;
  for (double v : y) s += v;
  return y.empty() ? 0.0 : s / static_cast<double>(y.size());
}

namespace {

std::map<std::string, double> index_rows(const std::vector<EvalResult>& rows,
                                         const std::string& algorithm, const std::string& metric,
                                         const std::string& engine, const char* side) {
  std::map<std::string, double> out;
  for (const auto& r : rows) {
    if (r.algorithm != algorithm || r.metric != metric) continue;
    if (!engine.empty() && r.engine != engine) continue;
    if (!out.emplace(r.pair_key(), r.value).second)
      throw Error(ErrorKind::validation, std::string(side) + " set has duplicate key " +
                                             r.pair_key() + " for " + algorithm + "/" + metric);
  }
  return out;
}

}  // namespace

PairedSeries pair_results(const std::vector<EvalResult>& reference,
                          const std::vector<EvalResult>& candidate, const std::string& algorithm,
                          const std::string& metric, const std::string& engine) {
  if (reference.empty() || candidate.empty())
    throw Error(ErrorKind::degenerate, "cannot pair an empty result set");
  const auto ref = index_rows(reference, algorithm, metric, "", "reference");
  const auto cand = index_rows(candidate, algorithm, metric, engine, "candidate");
  PairedSeries s;
  for (const auto& [key, xv] : ref) {
    const auto it = cand.find(key);
    if (it == cand.end()) {
      s.unmatched_reference.push_back(key);
      continue;
    }
    if (std::isinf(xv) || std::isinf(it->second)) {
      ++s.excluded;
      continue;
    }
    s.keys.push_back(key);
    s.x.push_back(xv);
    s.y.push_back(it->second);
  }
  for (const auto& [key, yv] : cand)
    if (!ref.count(key)) s.unmatched_candidate.push_back(key);
  if (s.n() < 2)
    throw Error(ErrorKind::degenerate, "fewer than 2 matched pairs for " + algorithm + "/" + metric +
                                           " (" + std::to_string(s.n()) + " matched, " +
                                           std::to_string(s.excluded) + " excluded)");
  return s;
}

double pearson(const PairedSeries& s) {
  if (s.n() < 2) throw Error(ErrorKind::degenerate, "pearson needs at least 2 pairs");
  const double mx = s.mean_x(), my = s.mean_y();
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    const double dx = s.x[i] - mx, dy = s.y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw Error(ErrorKind::degenerate, "undefined correlation: zero variance in " +
                                           std::string(sxx > 0.0 ? "Y" : "X"));
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double rmse(const PairedSeries& s) {
  if (s.n() < 1) throw Error(ErrorKind::degenerate, "rmse needs at least 1 pair");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) acc += (s.x[i] - s.y[i]) * (s.x[i] - s.y[i]);
  return std::sqrt(acc / static_cast<double>(s.n()));
}

std::size_t AgreementReport::succeeded() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.error; }));
}

AgreementReport build_report(const std::vector<EvalResult>& reference,
                             const std::vector<std::vector<EvalResult>>& candidates,
                             const ReportConfig& config) {
  AgreementReport report;
  report.mode = config.per_dataset ? "per_dataset" : "pooled";

  std::set<std::string> datasets;
  for (const auto& r : reference) datasets.insert(r.room_id);

  for (const auto& cand : candidates) {
    std::map<std::string, std::set<std::pair<std::string, std::string>>> engines;
    for (const auto& r : cand) engines[r.engine].insert({r.algorithm, r.metric});
    for (const auto& [engine, columns] : engines) {
      for (const auto& [algorithm, metric] : columns) {
        std::vector<std::string> groups;
        if (config.per_dataset) groups.assign(datasets.begin(), datasets.end());
        else groups.push_back("pooled");
        for (const auto& dataset : groups) {
          ReportRow row;
          row.engine = engine;
          row.algorithm = algorithm;
          row.metric = metric;
          row.dataset = dataset;
          std::vector<EvalResult> ref_part, cand_part;
          for (const auto& r : reference)
            if (!config.per_dataset || r.room_id == dataset) ref_part.push_back(r);
          for (const auto& r : cand)
            if (!config.per_dataset || r.room_id == dataset) cand_part.push_back(r);
          try {
            const auto s = pair_results(ref_part, cand_part, algorithm, metric, engine);
            row.n = s.n();
            row.excluded = s.excluded;
            row.unmatched = s.unmatched_reference.size() + s.unmatched_candidate.size();
            row.rmse = rmse(s);
            row.rho = pearson(s);
            for (std::size_t i = 0; i < s.n(); ++i)
              report.scatter.push_back({engine, algorithm, metric, dataset, s.keys[i], s.x[i], s.y[i]});
          } catch (const Error& e) {
            row.error = e.what();
          }
          report.rows.push_back(std::move(row));
        }
      }
    }
  }
  return report;
}

namespace {

nlohmann::json number_or_null(double v, bool ok) {
  return ok && std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

nlohmann::json report_to_json(const AgreementReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json j = {{"engine", r.engine},
                        {"algorithm", r.algorithm},
                        {"metric", r.metric},
                        {"dataset", r.dataset},
                        {"rho", number_or_null(r.rho, !r.error)},
                        {"rmse", number_or_null(r.rmse, !r.error)},
                        {"n", r.n},
                        {"excluded", r.excluded},
                        {"unmatched", r.unmatched}};
    j["error"] = r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr);
    rows.push_back(std::move(j));
  }
  return {{"mode", report.mode}, {"rows", rows}};
}

AgreementReport report_from_json(const nlohmann::json& j) {
  AgreementReport report;
  try {
    report.mode = j.at("mode").get<std::string>();
    for (const auto& r : j.at("rows")) {
      ReportRow row;
      row.engine = r.at("engine").get<std::string>();
      row.algorithm = r.at("algorithm").get<std::string>();
      row.metric = r.at("metric").get<std::string>();
      row.dataset = r.value("dataset", std::string("pooled"));
      row.n = r.value("n", std::size_t{0});
      row.excluded = r.value("excluded", std::size_t{0});
      row.unmatched = r.value("unmatched", std::size_t{0});
      if (r.contains("error") && !r["error"].is_null()) row.error = r["error"].get<std::string>();
      else {
        row.rho = r.at("rho").get<double>();
        row.rmse = r.at("rmse").get<double>();
      }
      report.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("report JSON: ") + e.what());
  }
  return report;
}

std::string report_to_table(const AgreementReport& report) {
  using Column = std::pair<std::string, std::string>;
  std::vector<Column> columns;
  std::vector<std::pair<std::string, std::string>> row_keys;  // engine, dataset
  std::map<std::pair<std::pair<std::string, std::string>, Column>, const ReportRow*> cells;
  for (const auto& r : report.rows) {
    const Column c{r.algorithm, r.metric};
    if (std::find(columns.begin(), columns.end(), c) == columns.end()) columns.push_back(c);
    const auto rk = std::make_pair(r.engine, r.dataset);
    if (std::find(row_keys.begin(), row_keys.end(), rk) == row_keys.end()) row_keys.push_back(rk);
    cells[{rk, c}] = &r;
  }
  std::sort(columns.begin(), columns.end());

  const bool per_dataset = report.mode == "per_dataset";
  const std::size_t label_w = 24;
  const std::size_t cell_w = 20;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::ostringstream out;
  out << pad(per_dataset ? "engine / dataset" : "engine", label_w);
  for (const auto& c : columns) out << pad(c.first + " " + c.second, cell_w);
  out << '\n' << pad("", label_w);
  for (std::size_t i = 0; i < columns.size(); ++i) out << pad("rho(+)   RMSE(-)", cell_w);
  out << '\n';
  for (const auto& rk : row_keys) {
    out << pad(per_dataset ? rk.first + " / " + rk.second : rk.first, label_w);
    for (const auto& c : columns) {
      const auto it = cells.find({rk, c});
      std::string cell;
      if (it == cells.end()) cell = "-";
      else if (it->second->error) cell = "n/a";
      else cell = pad(fixed(it->second->rho, 3), 9) + fixed(it->second->rmse, 3);
      out << pad(cell, cell_w);
    }
    out << '\n';
  }
  out << "(" << report.mode << "; rho: Pearson correlation, RMSE: root mean squared error)\n";
  return out.str();
}

std::string scatter_to_csv(const AgreementReport& report) {
  std::ostringstream out;
  out << "engine,algorithm,metric,dataset,key,x,y\n";
  std::map<std::string, std::pair<double, double>> ranges;
  std::vector<std::string> order;
  for (const auto& p : report.scatter) {
    const std::string panel = p.engine + "," + p.algorithm + "," + p.metric + "," + p.dataset;
    out << panel << ',' << p.key << ',' << format_value(p.x) << ',' << format_value(p.y) << '\n';
    const double lo = std::min(p.x, p.y), hi = std::max(p.x, p.y);
    auto [it, fresh] = ranges.emplace(panel, std::make_pair(lo, hi));
    if (fresh) order.push_back(panel);
    else it->second = {std::min(it->second.first, lo), std::max(it->second.second, hi)};
  }
  for (const auto& panel : order) {
    const auto [lo, hi] = ranges[panel];
    out << panel << ",y=x," << format_value(lo) << ',' << format_value(lo) << '\n';
    out << panel << ",y=x," << format_value(hi) << ',' << format_value(hi) << '\n';
  }
  return out.str();
}

std::string scatter_to_svg(const AgreementReport& report) {
  // one panel per algorithm/metric/dataset, engines as colours
  std::vector<std::string> panels;
  std::vector<std::string> engines;
  for (const auto& p : report.scatter) {
    const std::string panel = p.algorithm + " " + p.metric + (p.dataset == "pooled" ? "" : " " + p.dataset);
    if (std::find(panels.begin(), panels.end(), panel) == panels.end()) panels.push_back(panel);
    if (std::find(engines.begin(), engines.end(), p.engine) == engines.end()) engines.push_back(p.engine);
  }
  static const char* colours[] = {"#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  const int size = 260, margin = 40, cols = std::max<int>(1, std::min<int>(3, static_cast<int>(panels.size())));
  const int rows = (static_cast<int>(panels.size()) + cols - 1) / cols;
  const int width = cols * (size + margin) + margin;
  const int height = std::max(1, rows) * (size + margin) + margin + 20 * static_cast<int>(engines.size());

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const int ox = margin + static_cast<int>(k % cols) * (size + margin);
    const int oy = margin + static_cast<int>(k / cols) * (size + margin);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : report.scatter) {
      const std::string panel = p.algorithm + " " + p.metric + (p.dataset == "pooled" ? "" : " " + p.dataset);
      if (panel != panels[k]) continue;
      lo = std::min({lo, p.x, p.y});
      hi = std::max({hi, p.x, p.y});
    }
    if (!(hi > lo)) hi = lo + 1.0;
    const double span = hi - lo;
    lo -= 0.05 * span;
    hi += 0.05 * span;
    auto sx = [&](double v) { return ox + (v - lo) / (hi - lo) * size; };
    auto sy = [&](double v) { return oy + size - (v - lo) / (hi - lo) * size; };
    out << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << size << "\" height=\"" << size
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << ox << "\" y=\"" << oy - 6 << "\">" << panels[k] << "</text>\n";
    out << "<line x1=\"" << sx(lo) << "\" y1=\"" << sy(lo) << "\" x2=\"" << sx(hi) << "\" y2=\"" << sy(hi)
        << "\" stroke=\"red\" stroke-dasharray=\"3,3\"/>\n";
    for (const auto& p : report.scatter) {
      const std::string panel = p.algorithm + " " + p.metric + (p.dataset == "pooled" ? "" : " " + p.dataset);
      if (panel != panels[k]) continue;
      const auto e = std::find(engines.begin(), engines.end(), p.engine) - engines.begin();
      out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"3\" fill=\""
          << colours[e % 6] << "\"/>\n";
    }
    out << "<text x=\"" << ox + size / 2 - 30 << "\" y=\"" << oy + size + 14 << "\">reference</text>\n";
  }
  const int legend_y = margin + std::max(1, rows) * (size + margin);
  for (std::size_t e = 0; e < engines.size(); ++e)
    out << "<text x=\"" << margin << "\" y=\"" << legend_y + 20 * static_cast<int>(e) << "\" fill=\""
        << colours[e % 6] << "\">" << engines[e] << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace roomsim::agreement
