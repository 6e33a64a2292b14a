#include "blocksolve/app/plotdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include <blocksolve/problem_io.hpp>

#include "blocksolve/app/runner.hpp"

namespace blocksolve::app {

namespace fs = std::filesystem;
using nlohmann::json;

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing trace '" + path + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace '" + path + "'");
  t.columns = split_csv(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = split_csv(line);
    r.resize(t.columns.size());
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace

std::string export_plotdata(const std::string& run_dir, const std::string& out_path) {
  const fs::path dir(run_dir);
  const fs::path summary_path = dir / "summary.json";
  if (!fs::exists(summary_path)) throw std::runtime_error("no summary.json in '" + run_dir + "'");
  const json summary = json::parse(read_text_file(summary_path.string()));

  std::vector<Table> traces;
  for (const auto& s : summary.at("seeds")) {
    // Traces are looked up next to the summary so a moved run directory still works.
    traces.push_back(read_csv((dir / fs::path(s.at("trace").get<std::string>()).filename()).string()));
  }
  if (traces.empty()) throw std::runtime_error("summary lists no traces");

  const auto& cols = traces.front().columns;
  const bool federated = !cols.empty() && cols.front() == "round";
  const std::string primary = federated ? "certificate_residual" : "res_sq";
  const std::string ergodic = federated ? "ergodic_certificate" : "ergodic_res_sq";
  std::size_t len = traces.front().rows.size();
  for (const auto& t : traces) {
    if (t.columns != cols) throw std::runtime_error("traces have different columns");
    len = std::min(len, t.rows.size());
  }

  std::vector<std::string> metrics;
  for (const auto& c : cols) {
    if (c == "k" || c == "round" || c == "block" || c == "sampled_user" || c == "cumulative_bytes") continue;
    metrics.push_back(c);
  }

  const json& bounds = summary.value("plot_bounds", json::object());
  auto rcog_bound = [&](long k) -> std::string {
    if (!bounds.contains("rcog_ergodic_scale")) return "";
    return format_number(bounds.at("rcog_ergodic_scale").get<double>() / static_cast<double>(k + 1));
  };
  auto envelope = [&](long k) -> std::string {
    if (!bounds.contains("arcog_envelope")) return "";
    const json& e = bounds.at("arcog_envelope");
    const double c0 = e.at("C0"), c2 = e.at("C2"), w = e.at("omega"), nu = e.at("nu"), scale = e.at("scale");
    const double kn = static_cast<double>(k) + nu;
    return format_number(scale * 8.0 * (c0 + 2.0 * w * c2) / (w * w * kn * kn));
  };

  const fs::path out = out_path.empty() ? dir / "plotdata.csv" : fs::path(out_path);
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write '" + out.string() + "'");
  os << kPlotHeader << '\n';

  auto emit = [&](const std::string& metric, long k, const std::vector<double>& v, const std::string& rb,
                  const std::string& env) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    os << metric << ',' << k << ',' << format_number(mean) << ',' << format_number(quantile(v, 0.1)) << ','
       << format_number(quantile(v, 0.9)) << ',' << rb << ',' << env << '\n';
  };

  for (const auto& metric : metrics) {
    const auto col = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), metric) - cols.begin());
    for (std::size_t r = 0; r < len; ++r) {
      std::vector<double> v;
      for (const auto& t : traces)
        if (!t.rows[r][col].empty()) v.push_back(std::stod(t.rows[r][col]));
      if (v.empty()) continue;
      const long k = std::stol(traces.front().rows[r][0]);
      emit(metric, k, v, "", metric == primary ? envelope(k) : "");
    }
  }

  // Running average of the primary metric per seed, then aggregated. Only
  // exact when every k was recorded, so thinned traces skip it.
  bool contiguous = true;
  for (std::size_t r = 0; r < len; ++r) contiguous = contiguous && std::stol(traces.front().rows[r][0]) == static_cast<long>(r);
  const auto col = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), primary) - cols.begin());
  if (contiguous && col < cols.size()) {
    std::vector<double> sums(traces.size(), 0.0);
    for (std::size_t r = 0; r < len; ++r) {
      std::vector<double> v;
      for (std::size_t s = 0; s < traces.size(); ++s) {
        sums[s] += std::stod(traces[s].rows[r][col]);
        v.push_back(sums[s] / static_cast<double>(r + 1));
      }
      const long k = std::stol(traces.front().rows[r][0]);
      emit(ergodic, k, v, rcog_bound(k), "");
    }
  }
  return out.string();
}

}  // namespace blocksolve::app
