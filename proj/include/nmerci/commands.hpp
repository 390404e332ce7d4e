#pragma once

// The `eval` and `toy` commands as library calls. The CLI in tools/ only
// parses flags and maps exceptions to exit codes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "nmerci/error.hpp"
#include "nmerci/io.hpp"
#include "nmerci/metric.hpp"
#include "nmerci/svg.hpp"
#include "nmerci/toy.hpp"

namespace nmerci {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ReportFormat { csv, json };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw UsageError("unknown format '" + std::string(s) + "'; expected csv or json");
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out) throw Error("write failed for " + path.string());
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::filesystem::path input;
  MetricConfig metric{95.0, true};
  std::optional<double> bin_width;
  ReportFormat format = ReportFormat::csv;
  std::filesystem::path out_dir = ".";
};

struct EvalOutcome {
  EvalSet samples;
  MetricReport report;
  std::optional<BinnedReport> bins;
};

// Scores a triplet file and writes report.{csv,json}, bins.csv when binning
// is requested, and meta.json.
inline EvalOutcome cmd_eval(const EvalOptions& opt) {
  opt.metric.validate();
  if (opt.bin_width && !(*opt.bin_width > 0.0)) throw UsageError("--bin-width must be positive");

  EvalOutcome result;
  result.samples = io::ingest(opt.input);
  result.report = n_merci(result.samples, opt.metric);
  if (opt.bin_width) result.bins = binned_eval(result.samples, opt.metric, *opt.bin_width);

  detail::ensure_dir(opt.out_dir);
  if (opt.format == ReportFormat::csv) {
    std::ostringstream csv;
    io::write_report_csv(csv, result.report, opt.metric);
    detail::write_file(opt.out_dir / "report.csv", csv.str());
  } else {
    detail::write_file(opt.out_dir / "report.json",
                       io::report_to_json(result.report, opt.metric).dump(2) + "\n");
  }
  if (result.bins) {
    std::ostringstream csv;
    io::write_bins_csv(csv, *result.bins);
    detail::write_file(opt.out_dir / "bins.csv", csv.str());
  }

  nlohmann::ordered_json meta{
      {"tool", "nmerci"},
      {"version", kVersion},
      {"command", "eval"},
      {"input", opt.input.string()},
      {"rows", result.samples.size()},
      {"alpha", opt.metric.alpha},
      {"trim_mae", opt.metric.trim_mae},
      {"bin_width", opt.bin_width ? nlohmann::ordered_json(*opt.bin_width) : nlohmann::ordered_json(nullptr)},
  };
  if (result.bins) {
    meta["bins_average_n_merci"] = result.bins->average_n_merci
                                       ? nlohmann::ordered_json(*result.bins->average_n_merci)
                                       : nlohmann::ordered_json(nullptr);
  }
  detail::write_file(opt.out_dir / "meta.json", meta.dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// toy

struct ToyOptions {
  std::vector<toy::Method> methods{toy::Method::multi_inits, toy::Method::bagging,
                                   toy::Method::mc_dropout, toy::Method::multi_epochs};
  // `n_runs`, `master_seed` and `alphas` are the flag-controlled fields.
  toy::ToyConfig config;
  std::filesystem::path out_dir = ".";
};

struct ToyOutcome {
  std::vector<toy::RunResult> results;
  std::vector<toy::SweepCell> sweep;
};

inline std::vector<toy::Method> parse_method_list(std::string_view list) {
  std::vector<toy::Method> methods;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string_view::npos ? list.npos : comma - start);
    if (!item.empty()) methods.push_back(toy::parse_method(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (methods.empty()) throw UsageError("no methods given");
  return methods;
}

inline svg::ChartMeta alpha_sweep_chart_meta() {
  return {"n-MeRCI vs inlier percentile", "alpha (%)", "n-MeRCI", 85.0};
}

// Series for the chart; degenerate cells are left out, and a method with
// fewer than two scorable alphas gets no line.
inline std::vector<svg::Series> alpha_sweep_series(std::span<const toy::SweepCell> sweep,
                                                   std::span<const toy::Method> methods) {
  std::vector<svg::Series> series;
  for (toy::Method m : methods) {
    svg::Series s{std::string(toy::display_name(m)), {}, {}};
    for (const auto& cell : sweep) {
      if (cell.method == m && cell.report.n_merci) {
        s.x.push_back(cell.alpha);
        s.y.push_back(*cell.report.n_merci);
      }
    }
    if (s.x.size() >= 2) series.push_back(std::move(s));
  }
  return series;
}

// Runs the toy benchmark and writes triplets_<method>.csv, alpha_sweep.csv,
// alpha_sweep.svg and meta.json.
inline ToyOutcome cmd_toy(const ToyOptions& opt) {
  if (opt.methods.empty()) throw UsageError("no methods given");
  opt.config.validate();

  ToyOutcome outcome;
  outcome.results = toy::run_methods(opt.config, opt.methods);
  outcome.sweep = toy::alpha_sweep(outcome.results, opt.config.alphas);

  detail::ensure_dir(opt.out_dir);
  for (const auto& r : outcome.results) {
    std::ostringstream csv;
    io::write_triplets_csv(csv, r.samples);
    detail::write_file(opt.out_dir / ("triplets_" + std::string(toy::short_name(r.method)) + ".csv"),
                       csv.str());
  }
  std::ostringstream sweep_csv;
  io::write_alpha_sweep_csv(sweep_csv, outcome.sweep);
  detail::write_file(opt.out_dir / "alpha_sweep.csv", sweep_csv.str());

  const auto series = alpha_sweep_series(outcome.sweep, opt.methods);
  if (!series.empty()) {
    detail::write_file(opt.out_dir / "alpha_sweep.svg",
                       svg::emit_svg_lines(series, alpha_sweep_chart_meta()));
  }

  const auto& c = opt.config;
  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (auto m : opt.methods) methods.push_back(std::string(toy::short_name(m)));
  nlohmann::ordered_json meta{
      {"tool", "nmerci"},
      {"version", kVersion},
      {"command", "toy"},
      {"methods", methods},
      {"seed", c.master_seed},
      {"runs", c.n_runs},
      {"alphas", c.alphas},
      {"trim_mae", false},
      {"data",
       {{"n_train", c.n_train},
        {"x_range", {c.x_low, c.x_high}},
        {"noise_std", c.noise_std},
        {"outlier_range", {c.outlier_low, c.outlier_high}},
        {"outlier_bias", c.outlier_bias},
        {"pinned_outliers", c.pinned_outliers ? nlohmann::ordered_json(*c.pinned_outliers)
                                              : nlohmann::ordered_json(nullptr)},
        {"test_points", c.test_points},
        {"test_range", {c.test_low, c.test_high}}}},
      {"network",
       {{"hidden_sizes", c.net.hidden_sizes},
        {"dropout_p", c.net.dropout_p},
        {"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate}}},
      {"ensembles",
       {{"mcd_passes", c.mcd_passes},
        {"members", c.members},
        {"epoch_window", c.epoch_window},
        {"architectures", c.architectures}}},
  };
  if (!outcome.results.empty()) {
    const auto& r = outcome.results.front();
    meta["normalization"] = {{"x_mean", r.x_stats.mean},
                             {"x_scale", r.x_stats.scale},
                             {"y_mean", r.y_stats.mean},
                             {"y_scale", r.y_stats.scale}};
  }
  detail::write_file(opt.out_dir / "meta.json", meta.dump(2) + "\n");
  return outcome;
}

}  // namespace nmerci
