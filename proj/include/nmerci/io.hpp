#pragma once

// Triplet file ingestion (CSV, JSONL) and report emission.
//
// CSV triplet files start with the exact header `y_hat,sigma,y_true` and hold
// one record per line. JSONL files hold one object per line with the same
// three numeric keys. Reals are written in shortest round-trip form, so a
// set written and read back is bit-identical.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "nmerci/error.hpp"
#include "nmerci/metric.hpp"
#include "nmerci/toy.hpp"

namespace nmerci::io {

inline constexpr std::string_view kTripletHeader = "y_hat,sigma,y_true";

enum class TripletFormat { csv, jsonl };

// Shortest representation that parses back to the same double; "inf" and
// "-inf" for infinities.
inline std::string format_real(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("cannot format number");
  return {buf, end};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] inline void fail(std::string_view source, std::size_t line, const std::string& what) {
  throw Error(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

inline double parse_real(std::string_view field, std::string_view source, std::size_t line) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(source, line, "malformed number '" + std::string(field) + "'");
  }
  return v;
}

inline Sample checked_sample(double y_hat, double sigma, double y_true, std::string_view source,
                             std::size_t line) {
  if (!std::isfinite(y_hat) || !std::isfinite(sigma) || !std::isfinite(y_true)) {
    fail(source, line, "non-finite value");
  }
  if (sigma < 0.0) fail(source, line, "invalid uncertainty: negative sigma");
  return {y_hat, sigma, y_true};
}

}  // namespace detail

inline EvalSet read_triplets_csv(std::istream& in, std::string_view source = "<csv>") {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(std::string(source) + ": empty file");
  ++line_no;
  std::string_view header = detail::trim(line);
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  if (header != kTripletHeader) {
    detail::fail(source, line_no,
                 "bad header '" + std::string(header) + "', expected '" + std::string(kTripletHeader) + "'");
  }

  std::vector<Sample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = row.find(',', start);
      fields.push_back(row.substr(start, comma == std::string_view::npos ? row.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 3) {
      detail::fail(source, line_no, "expected 3 fields, got " + std::to_string(fields.size()));
    }
    samples.push_back(detail::checked_sample(detail::parse_real(fields[0], source, line_no),
                                             detail::parse_real(fields[1], source, line_no),
                                             detail::parse_real(fields[2], source, line_no),
                                             source, line_no));
  }
  return EvalSet(std::move(samples));
}

inline EvalSet read_triplets_jsonl(std::istream& in, std::string_view source = "<jsonl>") {
  std::string line;
  std::size_t line_no = 0;
  std::vector<Sample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      detail::fail(source, line_no, "malformed JSON");
    }
    if (!obj.is_object()) detail::fail(source, line_no, "expected a JSON object");
    double values[3] = {};
    const char* keys[3] = {"y_hat", "sigma", "y_true"};
    for (int k = 0; k < 3; ++k) {
      const auto it = obj.find(keys[k]);
      if (it == obj.end() || !it->is_number()) {
        detail::fail(source, line_no, std::string("missing or non-numeric key '") + keys[k] + "'");
      }
      values[k] = it->get<double>();
    }
    samples.push_back(detail::checked_sample(values[0], values[1], values[2], source, line_no));
  }
  return EvalSet(std::move(samples));
}

inline TripletFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".ndjson" ? TripletFormat::jsonl : TripletFormat::csv;
}

// Reads a triplet file; the format follows the extension (.jsonl/.ndjson or CSV).
inline EvalSet ingest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const auto name = path.string();
  EvalSet set = format_for_path(path) == TripletFormat::jsonl ? read_triplets_jsonl(in, name)
                                                               : read_triplets_csv(in, name);
  if (set.empty()) throw Error(name + ": no records");
  return set;
}

inline void write_triplets_csv(std::ostream& out, const EvalSet& set) {
  out << kTripletHeader << '\n';
  for (const Sample& s : set) {
    out << format_real(s.y_hat) << ',' << format_real(s.sigma) << ',' << format_real(s.y_true) << '\n';
  }
}

inline void write_triplets_jsonl(std::ostream& out, const EvalSet& set) {
  for (const Sample& s : set) {
    out << R"({"y_hat":)" << format_real(s.y_hat) << R"(,"sigma":)" << format_real(s.sigma)
        << R"(,"y_true":)" << format_real(s.y_true) << "}\n";
  }
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr std::string_view kReportHeader =
    "alpha,trim_mae,n,n_used,mae,lambda_alpha,merci,max_alpha_error,n_merci,degenerate";

inline void write_report_csv(std::ostream& out, const MetricReport& r, const MetricConfig& cfg) {
  out << kReportHeader << '\n'
      << format_real(cfg.alpha) << ',' << (cfg.trim_mae ? "true" : "false") << ',' << r.n << ','
      << r.n_used << ',' << format_real(r.mae) << ',' << format_real(r.lambda_alpha) << ','
      << format_real(r.merci) << ',' << format_real(r.max_alpha_error) << ','
      << (r.n_merci ? format_real(*r.n_merci) : "") << ',' << (r.degenerate ? "true" : "false")
      << '\n';
}

namespace detail {

// JSON has no infinity; non-finite reals become null.
inline nlohmann::ordered_json real_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

// Same fields and order as the CSV report.
inline nlohmann::ordered_json report_to_json(const MetricReport& r, const MetricConfig& cfg) {
  return nlohmann::ordered_json{
      {"alpha", cfg.alpha},
      {"trim_mae", cfg.trim_mae},
      {"n", r.n},
      {"n_used", r.n_used},
      {"mae", r.mae},
      {"lambda_alpha", detail::real_or_null(r.lambda_alpha)},
      {"merci", detail::real_or_null(r.merci)},
      {"max_alpha_error", r.max_alpha_error},
      {"n_merci", r.n_merci ? nlohmann::ordered_json(*r.n_merci) : nlohmann::ordered_json(nullptr)},
      {"degenerate", r.degenerate},
  };
}

inline constexpr std::string_view kBinsHeader = "bin_low,bin_high,n,mae,n_merci,degenerate";

// Skipped bins (fewer than two samples) have empty mae and n_merci cells and
// are marked degenerate.
inline void write_bins_csv(std::ostream& out, const BinnedReport& bins) {
  out << kBinsHeader << '\n';
  for (const Bin& b : bins.bins) {
    out << format_real(b.low) << ',' << format_real(b.high) << ',' << b.n << ',';
    if (b.report) {
      out << format_real(b.report->mae) << ','
          << (b.report->n_merci ? format_real(*b.report->n_merci) : "") << ','
          << (b.report->degenerate ? "true" : "false");
    } else {
      out << ",,true";
    }
    out << '\n';
  }
}

inline constexpr std::string_view kSweepHeader = "method,alpha,n_merci";

// Degenerate cells keep their row with an empty n_merci.
inline void write_alpha_sweep_csv(std::ostream& out, std::span<const toy::SweepCell> table) {
  out << kSweepHeader << '\n';
  for (const auto& cell : table) {
    out << toy::short_name(cell.method) << ',' << format_real(cell.alpha) << ','
        << (cell.report.n_merci ? format_real(*cell.report.n_merci) : "") << '\n';
  }
}

}  // namespace nmerci::io
