#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hardbatch/errors.hpp"
#include "hardbatch/metrics.hpp"
#include "hardbatch/train.hpp"

namespace hardbatch {

// Shortest decimal form that parses back to the exact same bits. Keeps CSVs
// both readable and bitwise reproducible.
inline std::string format_double(double value) {
  char buf[40];
  std::string best;
  for (int precision = 1; precision <= 17; ++precision) {
    const int len = std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    double parsed = 0.0;
    const auto result = std::from_chars(buf, buf + len, parsed);
    if (result.ec == std::errc() &&
        std::bit_cast<std::uint64_t>(parsed) == std::bit_cast<std::uint64_t>(value)) {
      if (best.empty() || static_cast<std::size_t>(len) < best.size()) best = buf;
    }
  }
  return best.empty() ? buf : best;
}

struct RunMeta {
  std::string run_id;
  double delta = 1.0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kRecordsCsvHeader =
    "run_id,delta,seed,backprop_count,epoch_equivalent,train_loss,train_top1,"
    "test_loss,test_top1,wall_seconds";

inline void emit_records_csv(const RunMeta& meta, const std::vector<MetricsRecord>& records,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write records CSV: " + path);
  out << kRecordsCsvHeader << "\n";
  for (const auto& r : records) {
    out << meta.run_id << ',' << format_double(meta.delta) << ',' << meta.seed << ','
        << r.backprop_count << ',' << format_double(r.epoch_equivalent) << ','
        << format_double(r.train_loss) << ',' << format_double(r.train_top1) << ','
        << format_double(r.test_loss) << ',' << format_double(r.test_top1) << ','
        << format_double(r.wall_seconds) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

struct ParsedRun {
  RunMeta meta;
  std::vector<MetricsRecord> records;
};

namespace detail {

inline double parse_double_field(std::string_view field, const std::string& path) {
  double value = 0.0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc() || result.ptr != field.data() + field.size()) {
    throw ParseError(path + ": bad numeric field '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

inline ParsedRun parse_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records CSV: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kRecordsCsvHeader) {
    throw FormatError(path + ": missing or unexpected records CSV header");
  }
  ParsedRun run;
  bool have_meta = false;
  std::vector<std::string_view> cells;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    detail::split_csv_line(line, cells);
    if (cells.size() != 10) {
      throw ParseError(path + ": expected 10 fields, got " + std::to_string(cells.size()));
    }
    if (!have_meta) {
      run.meta.run_id = std::string(cells[0]);
      run.meta.delta = detail::parse_double_field(cells[1], path);
      const auto seed_field = cells[2];
      const auto res = std::from_chars(seed_field.data(),
                                       seed_field.data() + seed_field.size(),
                                       run.meta.seed);
      if (res.ec != std::errc()) throw ParseError(path + ": bad seed field");
      have_meta = true;
    }
    MetricsRecord r;
    const auto count_field = cells[3];
    const auto res = std::from_chars(count_field.data(),
                                     count_field.data() + count_field.size(),
                                     r.backprop_count);
    if (res.ec != std::errc()) throw ParseError(path + ": bad backprop_count field");
    r.epoch_equivalent = detail::parse_double_field(cells[4], path);
    r.train_loss = detail::parse_double_field(cells[5], path);
    r.train_top1 = detail::parse_double_field(cells[6], path);
    r.test_loss = detail::parse_double_field(cells[7], path);
    r.test_top1 = detail::parse_double_field(cells[8], path);
    r.wall_seconds = detail::parse_double_field(cells[9], path);
    run.records.push_back(r);
  }
  return run;
}

// Per-run rollup: convergence epoch, final accuracies, timing and the full
// configuration echo.
struct RunSummary {
  std::string run_id;
  double delta = 1.0;
  std::uint64_t seed = 0;
  double convergence_epoch = 0.0;
  double final_train_top1 = 0.0;
  double final_test_top1 = 0.0;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double mean_iter_seconds = 0.0;  // delta-t
  double sort_seconds = 0.0;
  std::int64_t total_backprops = 0;
  int epochs = 0;
  int batch_size = 0;
  double learning_rate = 0.0;
  double momentum = 0.0;
  double tau = 0.0;
  int n_train_batches = 0;
  int n_test_batches = 0;
};

inline RunSummary summarize_run(const RunMeta& meta, const TrainConfig& config,
                                const RunState& state, const RunLog& log,
                                int n_train_batches, int n_test_batches, double tau) {
  RunSummary s;
  s.run_id = meta.run_id;
  s.delta = meta.delta;
  s.seed = meta.seed;
  if (log.records.size() >= 2) {
    s.convergence_epoch = detect_convergence_epoch(log.records, tau);
  } else if (!log.records.empty()) {
    s.convergence_epoch = log.records.back().epoch_equivalent;
  }
  if (!log.records.empty()) {
    const auto& last = log.records.back();
    s.final_train_top1 = last.train_top1;
    s.final_test_top1 = last.test_top1;
    s.final_train_loss = last.train_loss;
    s.final_test_loss = last.test_loss;
    s.mean_iter_seconds = compute_delta_t(log.records);
  }
  s.sort_seconds = log.sort_seconds;
  s.total_backprops = state.backprop_count;
  s.epochs = config.epochs;
  s.batch_size = config.batch_size;
  s.learning_rate = config.learning_rate;
  s.momentum = config.momentum;
  s.tau = tau;
  s.n_train_batches = n_train_batches;
  s.n_test_batches = n_test_batches;
  return s;
}

// Flat key=value document.
inline void emit_summary(const RunSummary& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write summary: " + path);
  out << "run_id=" << s.run_id << "\n"
      << "delta=" << format_double(s.delta) << "\n"
      << "seed=" << s.seed << "\n"
      << "epochs=" << s.epochs << "\n"
      << "batch_size=" << s.batch_size << "\n"
      << "learning_rate=" << format_double(s.learning_rate) << "\n"
      << "momentum=" << format_double(s.momentum) << "\n"
      << "tau=" << format_double(s.tau) << "\n"
      << "train_batches=" << s.n_train_batches << "\n"
      << "test_batches=" << s.n_test_batches << "\n"
      << "total_backprops=" << s.total_backprops << "\n"
      << "convergence_epoch=" << format_double(s.convergence_epoch) << "\n"
      << "final_train_loss=" << format_double(s.final_train_loss) << "\n"
      << "final_train_top1=" << format_double(s.final_train_top1) << "\n"
      << "final_test_loss=" << format_double(s.final_test_loss) << "\n"
      << "final_test_top1=" << format_double(s.final_test_top1) << "\n"
      << "mean_iter_seconds=" << format_double(s.mean_iter_seconds) << "\n"
      << "sort_seconds=" << format_double(s.sort_seconds) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace hardbatch
