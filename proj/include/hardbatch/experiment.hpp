#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "hardbatch/batching.hpp"
#include "hardbatch/dataset.hpp"
#include "hardbatch/errors.hpp"
#include "hardbatch/network.hpp"
#include "hardbatch/report.hpp"
#include "hardbatch/train.hpp"

namespace hardbatch {

// Full experiment definition: dataset source, model, training hyper-params,
// the delta ablation grid and the seed list.
struct ExperimentSpec {
  enum class Source { csv, idx, synth };

  Source source = Source::synth;
  std::string csv_path;
  std::string csv_label = "label";  // column name, or index if numeric
  bool csv_has_header = true;
  std::string idx_images;
  std::string idx_labels;
  long long synth_samples = 8000;
  std::vector<double> synth_fractions = {0.95, 0.05};
  int synth_dim = 16;
  double synth_separation = 1.6;
  double synth_noise = 1.0;

  std::vector<int> layers;  // empty -> [d, 32, C]
  int epochs = 30;
  int batch_size = 512;
  double learning_rate = 0.005;
  double momentum = 0.9;
  std::vector<double> delta_list = {1.0};
  std::vector<std::uint64_t> seeds = {1};
  double tau = 0.02;
  bool eval_every_round = false;

  std::string out_dir;  // empty -> $HARDBATCH_OUT_ROOT/experiment or runs/experiment
  bool report_delta_e = false;
  bool force = false;
};

struct HelpRequested {
  std::string text;
};

inline std::string default_out_dir() {
  const char* root = std::getenv("HARDBATCH_OUT_ROOT");
  const std::string base = (root && *root) ? root : "runs";
  return base + "/experiment";
}

namespace detail {

inline std::string source_name(ExperimentSpec::Source s) {
  switch (s) {
    case ExperimentSpec::Source::csv: return "csv";
    case ExperimentSpec::Source::idx: return "idx";
    default: return "synth";
  }
}

template <typename V, typename Fmt>
std::string join_list(const std::vector<V>& values, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += fmt(values[i]);
  }
  return out;
}

inline void validate_spec(const ExperimentSpec& spec) {
  if (spec.seeds.empty()) throw UsageError("at least one --seed is required");
  if (spec.delta_list.empty()) throw UsageError("at least one --delta is required");
  for (double d : spec.delta_list) {
    if (!(d > 0.0) || d > 1.0) throw UsageError("delta must be in (0,1]");
  }
  if (spec.epochs < 1) throw UsageError("--epochs must be at least 1");
  if (spec.batch_size < 1) throw UsageError("--batch-size must be at least 1");
  if (!(spec.learning_rate > 0.0)) throw UsageError("--lr must be positive");
  if (spec.momentum < 0.0 || spec.momentum >= 1.0) {
    throw UsageError("--momentum must be in [0, 1)");
  }
  if (!(spec.tau > 0.0)) throw UsageError("--tau must be positive");
  if (spec.source == ExperimentSpec::Source::csv && spec.csv_path.empty()) {
    throw UsageError("dataset csv requires --csv-path");
  }
  if (spec.source == ExperimentSpec::Source::idx &&
      (spec.idx_images.empty() || spec.idx_labels.empty())) {
    throw UsageError("dataset idx requires --idx-images and --idx-labels");
  }
  if (spec.report_delta_e &&
      std::find(spec.delta_list.begin(), spec.delta_list.end(), 1.0) ==
          spec.delta_list.end()) {
    throw UsageError("--report-delta-e requires a delta=1.0 baseline run");
  }
}

}  // namespace detail

// Command line (optionally backed by a config file; flags override the file).
// Throws UsageError on bad input, HelpRequested for --help.
inline ExperimentSpec parse_config(const std::vector<std::string>& args) {
  ExperimentSpec spec;
  CLI::App app{"mini-batch training engine with loss-ranked hard-batch scheduling"};
  app.set_config("--config", "", "config file (ini format); flags override file values");

  std::string dataset = "synth";
  app.add_option("--dataset", dataset, "dataset source: csv, idx or synth")
      ->check(CLI::IsMember({"csv", "idx", "synth"}))
      ->capture_default_str();
  app.add_option("--csv-path", spec.csv_path, "CSV file with one label column");
  app.add_option("--csv-label", spec.csv_label,
                 "label column name (or index when numeric / headerless)")
      ->capture_default_str();
  app.add_flag("!--csv-no-header", spec.csv_has_header,
               "CSV has no header row (label column given by index)");
  app.add_option("--idx-images", spec.idx_images, "IDX image file (MNIST format)");
  app.add_option("--idx-labels", spec.idx_labels, "IDX label file (MNIST format)");
  app.add_option("--synth-samples", spec.synth_samples, "synthetic blob sample count")
      ->capture_default_str();
  app.add_option("--synth-fractions", spec.synth_fractions,
                 "per-class fractions, must sum to 1")
      ->expected(-1);
  app.add_option("--synth-dim", spec.synth_dim, "synthetic feature dimension")
      ->capture_default_str();
  app.add_option("--synth-separation", spec.synth_separation,
                 "distance between synthetic class centers")
      ->capture_default_str();
  app.add_option("--synth-noise", spec.synth_noise, "synthetic cluster stddev")
      ->capture_default_str();

  app.add_option("--layers", spec.layers,
                 "MLP layer sizes incl. input and output, e.g. 16 32 2")
      ->expected(-1);
  app.add_option("--epochs", spec.epochs, "epoch budget E")->capture_default_str();
  app.add_option("--batch-size", spec.batch_size, "mini-batch size B")
      ->capture_default_str();
  app.add_option("--lr", spec.learning_rate, "learning rate")->capture_default_str();
  app.add_option("--momentum", spec.momentum, "SGD momentum")->capture_default_str();

  auto delta_range = CLI::Validator(
      [](std::string& value) -> std::string {
        double v = 0.0;
        const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size() ||
            !(v > 0.0) || v > 1.0) {
          return "delta must be in (0,1]";
        }
        return {};
      },
      "DELTA");
  app.add_option("--delta", spec.delta_list,
                 "mini-batch selection fraction, repeatable for sweeps")
      ->expected(-1)
      ->check(delta_range);
  app.add_option("--seed", spec.seeds, "run seed, repeatable")->expected(-1);
  app.add_option("--tau", spec.tau, "convergence tolerance for e detection")
      ->capture_default_str();
  app.add_flag("--eval-every-round", spec.eval_every_round,
               "evaluate the test set at the start of every selection round");
  app.add_option("--out", spec.out_dir, "output directory (default from HARDBATCH_OUT_ROOT)");
  app.add_flag("--report-delta-e", spec.report_delta_e,
               "require a delta=1.0 baseline and report delta-e against it");
  app.add_flag("--force", spec.force, "overwrite an existing output directory");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("hardbatch");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (dataset == "csv") spec.source = ExperimentSpec::Source::csv;
  else if (dataset == "idx") spec.source = ExperimentSpec::Source::idx;
  else spec.source = ExperimentSpec::Source::synth;
  if (spec.out_dir.empty()) spec.out_dir = default_out_dir();
  detail::validate_spec(spec);
  return spec;
}

namespace detail {

// CSV/IDX sources bring a single table; split it stratified 80/20 in file
// order so the split is deterministic and identical for every seed.
template <typename T>
std::pair<Dataset<T>, Dataset<T>> stratified_split(const Dataset<T>& ds) {
  std::vector<long long> per_class(static_cast<std::size_t>(ds.num_classes), 0);
  for (int label : ds.labels) ++per_class[static_cast<std::size_t>(label)];
  std::vector<long long> train_quota(per_class.size());
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    train_quota[c] = std::llround(0.8 * static_cast<double>(per_class[c]));
  }
  Dataset<T> train, test;
  train.split_tag = "train";
  test.split_tag = "test";
  train.num_classes = test.num_classes = ds.num_classes;
  train.class_map = test.class_map = ds.class_map;
  const std::size_t dim = ds.dim();
  std::vector<T> train_rows, test_rows;
  std::vector<long long> seen(per_class.size(), 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    const bool to_train = seen[c]++ < train_quota[c];
    auto& rows = to_train ? train_rows : test_rows;
    auto& labels = to_train ? train.labels : test.labels;
    for (std::size_t j = 0; j < dim; ++j) rows.push_back(ds.features.at(i, j));
    labels.push_back(ds.labels[i]);
  }
  train.features = Tensor<T>::from({train.labels.size(), dim}, std::move(train_rows));
  test.features = Tensor<T>::from({test.labels.size(), dim}, std::move(test_rows));
  return {std::move(train), std::move(test)};
}

template <typename T>
std::pair<Dataset<T>, Dataset<T>> load_datasets(const ExperimentSpec& spec) {
  switch (spec.source) {
    case ExperimentSpec::Source::synth:
      return synth_imbalanced_blobs<T>(spec.synth_samples, spec.synth_fractions,
                                       spec.synth_dim, spec.synth_separation,
                                       spec.synth_noise,
                                       spec.seeds.empty() ? 1 : spec.seeds.front());
    case ExperimentSpec::Source::csv: {
      CsvSchema schema;
      schema.has_header = spec.csv_has_header;
      if (!spec.csv_label.empty() &&
          spec.csv_label.find_first_not_of("0123456789") == std::string::npos) {
        schema.label_index = std::stoi(spec.csv_label);
      } else {
        schema.label_name = spec.csv_label;
      }
      return stratified_split(load_csv<T>(spec.csv_path, schema));
    }
    case ExperimentSpec::Source::idx:
      return stratified_split(load_idx<T>(spec.idx_images, spec.idx_labels));
  }
  throw ConfigError("unknown dataset source");
}

inline void write_spec_echo(const ExperimentSpec& spec, const std::vector<int>& layers,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write spec echo: " + path.string());
  out << "dataset=" << source_name(spec.source) << "\n";
  if (spec.source == ExperimentSpec::Source::csv) {
    out << "csv_path=" << spec.csv_path << "\n"
        << "csv_label=" << spec.csv_label << "\n"
        << "csv_has_header=" << (spec.csv_has_header ? 1 : 0) << "\n";
  } else if (spec.source == ExperimentSpec::Source::idx) {
    out << "idx_images=" << spec.idx_images << "\n"
        << "idx_labels=" << spec.idx_labels << "\n";
  } else {
    out << "synth_samples=" << spec.synth_samples << "\n"
        << "synth_fractions="
        << join_list(spec.synth_fractions, [](double v) { return format_double(v); })
        << "\n"
        << "synth_dim=" << spec.synth_dim << "\n"
        << "synth_separation=" << format_double(spec.synth_separation) << "\n"
        << "synth_noise=" << format_double(spec.synth_noise) << "\n";
  }
  out << "layers=" << join_list(layers, [](int v) { return std::to_string(v); }) << "\n"
      << "epochs=" << spec.epochs << "\n"
      << "batch_size=" << spec.batch_size << "\n"
      << "lr=" << format_double(spec.learning_rate) << "\n"
      << "momentum=" << format_double(spec.momentum) << "\n"
      << "delta_list="
      << join_list(spec.delta_list, [](double v) { return format_double(v); }) << "\n"
      << "seeds=" << join_list(spec.seeds, [](std::uint64_t v) { return std::to_string(v); })
      << "\n"
      << "tau=" << format_double(spec.tau) << "\n"
      << "eval_every_round=" << (spec.eval_every_round ? 1 : 0) << "\n"
      << "report_delta_e=" << (spec.report_delta_e ? 1 : 0) << "\n";
}

}  // namespace detail

struct ComparisonStats {
  double mean = 0.0;
  double half_width = 0.0;  // (max - min) / 2 over seeds
};

struct ComparisonRow {
  double delta = 1.0;
  int num_seeds = 0;
  ComparisonStats train_top1;
  ComparisonStats test_top1;
  ComparisonStats convergence_epoch;
  ComparisonStats delta_e;         // vs the delta=1 baseline, paired by seed
  ComparisonStats mean_iter_seconds;
  double delta_delta_t = 0.0;      // mean paired delta-t difference vs baseline
};

struct Comparison {
  std::vector<ComparisonRow> rows;  // baseline (delta=1) first
};

namespace detail {

inline ComparisonStats stats_over(const std::vector<double>& values) {
  ComparisonStats s;
  if (values.empty()) return s;
  double sum = 0.0, lo = values[0], hi = values[0];
  for (double v : values) {
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  s.mean = sum / static_cast<double>(values.size());
  s.half_width = (hi - lo) / 2.0;
  return s;
}

}  // namespace detail

// Paper-style table: per-delta rows of mean +/- half-width over seeds for
// train/test top-1, convergence epoch e, delta-e and delta-t. All summaries
// must come from one sweep (same E, B and dataset partition).
inline Comparison compare_runs(const std::vector<RunSummary>& summaries) {
  if (summaries.empty()) throw DataError("no run summaries to compare");
  for (const auto& s : summaries) {
    if (s.epochs != summaries.front().epochs ||
        s.batch_size != summaries.front().batch_size ||
        s.n_train_batches != summaries.front().n_train_batches ||
        s.n_test_batches != summaries.front().n_test_batches) {
      throw DataError("runs have mismatched configurations (epochs/batch/dataset)");
    }
  }

  std::map<std::uint64_t, const RunSummary*> baseline_by_seed;
  for (const auto& s : summaries) {
    if (s.delta == 1.0) baseline_by_seed[s.seed] = &s;
  }
  if (baseline_by_seed.empty()) {
    throw DataError("comparison requires at least one delta=1.0 baseline run");
  }

  std::map<double, std::vector<const RunSummary*>> by_delta;
  for (const auto& s : summaries) by_delta[s.delta].push_back(&s);

  Comparison cmp;
  for (auto it = by_delta.rbegin(); it != by_delta.rend(); ++it) {  // delta=1 first
    const auto& group = it->second;
    ComparisonRow row;
    row.delta = it->first;
    row.num_seeds = static_cast<int>(group.size());
    std::vector<double> train_top1, test_top1, e_values, delta_e, iter_s, ddt;
    for (const RunSummary* s : group) {
      const auto base = baseline_by_seed.find(s->seed);
      if (base == baseline_by_seed.end()) {
        throw DataError("no delta=1.0 baseline for seed " + std::to_string(s->seed));
      }
      train_top1.push_back(s->final_train_top1);
      test_top1.push_back(s->final_test_top1);
      e_values.push_back(s->convergence_epoch);
      delta_e.push_back(
          compute_delta_e(base->second->convergence_epoch, s->convergence_epoch));
      iter_s.push_back(s->mean_iter_seconds);
      ddt.push_back(s->mean_iter_seconds - base->second->mean_iter_seconds);
    }
    row.train_top1 = detail::stats_over(train_top1);
    row.test_top1 = detail::stats_over(test_top1);
    row.convergence_epoch = detail::stats_over(e_values);
    row.delta_e = detail::stats_over(delta_e);
    row.mean_iter_seconds = detail::stats_over(iter_s);
    row.delta_delta_t = detail::stats_over(ddt).mean;
    cmp.rows.push_back(row);
  }
  return cmp;
}

inline void emit_comparison(const Comparison& cmp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write comparison: " + path);
  char line[256];
  out << "delta  seeds  train_top1(%)        test_top1(%)         e                 "
         "delta_e(%)        delta_t(s)      delta_delta_t(s)\n";
  for (const auto& r : cmp.rows) {
    std::snprintf(line, sizeof(line),
                  "%-6g %-6d %7.2f +- %-8.2f %7.2f +- %-8.2f %7.3f +- %-7.3f "
                  "%7.2f +- %-7.2f %.6e  %+.6e\n",
                  r.delta, r.num_seeds, r.train_top1.mean, r.train_top1.half_width,
                  r.test_top1.mean, r.test_top1.half_width, r.convergence_epoch.mean,
                  r.convergence_epoch.half_width, r.delta_e.mean, r.delta_e.half_width,
                  r.mean_iter_seconds.mean, r.delta_delta_t);
    out << line;
  }
  out << "\n";
  for (const auto& r : cmp.rows) {
    const std::string prefix = "delta_" + format_double(r.delta) + ".";
    out << prefix << "seeds=" << r.num_seeds << "\n"
        << prefix << "train_top1_mean=" << format_double(r.train_top1.mean) << "\n"
        << prefix << "train_top1_hw=" << format_double(r.train_top1.half_width) << "\n"
        << prefix << "test_top1_mean=" << format_double(r.test_top1.mean) << "\n"
        << prefix << "test_top1_hw=" << format_double(r.test_top1.half_width) << "\n"
        << prefix << "e_mean=" << format_double(r.convergence_epoch.mean) << "\n"
        << prefix << "e_hw=" << format_double(r.convergence_epoch.half_width) << "\n"
        << prefix << "delta_e_mean=" << format_double(r.delta_e.mean) << "\n"
        << prefix << "delta_e_hw=" << format_double(r.delta_e.half_width) << "\n"
        << prefix << "delta_t_mean=" << format_double(r.mean_iter_seconds.mean) << "\n"
        << prefix << "delta_delta_t=" << format_double(r.delta_delta_t) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

struct SweepResult {
  std::filesystem::path out_dir;
  std::vector<RunSummary> summaries;
  std::optional<Comparison> comparison;
};

// Runs the whole sweep: per (seed, delta) a fresh seeded network, a BatchPlan
// shared across deltas of the same seed, one records CSV and one summary per
// run, plus a comparison document when a delta=1.0 baseline is present.
// Throws on error; aborts at the first diverging run leaving a FAILED marker.
inline SweepResult execute_sweep(const ExperimentSpec& spec) {
  detail::validate_spec(spec);
  namespace fs = std::filesystem;
  const fs::path out_dir = spec.out_dir.empty() ? fs::path(default_out_dir())
                                                : fs::path(spec.out_dir);
  if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
    if (!spec.force) {
      throw UsageError("output directory " + out_dir.string() +
                       " already exists; pass --force to overwrite");
    }
    fs::remove_all(out_dir);
  }
  fs::create_directories(out_dir);

  auto [train, test] = detail::load_datasets<float>(spec);
  if (train.num_classes < 2) throw DataError("dataset has fewer than 2 classes");
  standardize(train, test);

  std::vector<int> layers = spec.layers;
  if (layers.empty()) {
    layers = {static_cast<int>(train.dim()), 32, train.num_classes};
  } else {
    if (layers.size() < 2) throw UsageError("--layers needs at least input and output sizes");
    if (layers.front() != static_cast<int>(train.dim())) {
      throw UsageError("--layers input size " + std::to_string(layers.front()) +
                       " does not match feature dimension " + std::to_string(train.dim()));
    }
    if (layers.back() != train.num_classes) {
      throw UsageError("--layers output size " + std::to_string(layers.back()) +
                       " does not match class count " + std::to_string(train.num_classes));
    }
  }
  detail::write_spec_echo(spec, layers, out_dir / "spec_resolved.txt");

  SweepResult result;
  result.out_dir = out_dir;
  for (std::uint64_t seed : spec.seeds) {
    const BatchPlan<float> plan = make_batches(train, test, spec.batch_size, seed);
    for (double delta : spec.delta_list) {
      RunMeta meta;
      meta.delta = delta;
      meta.seed = seed;
      meta.run_id = "delta" + format_double(delta) + "_seed" + std::to_string(seed);
      const fs::path run_dir = out_dir / meta.run_id;
      fs::create_directories(run_dir);

      MLPNetwork<float> net = init_network<float>(layers, seed);
      TrainConfig config;
      config.epochs = spec.epochs;
      config.batch_size = spec.batch_size;
      config.delta = delta;
      config.learning_rate = spec.learning_rate;
      config.momentum = spec.momentum;
      config.seed = seed;
      config.eval_every_round = spec.eval_every_round;

      RunLog log;
      RunState state;
      try {
        state = train_proposed(net, plan, config, log);
      } catch (const DivergenceError& e) {
        emit_records_csv(meta, log.records, (run_dir / "records.csv").string());
        std::ofstream marker(run_dir / "FAILED");
        marker << e.what() << "\n";
        throw;
      }
      emit_records_csv(meta, log.records, (run_dir / "records.csv").string());
      const RunSummary summary =
          summarize_run(meta, config, state, log, plan.num_train_batches(),
                        plan.num_test_batches(), spec.tau);
      emit_summary(summary, (run_dir / "summary.txt").string());
      result.summaries.push_back(summary);
    }
  }

  const bool has_baseline = std::find(spec.delta_list.begin(), spec.delta_list.end(),
                                      1.0) != spec.delta_list.end();
  if (has_baseline && spec.delta_list.size() > 1) {
    result.comparison = compare_runs(result.summaries);
    emit_comparison(*result.comparison, (out_dir / "comparison.txt").string());
  }
  return result;
}

// CLI entry point semantics: exit 0 on success, 1 usage, 2 data/format,
// 3 divergence.
inline int run_experiment(const ExperimentSpec& spec) {
  try {
    execute_sweep(spec);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "error: training diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace hardbatch
