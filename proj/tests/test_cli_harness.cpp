#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hardbatch/dataset.hpp"
#include "hardbatch/experiment.hpp"

using namespace hardbatch;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    const auto base = fs::temp_directory_path();
    while (true) {
      auto candidate = base / ("hardbatch_cli_" + std::to_string(counter++));
      std::error_code ec;
      if (fs::create_directory(candidate, ec)) {
        path = candidate;
        return;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Everything except the trailing wall_seconds column.
std::string strip_wall_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out += line.substr(0, cut);
    out += "\n";
  }
  return out;
}

// Small but non-trivial sweep spec on synthetic blobs.
ExperimentSpec tiny_spec(const fs::path& out) {
  ExperimentSpec spec;
  spec.source = ExperimentSpec::Source::synth;
  spec.synth_samples = 250;
  spec.synth_fractions = {0.5, 0.5};
  spec.synth_dim = 4;
  spec.synth_separation = 4.0;
  spec.synth_noise = 1.0;
  spec.layers = {4, 8, 2};
  spec.epochs = 3;
  spec.batch_size = 16;
  spec.learning_rate = 0.01;
  spec.momentum = 0.9;
  spec.delta_list = {1.0, 0.5};
  spec.seeds = {1, 2};
  spec.out_dir = out.string();
  return spec;
}

RunSummary make_summary(double delta, std::uint64_t seed, double e, double test_top1,
                        double iter_seconds = 1e-4) {
  RunSummary s;
  s.run_id = "delta" + format_double(delta) + "_seed" + std::to_string(seed);
  s.delta = delta;
  s.seed = seed;
  s.convergence_epoch = e;
  s.final_train_top1 = 99.0;
  s.final_test_top1 = test_top1;
  s.mean_iter_seconds = iter_seconds;
  s.epochs = 30;
  s.batch_size = 64;
  s.n_train_batches = 100;
  s.n_test_batches = 25;
  return s;
}

}  // namespace

TEST_CASE("parse_config rejects out-of-range delta with a clear message") {
  try {
    parse_config({"--delta", "1.5"});
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("delta must be in (0,1]") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config({"--delta", "0"}), UsageError);
  CHECK_THROWS_AS(parse_config({"--delta", "-0.2"}), UsageError);
}

TEST_CASE("parse_config defaults follow the reference setup") {
  const auto spec = parse_config({});
  CHECK(spec.learning_rate == 0.005);
  CHECK(spec.momentum == 0.9);
  CHECK(spec.batch_size == 512);
  CHECK(spec.epochs == 30);
  CHECK(spec.tau == 0.02);
  CHECK(spec.delta_list == std::vector<double>{1.0});
  CHECK(spec.seeds == std::vector<std::uint64_t>{1});
  CHECK(spec.source == ExperimentSpec::Source::synth);
  CHECK(!spec.out_dir.empty());
}

TEST_CASE("command-line flags override config file values") {
  TempDir dir;
  const auto cfg = dir.path / "exp.ini";
  std::ofstream(cfg) << "lr=0.005\nmomentum=0.8\nepochs=12\n";

  const auto file_only = parse_config({"--config", cfg.string()});
  CHECK(file_only.learning_rate == 0.005);
  CHECK(file_only.momentum == 0.8);
  CHECK(file_only.epochs == 12);

  const auto overridden = parse_config({"--config", cfg.string(), "--lr", "0.01"});
  CHECK(overridden.learning_rate == 0.01);
  CHECK(overridden.momentum == 0.8);  // file value survives
}

TEST_CASE("parse_config accepts repeatable delta and seed lists") {
  const auto spec =
      parse_config({"--delta", "1.0", "--delta", "0.2", "--seed", "1", "--seed", "2",
                    "--seed", "3"});
  CHECK(spec.delta_list == std::vector<double>{1.0, 0.2});
  CHECK(spec.seeds == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("parse_config maps dataset flags onto the experiment spec") {
  const auto spec = parse_config({"--dataset", "csv", "--csv-path", "d.csv",
                                  "--csv-no-header", "--csv-label", "0"});
  CHECK(spec.source == ExperimentSpec::Source::csv);
  CHECK(spec.csv_path == "d.csv");
  CHECK(spec.csv_has_header == false);
  CHECK(spec.csv_label == "0");

  const auto idx = parse_config({"--dataset", "idx", "--idx-images", "i.idx",
                                 "--idx-labels", "l.idx"});
  CHECK(idx.source == ExperimentSpec::Source::idx);
  CHECK(idx.idx_images == "i.idx");
}

TEST_CASE("parse_config usage errors") {
  CHECK_THROWS_AS(parse_config({"--no-such-flag"}), UsageError);
  CHECK_THROWS_AS(parse_config({"--dataset", "csv"}), UsageError);  // missing path
  CHECK_THROWS_AS(parse_config({"--dataset", "idx"}), UsageError);
  CHECK_THROWS_AS(parse_config({"--dataset", "tfrecord"}), UsageError);
  CHECK_THROWS_AS(parse_config({"--delta", "0.5", "--report-delta-e"}), UsageError);
  CHECK_THROWS_AS(parse_config({"--momentum", "1.0"}), UsageError);
  CHECK_THROWS_AS(parse_config({"--epochs", "0"}), UsageError);
  CHECK_THROWS_AS(parse_config({"--tau", "0"}), UsageError);
  CHECK_NOTHROW(parse_config({"--delta", "0.5", "--delta", "1.0", "--report-delta-e"}));
  CHECK_THROWS_AS(parse_config({"--help"}), HelpRequested);
}

TEST_CASE("default output directory honors HARDBATCH_OUT_ROOT") {
  ::setenv("HARDBATCH_OUT_ROOT", "/tmp/hb_root_test", 1);
  CHECK(default_out_dir() == "/tmp/hb_root_test/experiment");
  ::unsetenv("HARDBATCH_OUT_ROOT");
  CHECK(default_out_dir() == "runs/experiment");
}

TEST_CASE("a sweep produces one records CSV and summary per run plus a comparison") {
  TempDir dir;
  const auto out = dir.path / "sweep";
  const auto spec = tiny_spec(out);
  const auto result = execute_sweep(spec);
  CHECK(result.summaries.size() == 4);  // 2 deltas x 2 seeds
  CHECK(result.comparison.has_value());

  int csv_count = 0, summary_count = 0;
  for (double delta : {1.0, 0.5}) {
    for (int seed : {1, 2}) {
      const auto run_dir =
          out / ("delta" + format_double(delta) + "_seed" + std::to_string(seed));
      csv_count += fs::exists(run_dir / "records.csv");
      summary_count += fs::exists(run_dir / "summary.txt");
    }
  }
  CHECK(csv_count == 4);
  CHECK(summary_count == 4);
  CHECK(fs::exists(out / "comparison.txt"));
  CHECK(fs::exists(out / "spec_resolved.txt"));

  const auto echo = read_file(out / "spec_resolved.txt");
  CHECK(echo.find("dataset=synth\n") != std::string::npos);
  CHECK(echo.find("delta_list=1,0.5\n") != std::string::npos);
  CHECK(echo.find("seeds=1,2\n") != std::string::npos);
}

TEST_CASE("reruns refuse to overwrite unless forced, then reproduce bitwise") {
  TempDir dir;
  const auto out = dir.path / "sweep";
  auto spec = tiny_spec(out);
  execute_sweep(spec);
  const auto first = read_file(out / "delta0.5_seed1" / "records.csv");

  CHECK_THROWS_AS(execute_sweep(spec), UsageError);
  CHECK(run_experiment(spec) == 1);

  spec.force = true;
  execute_sweep(spec);
  const auto second = read_file(out / "delta0.5_seed1" / "records.csv");
  CHECK(strip_wall_column(first) == strip_wall_column(second));
  CHECK(!first.empty());
}

TEST_CASE("sweeps run from an IDX dataset source") {
  TempDir dir;
  const auto img_path = dir.path / "images.idx";
  const auto lab_path = dir.path / "labels.idx";
  {
    // 120 tiny 3x3 images, two intensity classes
    std::string img, lab;
    const auto be32 = [](std::string& s, std::uint32_t v) {
      s.push_back(static_cast<char>((v >> 24) & 0xff));
      s.push_back(static_cast<char>((v >> 16) & 0xff));
      s.push_back(static_cast<char>((v >> 8) & 0xff));
      s.push_back(static_cast<char>(v & 0xff));
    };
    be32(img, 0x00000803u);
    be32(img, 120);
    be32(img, 3);
    be32(img, 3);
    be32(lab, 0x00000801u);
    be32(lab, 120);
    for (int i = 0; i < 120; ++i) {
      const unsigned char base = (i % 2) ? 210 : 40;
      for (int p = 0; p < 9; ++p) {
        img.push_back(static_cast<char>(base + (i * 7 + p * 13) % 32));
      }
      lab.push_back(static_cast<char>(i % 2));
    }
    std::ofstream(img_path, std::ios::binary) << img;
    std::ofstream(lab_path, std::ios::binary) << lab;
  }

  ExperimentSpec spec;
  spec.source = ExperimentSpec::Source::idx;
  spec.idx_images = img_path.string();
  spec.idx_labels = lab_path.string();
  spec.epochs = 2;
  spec.batch_size = 8;
  spec.learning_rate = 0.01;
  spec.delta_list = {1.0};
  spec.seeds = {2};
  spec.out_dir = (dir.path / "out").string();
  CHECK(run_experiment(spec) == 0);
  CHECK(fs::exists(dir.path / "out" / "delta1_seed2" / "summary.txt"));
}

TEST_CASE("sweeps run from a CSV dataset source") {
  TempDir dir;
  auto [train, test] = synth_imbalanced_blobs<float>(200, {0.5, 0.5}, 4, 5.0, 1.0, 9);
  (void)test;
  const auto csv = dir.path / "data.csv";
  save_csv(train, csv.string());

  ExperimentSpec spec;
  spec.source = ExperimentSpec::Source::csv;
  spec.csv_path = csv.string();
  spec.layers = {};  // derive from the data
  spec.epochs = 2;
  spec.batch_size = 16;
  spec.learning_rate = 0.01;
  spec.delta_list = {1.0};
  spec.seeds = {4};
  spec.out_dir = (dir.path / "out").string();
  CHECK(run_experiment(spec) == 0);
  CHECK(fs::exists(dir.path / "out" / "delta1_seed4" / "records.csv"));
}

TEST_CASE("diverging runs leave a FAILED marker and exit code 3") {
  TempDir dir;
  auto spec = tiny_spec(dir.path / "diverge");
  spec.learning_rate = 1e30;
  spec.delta_list = {1.0};
  spec.seeds = {1};
  CHECK(run_experiment(spec) == 3);
  CHECK(fs::exists(dir.path / "diverge" / "delta1_seed1" / "FAILED"));
  CHECK(fs::exists(dir.path / "diverge" / "delta1_seed1" / "records.csv"));
}

TEST_CASE("compare_runs pairs variants with their baseline by seed") {
  const std::vector<RunSummary> summaries = {
      make_summary(1.0, 1, 77.0, 60.0), make_summary(0.2, 1, 70.0, 59.0)};
  const auto cmp = compare_runs(summaries);
  REQUIRE(cmp.rows.size() == 2);
  CHECK(cmp.rows[0].delta == 1.0);
  CHECK(cmp.rows[0].delta_e.mean == doctest::Approx(0.0));
  CHECK(cmp.rows[1].delta == 0.2);
  CHECK(cmp.rows[1].delta_e.mean == doctest::Approx(10.0));
  CHECK(cmp.rows[1].num_seeds == 1);
  CHECK(cmp.rows[1].delta_e.half_width == 0.0);
}

TEST_CASE("compare_runs aggregates seeds with mean and half-width") {
  const std::vector<RunSummary> summaries = {
      make_summary(1.0, 1, 30.0, 60.0), make_summary(1.0, 2, 34.0, 62.0),
      make_summary(1.0, 3, 38.0, 61.0), make_summary(0.5, 1, 24.0, 59.0),
      make_summary(0.5, 2, 30.0, 64.0), make_summary(0.5, 3, 30.0, 63.0)};
  const auto cmp = compare_runs(summaries);
  REQUIRE(cmp.rows.size() == 2);
  const auto& variant = cmp.rows[1];
  CHECK(variant.delta == 0.5);
  CHECK(variant.num_seeds == 3);
  CHECK(variant.convergence_epoch.mean == doctest::Approx(28.0));
  CHECK(variant.convergence_epoch.half_width == doctest::Approx(3.0));
  // paired delta_e: 100*(30-24)/24 = 25, 100*(34-30)/30 = 13.33.., 100*(38-30)/30 = 26.66..
  CHECK(variant.delta_e.mean ==
        doctest::Approx((25.0 + 100.0 * 4.0 / 30.0 + 100.0 * 8.0 / 30.0) / 3.0));
  CHECK(variant.test_top1.mean == doctest::Approx(62.0));
  CHECK(variant.test_top1.half_width == doctest::Approx(2.5));
}

TEST_CASE("compare_runs rejects mismatched run configurations") {
  auto a = make_summary(1.0, 1, 30.0, 60.0);
  auto b = make_summary(0.5, 1, 24.0, 59.0);
  b.epochs = 40;
  CHECK_THROWS_AS(compare_runs({a, b}), DataError);

  auto c = make_summary(0.5, 2, 24.0, 59.0);  // seed without baseline
  CHECK_THROWS_AS(compare_runs({a, c}), DataError);

  CHECK_THROWS_AS(compare_runs({b}), DataError);  // no baseline at all
}

TEST_CASE("comparison document has one delta_e entry per non-baseline delta") {
  const std::vector<RunSummary> summaries = {
      make_summary(1.0, 1, 30.0, 60.0), make_summary(0.5, 1, 24.0, 59.0),
      make_summary(0.2, 1, 20.0, 58.0)};
  const auto cmp = compare_runs(summaries);
  TempDir dir;
  const auto path = (dir.path / "comparison.txt").string();
  emit_comparison(cmp, path);
  const auto text = read_file(path);
  CHECK(text.find("delta_0.5.delta_e_mean=25\n") != std::string::npos);
  CHECK(text.find("delta_0.2.delta_e_mean=50\n") != std::string::npos);
  CHECK(text.find("delta_1.delta_e_mean=0\n") != std::string::npos);
}
