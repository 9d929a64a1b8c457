#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "trap/errors.hpp"
#include "trap/generator.hpp"
#include "trap/grid.hpp"
#include "trap/io.hpp"
#include "trap/ldp.hpp"
#include "trap/rng.hpp"
#include "trap/victim.hpp"

using trap::BundleFormat;
using trap::CellTrajectory;
using trap::FakeTrajectorySet;
using trap::GridSpec;
using trap::GridTraceReport;
using trap::TargetPatternSet;
using trap::TrajectoryDataset;

namespace {

// Unique temp path per test body; removed on destruction.
class TempFile {
 public:
  explicit TempFile(const std::string& name)
      : path_((std::filesystem::temp_directory_path() / ("trajpoison_test_" + name)).string()) {
    std::filesystem::remove(path_);
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
    std::filesystem::remove(path_ + ".manifest.json", ec);
  }
  [[nodiscard]] const std::string& path() const { return path_; }

  void write(const std::string& content) const {
    std::ofstream out(path_);
    out << content;
  }

 private:
  std::string path_;
};

GridSpec square(int n) {
  GridSpec spec;
  spec.rows = n;
  spec.cols = n;
  spec.min_lat = spec.min_lon = 0.0;
  spec.max_lat = spec.max_lon = n;
  return spec;
}

}  // namespace

TEST_CASE("trajectory csv round-trip in cell format") {
  TempFile f("cells.csv");
  TrajectoryDataset data;
  data.trajectories = {{0, 1, 2}, {15}, {7, 6}};
  trap::write_trajectory_csv(f.path(), data);
  const TrajectoryDataset back = trap::read_trajectory_csv(f.path(), square(4));
  CHECK(back.trajectories == data.trajectories);
}

TEST_CASE("trajectory csv accepts lat/lon rows and discretizes them") {
  TempFile f("latlon.csv");
  f.write(
      "traj_id,step,lat,lon\n"
      "a,0,0.5,0.5\n"
      "a,1,0.5,2.5\n"
      "b,0,3.5,3.5\n");
  const TrajectoryDataset data = trap::read_trajectory_csv(f.path(), square(4));
  REQUIRE(data.size() == 2);
  // (0.5,0.5) -> cell 0; the jump to (0.5,2.5) bridges through cell 1.
  CHECK(data.trajectories[0] == CellTrajectory{0, 1, 2});
  CHECK(data.trajectories[1] == CellTrajectory{15});
}

TEST_CASE("trajectory csv reports the offending line") {
  TempFile f("bad.csv");

  SUBCASE("bad integer") {
    f.write("traj_id,step,cell\nu,0,abc\n");
    try {
      trap::read_trajectory_csv(f.path(), square(4));
      FAIL("expected DataError");
    } catch (const trap::DataError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("non-contiguous steps") {
    f.write("traj_id,step,cell\nu,0,1\nu,2,2\n");
    CHECK_THROWS_AS(trap::read_trajectory_csv(f.path(), square(4)), trap::DataError);
  }
  SUBCASE("split trajectory blocks") {
    f.write("traj_id,step,cell\nu,0,1\nv,0,2\nu,1,3\n");
    CHECK_THROWS_AS(trap::read_trajectory_csv(f.path(), square(4)), trap::DataError);
  }
  SUBCASE("unknown header") {
    f.write("id,when,where\nu,0,1\n");
    CHECK_THROWS_AS(trap::read_trajectory_csv(f.path(), square(4)), trap::DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(trap::read_trajectory_csv("/nonexistent/nope.csv", square(4)),
                    trap::DataError);
  }
  SUBCASE("cell outside the grid") {
    f.write("traj_id,step,cell\nu,0,99\n");
    CHECK_THROWS_AS(trap::read_trajectory_csv(f.path(), square(4)), trap::DataError);
  }
}

TEST_CASE("fake set round-trip preserves the manifest fields") {
  TempFile f("fakes.csv");
  FakeTrajectorySet fakes;
  fakes.trajectories = {{0, 1}, {0, 1}, {2}};
  fakes.per_length = {{1, 1}, {2, 2}};
  fakes.requested = {{1, 1}, {2, 2}};
  fakes.max_rep = 2;
  fakes.seed = 987654321;
  fakes.total_score = 13.5;
  fakes.under_filled = false;
  trap::write_fake_set(f.path(), fakes);

  const FakeTrajectorySet back = trap::read_fake_set(f.path());
  CHECK(back.trajectories == fakes.trajectories);
  CHECK(back.per_length == fakes.per_length);
  CHECK(back.requested == fakes.requested);
  CHECK(back.max_rep == 2);
  CHECK(back.seed == 987654321);
  CHECK(back.total_score == doctest::Approx(13.5));
  CHECK_FALSE(back.under_filled);
}

TEST_CASE("fake set read fails without the manifest") {
  TempFile f("orphan.csv");
  f.write("traj_id,step,cell\nf0,0,1\n");
  CHECK_THROWS_AS(trap::read_fake_set(f.path()), trap::DataError);
}

TEST_CASE("target patterns round-trip") {
  TempFile f("patterns.csv");
  TargetPatternSet tp;
  tp.patterns = {{{0, 1}, 1.0}, {{0, 1, 2}, 2.5}, {{1, 3}, 1.0}};
  tp.k_min = 2;
  tp.k_max = 3;
  trap::write_target_patterns(f.path(), tp);
  const TargetPatternSet back = trap::read_target_patterns(f.path());
  REQUIRE(back.patterns.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.patterns[i].cells == tp.patterns[i].cells);
    CHECK(back.patterns[i].score == doctest::Approx(tp.patterns[i].score));
  }
  // Bounds are recomputed from the observed lengths.
  CHECK(back.k_min == 2);
  CHECK(back.k_max == 3);
}

TEST_CASE("report bundles round-trip in both formats") {
  // Build a few real bundles through the client.
  trap::GridTraceConfig cfg;
  cfg.eps = 1.0;
  cfg.grid = square(4);
  cfg.max_len = 8;
  trap::Rng base(5);
  std::vector<GridTraceReport> bundles;
  bundles.push_back(trap::grid_trace_client({0, 1, 5}, cfg, 3, base.split(0)));
  bundles.push_back(trap::grid_trace_client({10}, cfg, 3, base.split(1)));
  bundles.push_back(trap::grid_trace_client({3, 7, 6, 2, 1}, cfg, 2, base.split(2)));

  for (auto format : {BundleFormat::kJsonLines, BundleFormat::kBinary}) {
    TempFile f(format == BundleFormat::kJsonLines ? "bundles.jsonl" : "bundles.bin");
    trap::write_report_bundles(f.path(), bundles, format);
    const std::vector<GridTraceReport> back = trap::read_report_bundles(f.path(), format);
    REQUIRE(back.size() == bundles.size());
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      CAPTURE(i);
      CHECK(back[i].length_report == bundles[i].length_report);
      CHECK(back[i].begin == bundles[i].begin);
      CHECK(back[i].intra == bundles[i].intra);
      CHECK(back[i].terminate == bundles[i].terminate);
    }
  }
}

TEST_CASE("binary bundle reader rejects a corrupt header") {
  TempFile f("corrupt.bin");
  f.write("this is not a bundle file at all");
  CHECK_THROWS_AS(trap::read_report_bundles(f.path(), BundleFormat::kBinary),
                  trap::DataError);
}

TEST_CASE("config files parse comments, blanks, and key = value lines") {
  TempFile f("run.cfg");
  f.write(
      "# experiment configuration\n"
      "eps = 1.0\n"
      "\n"
      "protocol = direct   # trailing comment\n"
      "n=500\n");
  const std::map<std::string, std::string> kv = trap::parse_config_file(f.path());
  CHECK(kv.at("eps") == "1.0");
  CHECK(kv.at("protocol") == "direct");
  CHECK(kv.at("n") == "500");
  CHECK(kv.size() == 3);
}

TEST_CASE("config parse errors carry the line number") {
  TempFile f("broken.cfg");
  f.write("eps = 1.0\nthis line has no equals sign\n");
  try {
    trap::parse_config_file(f.path());
    FAIL("expected ConfigError");
  } catch (const trap::ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("config digest is stable and order-insensitive") {
  const std::map<std::string, std::string> a{{"eps", "1.0"}, {"n", "500"}};
  const std::map<std::string, std::string> b{{"n", "500"}, {"eps", "1.0"}};
  const std::string da = trap::config_digest(a);
  CHECK(da == trap::config_digest(b));
  CHECK(da.size() == 16);  // 64-bit hex
  const std::map<std::string, std::string> c{{"eps", "2.0"}, {"n", "500"}};
  CHECK(da != trap::config_digest(c));
}

TEST_CASE("metric report file is written with all fields") {
  TempFile f("metrics.json");
  trap::MetricReport r;
  r.avg_score = 1.25;
  r.avg_pr = 88.0;
  r.score_gain = 0.75;
  r.pr_gain = 12.5;
  r.config_digest = "00ff00ff00ff00ff";
  r.seed = 7;
  trap::write_metric_report(f.path(), r);
  std::ifstream in(f.path());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content.find("1.25") != std::string::npos);
  CHECK(content.find("00ff00ff00ff00ff") != std::string::npos);
  CHECK(content.find("avg_pr") != std::string::npos);
}
