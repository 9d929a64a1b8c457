#include "trap/io.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trap/errors.hpp"
#include "trap/rng.hpp"

namespace trap {

namespace {

using nlohmann::json;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

long parse_long(const std::string& field, int line_no, const std::string& what) {
  try {
    std::size_t used = 0;
    const long value = std::stol(strip(field), &used);
    if (used != strip(field).size()) throw std::invalid_argument(field);
    return value;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" +
                    field + "'");
  }
}

double parse_double(const std::string& field, int line_no, const std::string& what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(strip(field), &used);
    if (used != strip(field).size()) throw std::invalid_argument(field);
    return value;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" +
                    field + "'");
  }
}

}  // namespace

TrajectoryDataset read_trajectory_csv(const std::string& path, const GridSpec& spec) {
  spec.validate();
  std::ifstream in = open_in(path);

  std::string header;
  if (!std::getline(in, header)) throw DataError(path + " is empty");
  const std::vector<std::string> columns = split_fields(strip(header), ',');

  bool cell_format = false;
  if (columns.size() == 3 && strip(columns[0]) == "traj_id" && strip(columns[1]) == "step" &&
      strip(columns[2]) == "cell") {
    cell_format = true;
  } else if (columns.size() == 4 && strip(columns[0]) == "traj_id" &&
             strip(columns[1]) == "step" && strip(columns[2]) == "lat" &&
             strip(columns[3]) == "lon") {
    cell_format = false;
  } else {
    throw DataError(path + ": header must be traj_id,step,cell or traj_id,step,lat,lon");
  }

  struct Row {
    std::string traj_id;  // opaque: only equality matters for grouping
    long step;
    Cell cell;                    // cell format
    std::pair<double, double> point;  // lat/lon format
  };
  // Grouped by traj_id in file order; steps must be contiguous from 0.
  std::vector<std::pair<std::string, std::vector<Row>>> groups;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(strip(line), ',');
    if (fields.size() != columns.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(columns.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    Row row{};
    row.traj_id = strip(fields[0]);
    if (row.traj_id.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": empty traj_id");
    }
    row.step = parse_long(fields[1], line_no, "step");
    if (cell_format) {
      const long cell = parse_long(fields[2], line_no, "cell");
      if (cell < 0 || cell >= spec.cell_count()) {
        throw DataError("line " + std::to_string(line_no) + ": cell " + std::to_string(cell) +
                        " outside the grid domain");
      }
      row.cell = static_cast<Cell>(cell);
    } else {
      row.point = {parse_double(fields[2], line_no, "lat"),
                   parse_double(fields[3], line_no, "lon")};
    }
    if (groups.empty() || groups.back().first != row.traj_id) {
      for (const auto& [id, rows] : groups) {
        if (id == row.traj_id) {
          throw DataError("line " + std::to_string(line_no) + ": traj_id " + row.traj_id +
                          " appears in two separate blocks");
        }
      }
      groups.emplace_back(row.traj_id, std::vector<Row>{});
    }
    auto& rows = groups.back().second;
    if (row.step != static_cast<long>(rows.size())) {
      throw DataError("line " + std::to_string(line_no) + ": step " + std::to_string(row.step) +
                      " breaks the contiguous 0-based sequence for traj_id " + row.traj_id);
    }
    rows.push_back(row);
  }

  TrajectoryDataset dataset;
  for (const auto& [id, rows] : groups) {
    if (cell_format) {
      CellTrajectory traj;
      traj.reserve(rows.size());
      for (const Row& row : rows) traj.push_back(row.cell);
      dataset.trajectories.push_back(std::move(traj));
    } else {
      std::vector<std::pair<double, double>> raw;
      raw.reserve(rows.size());
      for (const Row& row : rows) raw.push_back(row.point);
      dataset.trajectories.push_back(discretize(raw, spec));
    }
  }
  return dataset;
}

void write_trajectory_csv(const std::string& path, const TrajectoryDataset& dataset) {
  std::ofstream out = open_out(path);
  out << "traj_id,step,cell\n";
  for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const auto& traj = dataset.trajectories[i];
    for (std::size_t s = 0; s < traj.size(); ++s) {
      out << i << ',' << s << ',' << traj[s] << '\n';
    }
  }
}

void write_fake_set(const std::string& csv_path, const FakeTrajectorySet& fakes) {
  TrajectoryDataset as_dataset;
  as_dataset.provenance = Provenance::kFake;
  as_dataset.trajectories = fakes.trajectories;
  write_trajectory_csv(csv_path, as_dataset);

  json manifest;
  manifest["m"] = fakes.trajectories.size();
  json dist = json::object();
  for (const auto& [len, count] : fakes.requested) dist[std::to_string(len)] = count;
  manifest["dist"] = dist;
  manifest["max_rep"] = fakes.max_rep;
  manifest["seed"] = fakes.seed;
  manifest["total_score"] = fakes.total_score;
  manifest["under_filled"] = fakes.under_filled;
  std::ofstream out = open_out(csv_path + ".manifest.json");
  out << manifest.dump(2) << '\n';
}

FakeTrajectorySet read_fake_set(const std::string& csv_path) {
  // The CSV holds abstract cell ids; read with a domain large enough for any
  // id and validate against the real graph downstream.
  GridSpec wide;
  wide.rows = 1;
  wide.cols = std::numeric_limits<int>::max() / 2;
  TrajectoryDataset dataset = read_trajectory_csv(csv_path, wide);

  std::ifstream in = open_in(csv_path + ".manifest.json");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError(csv_path + ".manifest.json: " + e.what());
  }

  FakeTrajectorySet fakes;
  fakes.trajectories = std::move(dataset.trajectories);
  try {
    for (const auto& [key, value] : manifest.at("dist").items()) {
      fakes.requested[std::stoi(key)] = value.get<int>();
    }
    fakes.max_rep = manifest.at("max_rep").get<int>();
    fakes.seed = manifest.at("seed").get<std::uint64_t>();
    fakes.total_score = manifest.at("total_score").get<double>();
    fakes.under_filled = manifest.value("under_filled", false);
  } catch (const json::exception& e) {
    throw DataError(csv_path + ".manifest.json: " + e.what());
  }
  for (const auto& traj : fakes.trajectories) {
    ++fakes.per_length[static_cast<int>(traj.size())];
  }
  return fakes;
}

void write_target_patterns(const std::string& path, const TargetPatternSet& tp_set) {
  std::ofstream out = open_out(path);
  out << "score,cells\n";
  for (const auto& sp : tp_set.patterns) {
    out << sp.score << ',';
    for (std::size_t i = 0; i < sp.cells.size(); ++i) {
      if (i > 0) out << ';';
      out << sp.cells[i];
    }
    out << '\n';
  }
}

TargetPatternSet read_target_patterns(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string header;
  if (!std::getline(in, header)) throw DataError(path + " is empty");
  if (strip(header) != "score,cells") {
    throw DataError(path + ": header must be score,cells");
  }

  TargetPatternSet tp_set;
  tp_set.k_min = std::numeric_limits<int>::max();
  tp_set.k_max = 0;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError("line " + std::to_string(line_no) + ": expected score,cells");
    }
    ScoredPattern sp;
    sp.score = parse_double(line.substr(0, comma), line_no, "score");
    for (const std::string& cell : split_fields(strip(line.substr(comma + 1)), ';')) {
      sp.cells.push_back(static_cast<Cell>(parse_long(cell, line_no, "cell")));
    }
    if (sp.cells.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": pattern has no cells");
    }
    tp_set.k_min = std::min(tp_set.k_min, static_cast<int>(sp.cells.size()));
    tp_set.k_max = std::max(tp_set.k_max, static_cast<int>(sp.cells.size()));
    tp_set.patterns.push_back(std::move(sp));
  }
  if (tp_set.patterns.empty()) throw DataError(path + " contains no patterns");
  return tp_set;
}

void write_metric_report(const std::string& path, const MetricReport& report) {
  json j;
  j["avg_score"] = report.avg_score;
  j["avg_pr"] = report.avg_pr;
  j["score_gain"] = report.score_gain;
  j["pr_gain"] = report.pr_gain;
  j["config_digest"] = report.config_digest;
  j["seed"] = report.seed;
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

namespace {

json report_to_json(const OueReport& report) {
  json j;
  j["d"] = report.domain_size();
  json ones = json::array();
  report.for_each_one([&](int i) { ones.push_back(i); });
  j["ones"] = ones;
  return j;
}

OueReport report_from_json(const json& j) {
  OueReport report(j.at("d").get<int>());
  for (const auto& idx : j.at("ones")) {
    const int i = idx.get<int>();
    if (i < 0 || i >= report.domain_size()) throw DataError("report bit index out of range");
    report.set_bit(i);
  }
  return report;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw DataError("unexpected end of bundle file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

void write_report_binary(std::ostream& out, const OueReport& report) {
  write_u32(out, static_cast<std::uint32_t>(report.domain_size()));
  write_u32(out, static_cast<std::uint32_t>(report.ones_count()));
  report.for_each_one([&](int i) { write_u32(out, static_cast<std::uint32_t>(i)); });
}

OueReport read_report_binary(std::istream& in) {
  const std::uint32_t d = read_u32(in);
  const std::uint32_t ones = read_u32(in);
  if (d == 0 || d > (1u << 28) || ones > d) throw DataError("corrupt report header in bundle");
  OueReport report(static_cast<int>(d));
  for (std::uint32_t k = 0; k < ones; ++k) {
    const std::uint32_t i = read_u32(in);
    if (i >= d) throw DataError("report bit index out of range");
    report.set_bit(static_cast<int>(i));
  }
  return report;
}

inline constexpr std::uint32_t kBundleMagic = 0x54504231;  // "TPB1"

}  // namespace

void write_report_bundles(const std::string& path, const std::vector<GridTraceReport>& bundles,
                          BundleFormat format) {
  if (format == BundleFormat::kJsonLines) {
    std::ofstream out = open_out(path);
    for (const auto& bundle : bundles) {
      json j;
      j["length"] = report_to_json(bundle.length_report);
      j["begin"] = report_to_json(bundle.begin);
      json intra = json::array();
      for (const auto& r : bundle.intra) intra.push_back(report_to_json(r));
      j["intra"] = intra;
      if (bundle.terminate.has_value()) j["terminate"] = report_to_json(*bundle.terminate);
      out << j.dump() << '\n';
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_u32(out, kBundleMagic);
  write_u32(out, static_cast<std::uint32_t>(bundles.size()));
  for (const auto& bundle : bundles) {
    write_report_binary(out, bundle.length_report);
    write_report_binary(out, bundle.begin);
    write_u32(out, static_cast<std::uint32_t>(bundle.intra.size()));
    for (const auto& r : bundle.intra) write_report_binary(out, r);
    write_u32(out, bundle.terminate.has_value() ? 1 : 0);
    if (bundle.terminate.has_value()) write_report_binary(out, *bundle.terminate);
  }
}

std::vector<GridTraceReport> read_report_bundles(const std::string& path, BundleFormat format) {
  std::vector<GridTraceReport> bundles;
  if (format == BundleFormat::kJsonLines) {
    std::ifstream in = open_in(path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (strip(line).empty()) continue;
      json j;
      try {
        j = json::parse(line);
        GridTraceReport bundle;
        bundle.length_report = report_from_json(j.at("length"));
        bundle.begin = report_from_json(j.at("begin"));
        for (const auto& r : j.at("intra")) bundle.intra.push_back(report_from_json(r));
        if (j.contains("terminate")) bundle.terminate = report_from_json(j.at("terminate"));
        bundles.push_back(std::move(bundle));
      } catch (const json::exception& e) {
        throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return bundles;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path + " for reading");
  if (read_u32(in) != kBundleMagic) throw DataError(path + " is not a report bundle file");
  const std::uint32_t count = read_u32(in);
  bundles.reserve(count);
  for (std::uint32_t b = 0; b < count; ++b) {
    GridTraceReport bundle;
    bundle.length_report = read_report_binary(in);
    bundle.begin = read_report_binary(in);
    const std::uint32_t intra = read_u32(in);
    if (intra > (1u << 24)) throw DataError("corrupt intra count in bundle");
    bundle.intra.reserve(intra);
    for (std::uint32_t k = 0; k < intra; ++k) bundle.intra.push_back(read_report_binary(in));
    if (read_u32(in) != 0) bundle.terminate = read_report_binary(in);
    bundles.push_back(std::move(bundle));
  }
  return bundles;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + " line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path + " line " + std::to_string(line_no) + ": empty key");
    }
    kv[key] = value;
  }
  return kv;
}

std::string config_digest(const std::map<std::string, std::string>& kv) {
  // FNV-1a over "key=value\n" pairs (map iteration is already sorted),
  // strengthened with one mix round, printed as 16 hex digits.
  std::uint64_t h = 1469598103934665603ull;
  const auto eat = [&](const std::string& s) {
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
  };
  for (const auto& [key, value] : kv) {
    eat(key);
    eat("=");
    eat(value);
    eat("\n");
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << mix64(h);
  return out.str();
}

}  // namespace trap
