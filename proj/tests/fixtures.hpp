#pragma once

// Synthetic ACLED-style inputs written to a scratch directory.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "cnl/pipeline.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cnl_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline const char* kHeader =
    "EVENT_ID_CNTY,EVENT_DATE,EVENT_TYPE,COUNTRY,LATITUDE,LONGITUDE,ACTOR1,ALLY_ACTOR_1,ACTOR2,ALLY_ACTOR_2,"
    "FATALITIES\n";

inline std::string attacker(int i) { return "Raiders " + std::to_string(i); }
inline std::string victim(int i) { return "Army " + std::to_string(i); }

/// `n` raider groups repeatedly attack `n` army units; raiders are allied
/// among themselves, as are army units. Raids alternate between Mali and
/// Niger around (16N, 2E).
inline std::string two_block_csv(std::uint64_t seed, int n = 5, int events = 120) {
  static const char* kMonths[] = {"January", "February", "March",     "April",   "May",      "June",
                                  "July",    "August",   "September", "October", "November", "December"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1), day(1, 28), month(0, 11), year(2011, 2013), fat(0, 9);
  std::uniform_real_distribution<double> jitter(-1.5, 1.5);
  std::string csv = kHeader;
  for (int e = 0; e < events; ++e) {
    const int a = pick(rng), b = pick(rng), c = pick(rng), d = pick(rng);
    const bool mali = e % 2 == 0;
    char row[512];
    std::snprintf(row, sizeof row, "%dSYN,%02d %s %d,Battle-No change of territory,%s,%.4f,%.4f,%s,%s,%s,%s,%d\n", e,
                  day(rng), kMonths[month(rng)], year(rng), mali ? "Mali" : "Niger", 16.0 + jitter(rng),
                  (mali ? 1.0 : 3.0) + jitter(rng), attacker(a).c_str(), a == b ? "" : attacker(b).c_str(),
                  victim(c).c_str(), c == d ? "" : victim(d).c_str(), fat(rng));
    csv += row;
  }
  return csv;
}

inline std::string two_block_catalog(int n = 5) {
  nlohmann::json actors = nlohmann::json::object();
  for (int i = 0; i < n; ++i) {
    actors[attacker(i)] = {{"aliases", nlohmann::json::array()}, {"category", "islamists"}};
    actors[victim(i)] = {{"aliases", nlohmann::json::array()}, {"category", "government"}};
  }
  return nlohmann::json{{"schema_version", "1"}, {"fallback_category", "militias"}, {"actors", actors}}.dump(2);
}

inline std::string borders_geojson() {
  return R"({"type": "FeatureCollection", "features": [
  {"type": "Feature", "properties": {"countries": ["Mali", "Niger"]},
   "geometry": {"type": "LineString", "coordinates": [[2.0, 13.0], [2.0, 19.0]]}}]})";
}

/// Writes inputs into `dir` and returns a config pointing at them.
inline cnl::pipeline::RunConfig two_block_config(const fs::path& dir, std::uint64_t seed = 7, bool borders = true) {
  write(dir / "events.csv", two_block_csv(seed));
  write(dir / "catalog.json", two_block_catalog());
  cnl::pipeline::RunConfig c;
  c.events_csv = dir / "events.csv";
  c.catalog = dir / "catalog.json";
  if (borders) {
    write(dir / "borders.geojson", borders_geojson());
    c.borders = dir / "borders.geojson";
  }
  c.out_dir = dir / "out";
  c.permutations = 500;
  return c;
}

inline std::vector<fs::path> files_in(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) out.push_back(entry.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string slurp(const fs::path& p) { return cnl::io::read_file(p); }

}  // namespace fixture
