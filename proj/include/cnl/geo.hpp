#pragma once

// Chronological event chains and per-year spatial statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnl/error.hpp"
#include "cnl/geo_point.hpp"
#include "cnl/ingest.hpp"

namespace cnl {

inline constexpr double kEarthRadiusKm = 6371.0088;

inline double radians(double deg) { return deg * std::numbers::pi / 180.0; }

/// Great-circle distance on a sphere of mean Earth radius.
inline double haversine_km(const GeoPoint& p, const GeoPoint& q) {
  const double dlat = radians(q.lat() - p.lat());
  const double dlon = radians(q.lon() - p.lon());
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(radians(p.lat())) * std::cos(radians(q.lat())) *
                       std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

namespace detail {

// Point at fraction t along the great circle from a to b.
inline GeoPoint slerp(const GeoPoint& a, const GeoPoint& b, double t) {
  auto to_vec = [](const GeoPoint& p) {
    const double la = radians(p.lat()), lo = radians(p.lon());
    return std::array<double, 3>{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo),
                                 std::sin(la)};
  };
  const auto u = to_vec(a), v = to_vec(b);
  const double dot = std::clamp(u[0] * v[0] + u[1] * v[1] + u[2] * v[2], -1.0, 1.0);
  const double omega = std::acos(dot);
  std::array<double, 3> w;
  if (omega < 1e-12) {
    w = u;
  } else {
    const double s = std::sin(omega);
    const double ca = std::sin((1 - t) * omega) / s, cb = std::sin(t * omega) / s;
    for (int i = 0; i < 3; ++i) w[i] = ca * u[i] + cb * v[i];
  }
  const double lat = std::atan2(w[2], std::hypot(w[0], w[1])) * 180.0 / std::numbers::pi;
  const double lon = std::atan2(w[1], w[0]) * 180.0 / std::numbers::pi;
  return {std::clamp(lat, -90.0, 90.0), std::clamp(lon, -180.0, 180.0)};
}

}  // namespace detail

struct BorderLine {
  std::string label;  // e.g. "Algeria-Mali"
  std::vector<GeoPoint> vertices;
};

/// Border polylines, densified on construction so consecutive vertices are at
/// most `max_spacing_km` apart. Nearest-vertex distances are then within half
/// the spacing of the true point-to-line distance.
class BorderSet {
 public:
  explicit BorderSet(std::vector<BorderLine> lines, double max_spacing_km = 1.0)
      : max_spacing_km_(max_spacing_km) {
    if (!(max_spacing_km > 0.0)) throw Error(ErrorCode::InvalidArgument, "spacing must be positive");
    for (auto& line : lines) {
      if (line.vertices.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "border '" + line.label + "' needs >= 2 vertices");
      }
      BorderLine dense{line.label, {line.vertices.front()}};
      for (std::size_t i = 1; i < line.vertices.size(); ++i) {
        const auto& a = line.vertices[i - 1];
        const auto& b = line.vertices[i];
        const int pieces = std::max(1, int(std::ceil(haversine_km(a, b) / max_spacing_km)));
        for (int s = 1; s < pieces; ++s) dense.vertices.push_back(detail::slerp(a, b, double(s) / pieces));
        dense.vertices.push_back(b);
      }
      lines_.push_back(std::move(dense));
    }
  }

  const std::vector<BorderLine>& lines() const { return lines_; }
  bool empty() const { return lines_.empty(); }
  double max_spacing_km() const { return max_spacing_km_; }

  /// FeatureCollection of LineString / MultiLineString features; the label
  /// comes from a "countries" property (string, or array joined with '-').
  static BorderSet from_geojson(const nlohmann::json& doc, double max_spacing_km = 1.0) {
    if (doc.value("type", "") != "FeatureCollection") {
      throw Error(ErrorCode::SchemaMismatch, "borders must be a GeoJSON FeatureCollection");
    }
    std::vector<BorderLine> lines;
    for (const auto& feature : doc.at("features")) {
      std::string label;
      if (feature.contains("properties") && feature["properties"].contains("countries")) {
        const auto& c = feature["properties"]["countries"];
        if (c.is_array()) {
          for (const auto& part : c) label += (label.empty() ? "" : "-") + part.get<std::string>();
        } else {
          label = c.get<std::string>();
        }
      }
      const auto& geom = feature.at("geometry");
      const std::string type = geom.at("type").get<std::string>();
      auto read_line = [&](const nlohmann::json& coords) {
        BorderLine line{label, {}};
        for (const auto& xy : coords) line.vertices.emplace_back(xy.at(1).get<double>(), xy.at(0).get<double>());
        lines.push_back(std::move(line));
      };
      if (type == "LineString") {
        read_line(geom.at("coordinates"));
      } else if (type == "MultiLineString") {
        for (const auto& part : geom.at("coordinates")) read_line(part);
      } else {
        throw Error(ErrorCode::SchemaMismatch, "unsupported border geometry " + type);
      }
    }
    return BorderSet(std::move(lines), max_spacing_km);
  }

 private:
  std::vector<BorderLine> lines_;
  double max_spacing_km_;
};

inline double distance_to_border(const GeoPoint& p, const BorderSet& borders) {
  if (borders.empty()) throw Error(ErrorCode::EmptyBorderSet, "no border lines");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& line : borders.lines()) {
    for (const auto& v : line.vertices) best = std::min(best, haversine_km(p, v));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Chains

struct ChainLink {
  EventRecord event;
  GeoPoint point;
  std::size_t input_index;
};

struct EventChain {
  std::vector<ChainLink> links;  // ordered by (date, input_index)
  std::size_t dropped = 0;       // events without a usable location

  std::size_t size() const { return links.size(); }
  bool empty() const { return links.empty(); }
};

inline EventChain chain_events(const std::vector<EventRecord>& events) {
  EventChain chain;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].location) {
      chain.links.push_back({events[i], *events[i].location, i});
    } else {
      ++chain.dropped;
    }
  }
  std::stable_sort(chain.links.begin(), chain.links.end(),
                   [](const ChainLink& a, const ChainLink& b) { return a.event.date < b.event.date; });
  return chain;
}

inline bool crosses_border(const ChainLink& a, const ChainLink& b) {
  return a.event.country != b.event.country;
}

enum class GapMode { WithinYear, CrossYear };

struct YearMetrics {
  int year = 0;
  std::size_t n_events = 0;
  std::optional<int> cross_border_pct;
  long victims = 0;
  std::optional<double> avg_step_km;
  std::optional<double> avg_border_km;  // absent without borders
  std::optional<double> avg_gap_days;   // rounded to one decimal
};

/// One row per calendar year present in the chain. Steps join consecutive
/// events of the same year; in CrossYear mode the gap column also counts the
/// step arriving from the previous year's last event.
inline std::vector<YearMetrics> year_metrics(const EventChain& chain, const BorderSet* borders = nullptr,
                                             GapMode gaps = GapMode::WithinYear) {
  std::map<int, std::vector<std::size_t>> by_year;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    by_year[int(chain.links[i].event.date.year())].push_back(i);
  }
  std::vector<YearMetrics> rows;
  for (const auto& [year, idx] : by_year) {
    YearMetrics m;
    m.year = year;
    m.n_events = idx.size();
    double step_sum = 0.0, border_sum = 0.0, gap_sum = 0.0;
    std::size_t crossings = 0, gap_steps = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& link = chain.links[idx[j]];
      m.victims += link.event.fatalities;
      if (borders) border_sum += distance_to_border(link.point, *borders);
      const bool has_prev = gaps == GapMode::CrossYear ? idx[j] > 0 : j > 0;
      if (has_prev) {
        gap_sum += double(days_between(chain.links[idx[j] - 1].event.date, link.event.date));
        ++gap_steps;
      }
      if (j > 0) {
        const auto& prev = chain.links[idx[j - 1]];
        step_sum += haversine_km(prev.point, link.point);
        crossings += crosses_border(prev, link) ? 1 : 0;
      }
    }
    const std::size_t steps = idx.size() - 1;
    if (steps > 0) {
      m.avg_step_km = step_sum / double(steps);
      m.cross_border_pct = int(std::lround(100.0 * double(crossings) / double(steps)));
    }
    if (gap_steps > 0) m.avg_gap_days = std::round(10.0 * gap_sum / double(gap_steps)) / 10.0;
    if (borders) m.avg_border_km = border_sum / double(idx.size());
    rows.push_back(m);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Sanctuary / mobility heuristic

enum class Scenario { Sanctuary, Mobility, Indeterminate };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Sanctuary: return "sanctuary";
    case Scenario::Mobility: return "mobility";
    case Scenario::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

struct ScenarioParams {
  double radius_km = 150.0;
  double concentration_threshold = 0.6;
  double step_threshold_km = 300.0;
};

struct ScenarioReport {
  Scenario verdict = Scenario::Indeterminate;
  ScenarioParams params;
  std::size_t medoid_index = 0;  // position in the chain
  double concentration = 0.0;
  double mean_step_km = 0.0;
  std::size_t border_crossings = 0;
  std::size_t events = 0;
};

/// Sanctuary: events concentrate around a base (share within radius of the
/// spatial medoid >= threshold) and at least one step changes country.
/// Mobility: no concentration and a long mean step. Anything else is
/// indeterminate. Only geometry and country labels are used.
inline ScenarioReport classify_scenario(const EventChain& chain, const ScenarioParams& params = {}) {
  if (chain.size() < 3) {
    throw Error(ErrorCode::ChainTooShort, "scenario needs >= 3 located events, got " +
                                              std::to_string(chain.size()));
  }
  ScenarioReport r;
  r.params = params;
  r.events = chain.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    double total = 0.0;
    for (const auto& other : chain.links) total += haversine_km(chain.links[i].point, other.point);
    if (total < best) {
      best = total;
      r.medoid_index = i;
    }
  }
  const GeoPoint& medoid = chain.links[r.medoid_index].point;
  std::size_t near = 0;
  for (const auto& link : chain.links) near += haversine_km(medoid, link.point) <= params.radius_km ? 1 : 0;
  r.concentration = double(near) / double(chain.size());

  double steps = 0.0;
  for (std::size_t i = 1; i < chain.size(); ++i) {
    steps += haversine_km(chain.links[i - 1].point, chain.links[i].point);
    r.border_crossings += crosses_border(chain.links[i - 1], chain.links[i]) ? 1 : 0;
  }
  r.mean_step_km = steps / double(chain.size() - 1);

  if (r.concentration >= params.concentration_threshold && r.border_crossings >= 1) {
    r.verdict = Scenario::Sanctuary;
  } else if (r.concentration < params.concentration_threshold &&
             r.mean_step_km >= params.step_threshold_km) {
    r.verdict = Scenario::Mobility;
  }
  return r;
}

inline nlohmann::json to_json(const ScenarioReport& r) {
  return {{"verdict", std::string(to_string(r.verdict))},
          {"events", r.events},
          {"medoid_index", r.medoid_index},
          {"concentration", r.concentration},
          {"mean_step_km", r.mean_step_km},
          {"border_crossings", r.border_crossings},
          {"params",
           {{"radius_km", r.params.radius_km},
            {"concentration_threshold", r.params.concentration_threshold},
            {"step_threshold_km", r.params.step_threshold_km}}}};
}

// ---------------------------------------------------------------------------
// GeoJSON

/// One Point per event and one dashed LineString per consecutive pair, with
/// [lon, lat] coordinates. The lines mark chronological order only.
inline nlohmann::json export_chain_geojson(const EventChain& chain) {
  if (chain.empty()) throw Error(ErrorCode::EmptyChain, "nothing to export");
  nlohmann::json features = nlohmann::json::array();
  for (const auto& link : chain.links) {
    nlohmann::json actors = nlohmann::json::array();
    for (const auto* a : link.event.actors()) {
      if (*a) actors.push_back(**a);
    }
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "Point"}, {"coordinates", {link.point.lon(), link.point.lat()}}}},
         {"properties",
          {{"id", link.event.id},
           {"date", format_iso(link.event.date)},
           {"year", int(link.event.date.year())},
           {"country", link.event.country},
           {"actors", actors},
           {"fatalities", link.event.fatalities}}}});
  }
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const auto& a = chain.links[i - 1];
    const auto& b = chain.links[i];
    features.push_back(
        {{"type", "Feature"},
         {"geometry",
          {{"type", "LineString"},
           {"coordinates", {{a.point.lon(), a.point.lat()}, {b.point.lon(), b.point.lat()}}}}},
         {"properties",
          {{"year", int(b.event.date.year())},
           {"step_km", haversine_km(a.point, b.point)},
           {"crosses_border", crosses_border(a, b)},
           {"style", "dashed"}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

}  // namespace cnl
