#pragma once

// File-based pipeline stages behind the `cnl` command line tool. Each stage
// reads the artifacts of the previous one from the output directory and
// writes its own, so any stage can be re-run in isolation.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnl/error.hpp"
#include "cnl/geo.hpp"
#include "cnl/graph.hpp"
#include "cnl/ingest.hpp"
#include "cnl/io.hpp"
#include "cnl/metrics.hpp"
#include "cnl/spectral.hpp"

namespace cnl::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kPipelineError = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::InvalidMapping:
    case ErrorCode::InvalidCatalog: return kConfigError;
    case ErrorCode::Io: return kIoError;
    default: return kPipelineError;
  }
}

struct RunConfig {
  std::optional<fs::path> events_csv;
  std::optional<fs::path> catalog;
  std::optional<fs::path> mapping;
  std::optional<fs::path> borders;
  fs::path out_dir = "cnl_out";

  TieMode tie_mode = TieMode::Full;
  WeightScheme weight_scheme = WeightScheme::IncidentCount;

  int k = 2;
  bool normalized = true;
  double coupling = 1.0;
  bool weighted_aggression = true;
  bool directed = false;

  std::size_t permutations = 10000;
  std::uint64_t seed = 42;
  unsigned workers = 1;

  ScenarioParams scenario;
  GapMode gap_mode = GapMode::WithinYear;

  std::set<EventType> event_types{kAllEventTypes.begin(), kAllEventTypes.end()};
  std::optional<std::vector<std::string>> actors;  // raw names, canonicalized at ingest
  std::optional<Date> date_from;
  std::optional<Date> date_to;
  std::optional<std::set<std::string>> countries;

  std::optional<std::string> scope;  // country tag kept by the graph stage

  /// Everything except the output directory, which does not affect results.
  json to_json() const {
    auto path = [](const std::optional<fs::path>& p) { return p ? json(p->generic_string()) : json(nullptr); };
    json types = json::array();
    for (EventType t : kAllEventTypes) {
      if (event_types.contains(t)) types.push_back(std::string(to_label(t)));
    }
    json filter = {{"event_types", types}};
    filter["actors"] = actors ? json(*actors) : json(nullptr);
    filter["date_from"] = date_from ? json(format_iso(*date_from)) : json(nullptr);
    filter["date_to"] = date_to ? json(format_iso(*date_to)) : json(nullptr);
    filter["countries"] = countries ? json(*countries) : json(nullptr);
    return {
        {"schema_version", std::string(kSchemaVersion)},
        {"paths", {{"events_csv", path(events_csv)}, {"catalog", path(catalog)},
                   {"mapping", path(mapping)}, {"borders", path(borders)}}},
        {"tie_mode", std::string(to_string(tie_mode))},
        {"weight_scheme", std::string(to_string(weight_scheme))},
        {"embedding", {{"k", k}, {"normalized", normalized}, {"coupling", coupling},
                       {"weighted_aggression", weighted_aggression}, {"directed", directed}}},
        {"ei", {{"permutations", permutations}, {"seed", seed}}},
        {"geo", {{"radius_km", scenario.radius_km},
                 {"concentration_threshold", scenario.concentration_threshold},
                 {"step_threshold_km", scenario.step_threshold_km},
                 {"gap_mode", gap_mode == GapMode::WithinYear ? "within_year" : "cross_year"}}},
        {"filter", filter},
        {"scope", scope ? json(*scope) : json(nullptr)},
    };
  }

  std::string digest() const { return io::digest(to_json().dump()); }

  void validate() const {
    if (k < 1) throw Error(ErrorCode::Config, "k must be >= 1");
    if (permutations < 1) throw Error(ErrorCode::Config, "permutations must be >= 1");
    if (!(coupling > 0.0)) throw Error(ErrorCode::Config, "coupling must be positive");
    if (workers < 1) throw Error(ErrorCode::Config, "workers must be >= 1");
    if (scenario.radius_km < 0 || scenario.step_threshold_km < 0) {
      throw Error(ErrorCode::Config, "geo thresholds must be non-negative");
    }
  }

  /// Relative paths are resolved against `base_dir`. Absent keys keep their
  /// defaults.
  static RunConfig from_json(const json& doc, const fs::path& base_dir) {
    RunConfig c;
    try {
      if (doc.value("schema_version", "") != kSchemaVersion) {
        throw Error(ErrorCode::Config, "config schema_version must be \"" + std::string(kSchemaVersion) + "\"");
      }
      auto path = [&](const json& obj, const char* key, std::optional<fs::path>& target) {
        if (obj.contains(key) && !obj.at(key).is_null()) {
          fs::path p = obj.at(key).get<std::string>();
          target = p.is_absolute() ? p : base_dir / p;
        }
      };
      if (doc.contains("paths")) {
        const auto& p = doc.at("paths");
        path(p, "events_csv", c.events_csv);
        path(p, "catalog", c.catalog);
        path(p, "mapping", c.mapping);
        path(p, "borders", c.borders);
        std::optional<fs::path> out;
        path(p, "out", out);
        if (out) c.out_dir = *out;
      }
      if (doc.contains("tie_mode")) {
        auto m = parse_tie_mode(doc.at("tie_mode").get<std::string>());
        if (!m) throw Error(ErrorCode::Config, "unknown tie_mode");
        c.tie_mode = *m;
      }
      if (doc.contains("weight_scheme")) {
        auto w = parse_weight_scheme(doc.at("weight_scheme").get<std::string>());
        if (!w) throw Error(ErrorCode::Config, "unknown weight_scheme");
        c.weight_scheme = *w;
      }
      if (doc.contains("embedding")) {
        const auto& e = doc.at("embedding");
        c.k = e.value("k", c.k);
        c.normalized = e.value("normalized", c.normalized);
        c.coupling = e.value("coupling", c.coupling);
        c.weighted_aggression = e.value("weighted_aggression", c.weighted_aggression);
        c.directed = e.value("directed", c.directed);
      }
      if (doc.contains("ei")) {
        const auto& e = doc.at("ei");
        c.permutations = e.value("permutations", c.permutations);
        c.seed = e.value("seed", c.seed);
        c.workers = e.value("workers", c.workers);
      }
      if (doc.contains("geo")) {
        const auto& g = doc.at("geo");
        c.scenario.radius_km = g.value("radius_km", c.scenario.radius_km);
        c.scenario.concentration_threshold =
            g.value("concentration_threshold", c.scenario.concentration_threshold);
        c.scenario.step_threshold_km = g.value("step_threshold_km", c.scenario.step_threshold_km);
        const std::string gap = g.value("gap_mode", std::string("within_year"));
        if (gap == "within_year") {
          c.gap_mode = GapMode::WithinYear;
        } else if (gap == "cross_year") {
          c.gap_mode = GapMode::CrossYear;
        } else {
          throw Error(ErrorCode::Config, "unknown gap_mode '" + gap + "'");
        }
      }
      if (doc.contains("filter")) {
        const auto& f = doc.at("filter");
        if (f.contains("event_types") && !f.at("event_types").is_null()) {
          c.event_types.clear();
          for (const auto& label : f.at("event_types")) c.event_types.insert(parse_event_type(label.get<std::string>()));
        }
        if (f.contains("actors") && !f.at("actors").is_null()) {
          c.actors = f.at("actors").get<std::vector<std::string>>();
        }
        auto date = [&](const char* key, std::optional<Date>& target) {
          if (f.contains(key) && !f.at(key).is_null()) {
            target = parse_iso_date(f.at(key).get<std::string>());
            if (!target) throw Error(ErrorCode::Config, std::string("bad ") + key);
          }
        };
        date("date_from", c.date_from);
        date("date_to", c.date_to);
        if (f.contains("countries") && !f.at("countries").is_null()) {
          c.countries = f.at("countries").get<std::set<std::string>>();
        }
      }
      if (doc.contains("scope") && !doc.at("scope").is_null()) c.scope = doc.at("scope").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Config, e.what());
    }
    c.validate();
    return c;
  }
};

/// Per-field command line overrides, applied over the config file and the
/// CNL_OUT environment variable.
struct Overrides {
  std::optional<std::string> tie_mode;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> permutations;
  std::optional<unsigned> workers;
  std::optional<std::string> scope;
  std::optional<fs::path> out;
  std::optional<fs::path> events;
  std::optional<fs::path> catalog;
  std::optional<fs::path> mapping;
  std::optional<fs::path> borders;
};

inline RunConfig load_config(const std::optional<fs::path>& config_path, const Overrides& o) {
  RunConfig c;
  if (config_path) {
    std::string text;
    try {
      text = io::read_file(*config_path);
    } catch (const Error&) {
      throw Error(ErrorCode::Config, "cannot read config " + config_path->string());
    }
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Config, config_path->string() + ": " + e.what());
    }
    c = RunConfig::from_json(doc, config_path->parent_path());
  }
  if (const char* env = std::getenv("CNL_OUT"); env && *env) c.out_dir = env;
  if (o.tie_mode) {
    auto m = parse_tie_mode(*o.tie_mode);
    if (!m) throw Error(ErrorCode::Config, "unknown tie mode '" + *o.tie_mode + "'");
    c.tie_mode = *m;
  }
  if (o.k) c.k = *o.k;
  if (o.seed) c.seed = *o.seed;
  if (o.permutations) c.permutations = *o.permutations;
  if (o.workers) c.workers = *o.workers;
  if (o.scope) c.scope = *o.scope;
  if (o.out) c.out_dir = *o.out;
  if (o.events) c.events_csv = *o.events;
  if (o.catalog) c.catalog = *o.catalog;
  if (o.mapping) c.mapping = *o.mapping;
  if (o.borders) c.borders = *o.borders;
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace artifact {
inline constexpr const char* kEvents = "events.json";
inline constexpr const char* kRowErrors = "row_errors.csv";
inline constexpr const char* kGraph = "graph.json";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kEmbedding = "embedding.json";
inline constexpr const char* kEmbeddingCsv = "embedding.csv";
inline constexpr const char* kEmbeddingSvg = "embedding.svg";
inline constexpr const char* kAggression = "aggression.json";
inline constexpr const char* kAggressionCsv = "aggression.csv";
inline constexpr const char* kGeo = "geo.json";
inline constexpr const char* kYearTable = "year_table.csv";
inline constexpr const char* kChains = "chains.geojson";
inline constexpr const char* kScenario = "scenario.json";
inline constexpr const char* kReport = "report.json";
}  // namespace artifact

namespace detail {

inline json stamp(const RunConfig& c, json body) {
  body["schema_version"] = std::string(kSchemaVersion);
  body["config_digest"] = c.digest();
  return body;
}

inline json load_artifact(const RunConfig& c, const char* name) {
  const fs::path p = c.out_dir / name;
  if (!fs::exists(p)) throw Error(ErrorCode::SchemaMismatch, "missing upstream artifact " + p.string());
  json doc = io::read_json(p);
  if (!doc.is_object() || doc.value("schema_version", "") != kSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch, p.string() + " has an unsupported schema_version");
  }
  return doc;
}

inline void require_readable(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw Error(ErrorCode::Config, std::string("no ") + what + " path configured");
  std::error_code ec;
  if (!fs::is_regular_file(*p, ec)) throw Error(ErrorCode::Io, std::string(what) + " not readable: " + p->string());
}

inline ActorCatalog load_catalog(const RunConfig& c) {
  if (!c.catalog) return ActorCatalog{};
  return ActorCatalog::from_json(io::read_json(*c.catalog, ErrorCode::InvalidCatalog));
}

inline ColumnMapping load_mapping(const RunConfig& c) {
  if (!c.mapping) return ColumnMapping::acled_v5();
  return ColumnMapping::from_json(io::read_json(*c.mapping, ErrorCode::InvalidMapping));
}

inline SignedDiGraph load_graph(const RunConfig& c) {
  try {
    return graph_from_json(load_artifact(c, artifact::kGraph));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("graph artifact: ") + e.what());
  }
}

inline std::vector<EventRecord> load_events(const RunConfig& c, json* doc_out = nullptr) {
  json doc = load_artifact(c, artifact::kEvents);
  std::vector<EventRecord> events;
  try {
    for (const auto& e : doc.at("events")) events.push_back(event_from_json(e));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("events artifact: ") + e.what());
  }
  if (doc_out) *doc_out = std::move(doc);
  return events;
}

inline json report_json(const MetricReport& r) {
  json per_node = json::array();
  for (const auto& [id, v] : r.ranked()) per_node.push_back({{"actor", id}, {"value", v}});
  return {{"mean", r.mean}, {"std_dev", r.std_dev}, {"per_node", per_node}};
}

inline std::string report_csv(const MetricReport& r) {
  io::CsvWriter w;
  w.row({"actor", "value"});
  for (const auto& [id, v] : r.ranked()) w.row({id, io::fixed(v, 6)});
  w.row({"Mean", io::fixed(r.mean, 6)});
  w.row({"Std. Dev.", io::fixed(r.std_dev, 6)});
  return w.str();
}

inline json embedding_json(const Embedding& e) {
  json coords = json::array();
  for (Eigen::Index i = 0; i < e.coords.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < e.coords.cols(); ++j) row.push_back(e.coords(i, j));
    coords.push_back(std::move(row));
  }
  json values = json::array();
  for (Eigen::Index j = 0; j < e.eigenvalues.size(); ++j) values.push_back(e.eigenvalues(j));
  return {{"k", e.k}, {"node_order", e.node_order}, {"eigenvalues", values}, {"coords", coords}};
}

inline Embedding embedding_from_json(const json& doc) {
  try {
    Embedding e;
    e.k = doc.at("k").get<int>();
    e.node_order = doc.at("node_order").get<std::vector<std::string>>();
    const auto n = Eigen::Index(e.node_order.size());
    e.coords.resize(n, e.k);
    e.eigenvalues.resize(e.k);
    for (Eigen::Index j = 0; j < e.k; ++j) e.eigenvalues(j) = doc.at("eigenvalues").at(std::size_t(j)).get<double>();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < e.k; ++j) {
        e.coords(i, j) = doc.at("coords").at(std::size_t(i)).at(std::size_t(j)).get<double>();
      }
    }
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaMismatch, std::string("embedding artifact: ") + ex.what());
  }
}

inline std::vector<AggressionScore> score(const RunConfig& c, const Embedding& emb, const SignedDiGraph& g,
                                          bool directed) {
  return directed ? aggression_scores_directed(emb, g, c.weighted_aggression)
                  : aggression_scores(emb, g, c.weighted_aggression);
}

// Sorted by net aggression descending, then actor id.
inline std::vector<AggressionScore> ranked(std::vector<AggressionScore> scores) {
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.net != b.net) return a.net > b.net;
    return a.actor < b.actor;
  });
  return scores;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stages

inline void cmd_ingest(const RunConfig& c, std::ostream& out) {
  detail::require_readable(c.events_csv, "events CSV");
  if (c.catalog) detail::require_readable(c.catalog, "catalog");
  if (c.mapping) detail::require_readable(c.mapping, "column mapping");
  const ActorCatalog catalog = detail::load_catalog(c);
  const ColumnMapping mapping = detail::load_mapping(c);
  const std::string text = io::read_file(*c.events_csv);

  ParseResult parsed = parse_events(text, mapping, catalog);

  EventFilter filter;
  filter.types = c.event_types;
  if (c.actors) {
    std::set<std::string> ids;
    for (const auto& raw : *c.actors) ids.insert(canonicalize_actor(raw, catalog).id);
    filter.actors = std::move(ids);
  }
  if (c.date_from || c.date_to) {
    filter.dates = DateRange{c.date_from.value_or(Date{std::chrono::year{-32767}, std::chrono::January, std::chrono::day{1}}),
                             c.date_to.value_or(Date{std::chrono::year{32767}, std::chrono::December, std::chrono::day{31}})};
  }
  filter.countries = c.countries;
  const auto events = filter_events(parsed.records, filter);

  std::map<std::string, std::string> actors;
  std::size_t unlocated = 0;
  json list = json::array();
  for (const auto& e : events) {
    for (const auto* a : e.actors()) {
      if (*a) actors[**a] = std::string(to_string(parsed.actors.at(**a)));
    }
    unlocated += e.location ? 0 : 1;
    list.push_back(to_json(e));
  }

  json doc = detail::stamp(c, {{"fallback_category", std::string(to_string(catalog.fallback()))},
                               {"counts",
                                {{"data_rows", parsed.records.size() + parsed.errors.size()},
                                 {"records", parsed.records.size()},
                                 {"row_errors", parsed.errors.size()},
                                 {"events", events.size()},
                                 {"organizations", actors.size()},
                                 {"unlocated", unlocated}}},
                               {"actors", actors},
                               {"events", std::move(list)}});
  io::CsvWriter errors;
  errors.row({"row", "reason"});
  for (const auto& e : parsed.errors) errors.row({std::to_string(e.row), e.reason});

  io::write_files({{c.out_dir / artifact::kEvents, io::dump(doc)},
                   {c.out_dir / artifact::kRowErrors, errors.str()}});
  out << parsed.records.size() << " records parsed, " << parsed.errors.size() << " row errors\n"
      << events.size() << " events, " << actors.size() << " organizations\n";
}

inline void cmd_graph(const RunConfig& c, std::ostream& out) {
  json events_doc;
  const auto events = detail::load_events(c, &events_doc);
  std::map<std::string, Category> categories;
  const json actor_categories = events_doc.value("actors", json::object());
  for (const auto& [id, cat] : actor_categories.items()) {
    if (auto parsed = parse_category(cat.get<std::string>())) categories[id] = *parsed;
  }
  const Category fallback =
      parse_category(events_doc.value("fallback_category", std::string("militias"))).value_or(Category::Militias);
  SignedDiGraph g = build_graph(events, c.tie_mode, c.weight_scheme, [&](const std::string& id) {
    auto it = categories.find(id);
    return it == categories.end() ? fallback : it->second;
  });
  if (c.scope) g = subgraph(g, [&](const Node& n) { return n.country == *c.scope; });

  json doc = to_json(g);
  doc["tie_mode"] = std::string(to_string(c.tie_mode));
  doc["weight_scheme"] = std::string(to_string(c.weight_scheme));
  doc["scope"] = c.scope ? json(*c.scope) : json(nullptr);
  io::write_files({{c.out_dir / artifact::kGraph, io::dump(detail::stamp(c, std::move(doc)))}});
  out << g.size() << " nodes, " << g.tie_count(Sign::Negative) << " negative ties, "
      << g.tie_count(Sign::Positive) << " positive ties\n";
}

inline void cmd_metrics(const RunConfig& c, std::ostream& out) {
  const SignedDiGraph g = detail::load_graph(c);
  std::vector<std::pair<fs::path, std::string>> files;
  json layers = json::object();
  for (Sign sign : {Sign::Negative, Sign::Positive}) {
    const std::string name = sign == Sign::Negative ? "negative" : "positive";
    const LayerView view{sign, Weighting::Unweighted};
    json layer = json::object();
    auto guard = [&](const std::string& key, auto&& compute) {
      try {
        layer[key] = compute();
      } catch (const Error& e) {
        layer[key] = {{"error", e.what()}};
      }
    };
    auto centrality = [&](const std::string& key, auto&& fn) {
      guard(key, [&] {
        const MetricReport r = fn();
        files.emplace_back(c.out_dir / ("metrics_" + name + "_" + key + ".csv"), detail::report_csv(r));
        return detail::report_json(r);
      });
    };
    centrality("degree", [&] { return degree_centrality(g, view); });
    centrality("eigenvector", [&] { return eigenvector_centrality(g, view); });
    centrality("betweenness", [&] { return betweenness_centrality(g, view); });
    guard("density", [&] { return json(density(g, view)); });
    guard("clustering", [&] { return json(clustering_coefficient(g, view)); });
    guard("ei", [&] {
      const EIResult r = ei_index(g, view, category_labels(g), c.permutations, c.seed, c.workers);
      return json{{"index", r.index}, {"p_value", r.p_value}, {"permutations", r.permutations},
                  {"seed", r.seed}, {"external", r.external}, {"internal", r.internal}};
    });
    layers[name] = std::move(layer);
  }
  json doc = {{"layers", layers}};
  try {
    const SignedTransitivity t = signed_transitivity(g);
    doc["signed_transitivity"] = {{"closed_negative_fraction", t.closed_negative_fraction},
                                  {"closed_positive_fraction", t.closed_positive_fraction},
                                  {"open_fraction", t.open_fraction},
                                  {"two_paths", t.two_paths}};
  } catch (const Error& e) {
    doc["signed_transitivity"] = {{"error", e.what()}};
  }
  const TriadCensus tc = triad_census(symmetrize(g));
  doc["triad_census"] = {{"PPP", tc.ppp}, {"PPN", tc.ppn}, {"PNN", tc.pnn}, {"NNN", tc.nnn},
                         {"balanced_fraction", tc.balanced_fraction}};
  files.emplace_back(c.out_dir / artifact::kMetrics, io::dump(detail::stamp(c, std::move(doc))));
  io::write_files(files);
  out << "metrics written for " << g.size() << " nodes\n";
}

inline void cmd_embed(const RunConfig& c, std::ostream& out) {
  const SignedDiGraph g = detail::load_graph(c);
  const Embedding emb = c.directed ? embed_directed(g, c.k, c.coupling, c.normalized)
                                   : embed(signed_laplacian(symmetrize(g), c.normalized), c.k);
  const auto scores = detail::score(c, emb, g, c.directed);

  json doc = detail::embedding_json(emb);
  doc["normalized"] = c.normalized;
  doc["directed"] = c.directed;
  doc["coupling"] = c.coupling;

  io::CsvWriter csv;
  std::vector<std::string> header{"actor"};
  for (int j = 1; j <= emb.k; ++j) header.push_back("x" + std::to_string(j));
  csv.row(header);
  for (std::size_t i = 0; i < emb.node_order.size(); ++i) {
    std::vector<std::string> row{emb.node_order[i]};
    for (int j = 0; j < emb.k; ++j) row.push_back(io::fixed(emb.coords(Eigen::Index(i), j), 10));
    csv.row(row);
  }

  std::map<std::string, AggressionClass> cls;
  for (const auto& s : scores) cls[s.actor] = s.cls;
  std::vector<io::SvgNode> nodes;
  for (std::size_t i = 0; i < emb.node_order.size(); ++i) {
    std::string actor = emb.node_order[i];
    if (c.directed) actor = actor.substr(0, actor.rfind('|'));
    nodes.push_back({emb.node_order[i], emb.coords(Eigen::Index(i), 0),
                     emb.k > 1 ? emb.coords(Eigen::Index(i), 1) : 0.0, cls[actor]});
  }
  std::vector<io::SvgEdge> edges;
  for (std::size_t u = 0; u < g.size(); ++u) {
    for (std::size_t v = 0; v < g.size(); ++v) {
      for (Sign s : {Sign::Positive, Sign::Negative}) {
        if (!(g.layer(s)(Eigen::Index(u), Eigen::Index(v)) > 0.0)) continue;
        auto a = emb.index_of(c.directed ? g.nodes[u].id + "|out" : g.nodes[u].id);
        auto b = emb.index_of(c.directed ? g.nodes[v].id + "|in" : g.nodes[v].id);
        if (a && b) edges.push_back({*a, *b, s});
      }
    }
  }
  io::write_files({{c.out_dir / artifact::kEmbedding, io::dump(detail::stamp(c, std::move(doc)))},
                   {c.out_dir / artifact::kEmbeddingCsv, csv.str()},
                   {c.out_dir / artifact::kEmbeddingSvg, io::render_svg(nodes, edges)}});
  out << "embedded " << emb.node_order.size() << " nodes in " << emb.k << " dimensions\n";
}

inline void cmd_aggression(const RunConfig& c, std::ostream& out) {
  const SignedDiGraph g = detail::load_graph(c);
  const json emb_doc = detail::load_artifact(c, artifact::kEmbedding);
  const Embedding emb = detail::embedding_from_json(emb_doc);
  const auto scores = detail::ranked(detail::score(c, emb, g, emb_doc.value("directed", false)));

  io::CsvWriter csv;
  csv.row({"actor", "aggression", "outaggression", "inaggression", "class"});
  json rows = json::array();
  for (const auto& s : scores) {
    csv.row({s.actor, io::fixed(s.net, 6), io::fixed(s.outaggression, 6), io::fixed(s.inaggression, 6),
             std::string(to_string(s.cls))});
    rows.push_back({{"actor", s.actor}, {"aggression", s.net}, {"outaggression", s.outaggression},
                    {"inaggression", s.inaggression}, {"class", std::string(to_string(s.cls))}});
  }
  json doc = {{"weighted", c.weighted_aggression}, {"scores", rows}};
  io::write_files({{c.out_dir / artifact::kAggression, io::dump(detail::stamp(c, std::move(doc)))},
                   {c.out_dir / artifact::kAggressionCsv, csv.str()}});
  out << scores.size() << " aggression scores\n";
}

inline std::string year_table_csv(const std::vector<YearMetrics>& rows, bool with_borders) {
  io::CsvWriter w;
  std::vector<std::string> header{"Year", "Number of events", "Cross-border movements (%)", "Number of victims",
                                  "Average distance between events (km)"};
  if (with_borders) header.push_back("Average distance to borders (km)");
  header.push_back("Average time between events (days)");
  w.row(header);
  for (const auto& m : rows) {
    std::vector<std::string> row{std::to_string(m.year), std::to_string(m.n_events),
                                 m.cross_border_pct ? std::to_string(*m.cross_border_pct) : "",
                                 std::to_string(m.victims), m.avg_step_km ? io::fixed(*m.avg_step_km, 1) : ""};
    if (with_borders) row.push_back(m.avg_border_km ? io::fixed(*m.avg_border_km, 1) : "");
    row.push_back(m.avg_gap_days ? io::fixed(*m.avg_gap_days, 1) : "");
    w.row(row);
  }
  return w.str();
}

inline void cmd_geo(const RunConfig& c, std::ostream& out) {
  if (c.borders) detail::require_readable(c.borders, "borders");
  std::optional<BorderSet> borders;
  if (c.borders) borders = BorderSet::from_geojson(io::read_json(*c.borders));
  const auto events = detail::load_events(c);
  const EventChain chain = chain_events(events);
  const auto rows = year_metrics(chain, borders ? &*borders : nullptr, c.gap_mode);

  json scenario;
  try {
    scenario = to_json(classify_scenario(chain, c.scenario));
  } catch (const Error& e) {
    scenario = {{"error", e.what()}};
  }
  json per_actor = json::object();
  if (c.actors) {
    const ActorCatalog catalog = detail::load_catalog(c);
    std::map<std::string, std::vector<EventRecord>> by_actor;
    for (const auto& raw : *c.actors) by_actor[canonicalize_actor(raw, catalog).id];
    for (const auto& e : events) {
      std::set<std::string> seen;
      for (const auto* a : e.actors()) {
        if (*a && by_actor.contains(**a) && seen.insert(**a).second) by_actor[**a].push_back(e);
      }
    }
    for (const auto& [actor, list] : by_actor) {
      try {
        per_actor[actor] = to_json(classify_scenario(chain_events(list), c.scenario));
      } catch (const Error& e) {
        per_actor[actor] = {{"error", e.what()}};
      }
    }
  }
  json table = json::array();
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  for (const auto& m : rows) {
    table.push_back({{"year", m.year}, {"n_events", m.n_events}, {"cross_border_pct", opt(m.cross_border_pct)},
                     {"victims", m.victims}, {"avg_step_km", opt(m.avg_step_km)},
                     {"avg_border_km", opt(m.avg_border_km)}, {"avg_gap_days", opt(m.avg_gap_days)}});
  }
  const json chains = chain.empty() ? json{{"type", "FeatureCollection"}, {"features", json::array()}}
                                    : export_chain_geojson(chain);
  json scenario_doc = {{"pooled", scenario}, {"per_actor", per_actor}};
  json doc = {{"located_events", chain.size()}, {"unlocated_events", chain.dropped},
              {"years", table}, {"scenario", scenario_doc}};
  io::write_files({{c.out_dir / artifact::kGeo, io::dump(detail::stamp(c, std::move(doc)))},
                   {c.out_dir / artifact::kYearTable, year_table_csv(rows, borders.has_value())},
                   {c.out_dir / artifact::kChains, io::dump(detail::stamp(c, chains))},
                   {c.out_dir / artifact::kScenario, io::dump(detail::stamp(c, scenario_doc))}});
  out << rows.size() << " years, " << chain.size() << " located events";
  if (scenario.contains("verdict")) out << ", scenario " << scenario["verdict"].get<std::string>();
  out << "\n";
}

inline void cmd_report(const RunConfig& c, std::ostream& out) {
  json artifacts = json::object();
  for (const auto& [key, name] : std::vector<std::pair<const char*, const char*>>{
           {"graph", artifact::kGraph},         {"metrics", artifact::kMetrics},
           {"embedding", artifact::kEmbedding}, {"aggression", artifact::kAggression},
           {"geo", artifact::kGeo}}) {
    json doc = detail::load_artifact(c, name);
    doc.erase("config_digest");
    doc.erase("schema_version");
    artifacts[key] = std::move(doc);
  }
  const json events = detail::load_artifact(c, artifact::kEvents);
  artifacts["ingest"] = events.at("counts");
  const json doc = {{"schema_version", std::string(kSchemaVersion)},
                    {"tool_version", std::string(kToolVersion)},
                    {"config", c.to_json()},
                    {"config_digest", c.digest()},
                    {"seed", c.seed},
                    {"artifacts", artifacts}};
  io::write_files({{c.out_dir / artifact::kReport, io::dump(doc)}});
  out << "report written to " << (c.out_dir / artifact::kReport).string() << "\n";
}

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"ingest", "graph", "metrics", "embed", "aggression", "geo", "report"};
  return names;
}

/// Runs one stage ("run" chains all of them) and maps failures onto exit
/// codes: 2 config, 3 I/O, 4 pipeline or schema.
inline int run(std::string_view command, const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    if (command == "ingest") {
      cmd_ingest(c, out);
    } else if (command == "graph") {
      cmd_graph(c, out);
    } else if (command == "metrics") {
      cmd_metrics(c, out);
    } else if (command == "embed") {
      cmd_embed(c, out);
    } else if (command == "aggression") {
      cmd_aggression(c, out);
    } else if (command == "geo") {
      cmd_geo(c, out);
    } else if (command == "report") {
      cmd_report(c, out);
    } else if (command == "run") {
      for (const auto& stage : stage_names()) {
        if (int rc = run(stage, c, out, err); rc != kOk) return rc;
      }
    } else {
      err << "unknown command '" << command << "'\n";
      return kConfigError;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    err << "error: malformed document: " << e.what() << "\n";
    return kPipelineError;
  }
  return kOk;
}

}  // namespace cnl::pipeline
