#pragma once

// Signed directed actor graph: tie extraction from events, aggregation,
// induced subgraphs, and the symmetric signed matrices fed to the spectral
// code.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cnl/error.hpp"
#include "cnl/ingest.hpp"

namespace cnl {

enum class Sign { Positive, Negative };

struct Tie {
  std::string source;
  std::string target;
  Sign sign;
  double weight = 1.0;

  friend bool operator==(const Tie&, const Tie&) = default;
};

/// PaperLiteral draws negative ties only from the co-attacker B to the target
/// C. Full draws them from both A and B to both C and D.
enum class TieMode { PaperLiteral, Full };
enum class WeightScheme { IncidentCount, FatalityWeighted };

inline std::string_view to_string(TieMode m) {
  return m == TieMode::Full ? "full" : "paper_literal";
}
inline std::string_view to_string(WeightScheme w) {
  return w == WeightScheme::IncidentCount ? "incident_count" : "fatality_weighted";
}
inline std::optional<TieMode> parse_tie_mode(std::string_view s) {
  if (s == "full") return TieMode::Full;
  if (s == "paper_literal") return TieMode::PaperLiteral;
  return std::nullopt;
}
inline std::optional<WeightScheme> parse_weight_scheme(std::string_view s) {
  if (s == "incident_count") return WeightScheme::IncidentCount;
  if (s == "fatality_weighted") return WeightScheme::FatalityWeighted;
  return std::nullopt;
}

/// Positive ties B->A and D->C; negative ties per `mode`. Ties from an actor
/// to itself are dropped.
inline std::vector<Tie> extract_ties(const EventRecord& event, TieMode mode) {
  if (!event.actor_a || !event.actor_c) {
    throw Error(ErrorCode::MissingPrincipal, "event '" + event.id + "' lacks attacker or target");
  }
  std::vector<Tie> ties;
  auto add = [&](const std::optional<std::string>& from, const std::optional<std::string>& to,
                 Sign sign) {
    if (from && to && *from != *to) ties.push_back({*from, *to, sign, 1.0});
  };
  add(event.actor_b, event.actor_a, Sign::Positive);
  add(event.actor_d, event.actor_c, Sign::Positive);
  if (mode == TieMode::PaperLiteral) {
    add(event.actor_b, event.actor_c, Sign::Negative);
  } else {
    add(event.actor_a, event.actor_c, Sign::Negative);
    add(event.actor_b, event.actor_c, Sign::Negative);
    add(event.actor_a, event.actor_d, Sign::Negative);
    add(event.actor_b, event.actor_d, Sign::Negative);
  }
  return ties;
}

struct Node {
  std::string id;
  Category category = Category::Militias;
  std::string country;  // most frequent country among the actor's tie-generating events

  friend bool operator==(const Node&, const Node&) = default;
};

/// Two non-negative weighted directed layers over a shared node list. The
/// sign of a tie is carried by the layer it lives in.
struct SignedDiGraph {
  std::vector<Node> nodes;
  Eigen::MatrixXd pos;
  Eigen::MatrixXd neg;

  SignedDiGraph() = default;
  explicit SignedDiGraph(std::vector<Node> ns)
      : nodes(std::move(ns)),
        pos(Eigen::MatrixXd::Zero(Eigen::Index(nodes.size()), Eigen::Index(nodes.size()))),
        neg(Eigen::MatrixXd::Zero(Eigen::Index(nodes.size()), Eigen::Index(nodes.size()))) {}

  std::size_t size() const { return nodes.size(); }

  const Eigen::MatrixXd& layer(Sign s) const { return s == Sign::Positive ? pos : neg; }
  Eigen::MatrixXd& layer(Sign s) { return s == Sign::Positive ? pos : neg; }

  std::optional<std::size_t> index_of(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].id == id) return i;
    }
    return std::nullopt;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) out.push_back(n.id);
    return out;
  }

  void add_tie(std::size_t from, std::size_t to, Sign sign, double weight) {
    if (from == to) throw Error(ErrorCode::InvalidArgument, "self tie on " + nodes[from].id);
    if (!(weight > 0.0)) throw Error(ErrorCode::InvalidArgument, "tie weight must be positive");
    layer(sign)(Eigen::Index(from), Eigen::Index(to)) += weight;
  }

  std::size_t tie_count(Sign s) const {
    return std::size_t((layer(s).array() > 0.0).count());
  }
};

using CategoryLookup = std::function<Category(const std::string&)>;

/// Aggregates the ties of every event carrying both attacker and target.
/// Nodes are the actors touched by at least one positive-weight tie, sorted
/// by id, so the result does not depend on event order.
inline SignedDiGraph build_graph(const std::vector<EventRecord>& events, TieMode mode,
                                 WeightScheme scheme, const CategoryLookup& category_of) {
  std::map<std::tuple<std::string, std::string, Sign>, double> weights;
  std::map<std::string, std::map<std::string, long>> countries;
  for (const auto& e : events) {
    if (!e.actor_a || !e.actor_c) continue;
    const double w = scheme == WeightScheme::IncidentCount ? 1.0 : double(e.fatalities);
    for (const Tie& t : extract_ties(e, mode)) {
      if (!(w > 0.0)) continue;
      weights[{t.source, t.target, t.sign}] += w;
      ++countries[t.source][e.country];
      ++countries[t.target][e.country];
    }
  }

  std::vector<Node> nodes;
  for (const auto& [id, seen] : countries) {
    // Ties on counts resolve to the lexicographically smallest country.
    auto best = std::max_element(seen.begin(), seen.end(), [](const auto& a, const auto& b) {
      return a.second < b.second;
    });
    nodes.push_back({id, category_of(id), best->first});
  }
  SignedDiGraph g(std::move(nodes));
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.size(); ++i) index[g.nodes[i].id] = i;
  for (const auto& [key, w] : weights) {
    const auto& [src, dst, sign] = key;
    g.add_tie(index.at(src), index.at(dst), sign, w);
  }
  return g;
}

inline SignedDiGraph build_graph(const std::vector<EventRecord>& events, TieMode mode,
                                 WeightScheme scheme, const ActorCatalog& catalog) {
  return build_graph(events, mode, scheme,
                     [&](const std::string& id) { return catalog.category_of(id); });
}

/// Induced subgraph on the nodes accepted by `keep`, in original order.
inline SignedDiGraph subgraph(const SignedDiGraph& g, const std::function<bool(const Node&)>& keep) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (keep(g.nodes[i])) kept.push_back(i);
  }
  std::vector<Node> nodes;
  for (auto i : kept) nodes.push_back(g.nodes[i]);
  SignedDiGraph out(std::move(nodes));
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = 0; b < kept.size(); ++b) {
      out.pos(Eigen::Index(a), Eigen::Index(b)) = g.pos(Eigen::Index(kept[a]), Eigen::Index(kept[b]));
      out.neg(Eigen::Index(a), Eigen::Index(b)) = g.neg(Eigen::Index(kept[a]), Eigen::Index(kept[b]));
    }
  }
  return out;
}

/// Square signed matrix with labelled rows/columns.
struct SignedMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;

  std::size_t size() const { return ids.size(); }
};

/// W = (P + P^T)/2 - (N + N^T)/2. Opposite signs on one pair net out.
inline SignedMatrix symmetrize(const SignedDiGraph& g) {
  Eigen::MatrixXd w = 0.5 * (g.pos + g.pos.transpose()) - 0.5 * (g.neg + g.neg.transpose());
  return {g.ids(), std::move(w)};
}

inline std::size_t out_index(std::size_t v) { return 2 * v; }
inline std::size_t in_index(std::size_t v) { return 2 * v + 1; }

/// Splits every node v into (v|out, v|in) at rows 2v and 2v+1. A directed tie
/// u->v with net signed weight w = P[u][v] - N[u][v] becomes the symmetric
/// entry (u|out, v|in) = w; each v|out--v|in pair is joined with weight
/// coupling * (sum of absolute tie weights incident to v).
inline SignedMatrix directed_expand(const SignedDiGraph& g, double coupling) {
  if (!(coupling > 0.0)) throw Error(ErrorCode::InvalidArgument, "coupling must be positive");
  const auto n = Eigen::Index(g.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const Eigen::MatrixXd net = g.pos - g.neg;
  const Eigen::MatrixXd total = g.pos + g.neg;
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) {
      if (u == v) continue;
      const auto uo = Eigen::Index(out_index(std::size_t(u)));
      const auto vi = Eigen::Index(in_index(std::size_t(v)));
      m(uo, vi) = net(u, v);
      m(vi, uo) = net(u, v);
    }
  }
  for (Eigen::Index v = 0; v < n; ++v) {
    const double degree = total.row(v).sum() + total.col(v).sum();
    const auto vo = Eigen::Index(out_index(std::size_t(v)));
    const auto vi = Eigen::Index(in_index(std::size_t(v)));
    m(vo, vi) = coupling * degree;
    m(vi, vo) = coupling * degree;
  }
  std::vector<std::string> ids;
  ids.reserve(std::size_t(2 * n));
  for (const auto& node : g.nodes) {
    ids.push_back(node.id + "|out");
    ids.push_back(node.id + "|in");
  }
  return {std::move(ids), std::move(m)};
}

/// Inverse view of directed_expand: D[u][v] = M[u|out][v|in].
inline Eigen::MatrixXd collapse_expanded(const SignedMatrix& expanded) {
  const auto n = Eigen::Index(expanded.size() / 2);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) {
      if (u != v) {
        d(u, v) = expanded.values(Eigen::Index(out_index(std::size_t(u))),
                                  Eigen::Index(in_index(std::size_t(v))));
      }
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// JSON: {schema_version, nodes:[{id, category, country}],
//        pos_edges:[[src, dst, w]], neg_edges:[...]}, edges sorted by (src, dst).

inline nlohmann::json to_json(const SignedDiGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"id", n.id}, {"category", std::string(to_string(n.category))},
                     {"country", n.country}});
  }
  auto edges = [&](const Eigen::MatrixXd& layer) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < layer.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.cols(); ++j) {
        if (layer(i, j) > 0.0) out.push_back({i, j, layer(i, j)});
      }
    }
    return out;
  };
  return {{"schema_version", std::string(kSchemaVersion)},
          {"nodes", std::move(nodes)},
          {"pos_edges", edges(g.pos)},
          {"neg_edges", edges(g.neg)}};
}

inline SignedDiGraph graph_from_json(const nlohmann::json& doc) {
  ActorCatalog::check_schema(doc, "graph");
  std::vector<Node> nodes;
  for (const auto& n : doc.at("nodes")) {
    auto category = parse_category(n.at("category").get<std::string>());
    if (!category) throw Error(ErrorCode::SchemaMismatch, "unknown node category");
    nodes.push_back({n.at("id").get<std::string>(), *category, n.value("country", std::string{})});
  }
  SignedDiGraph g(std::move(nodes));
  auto load = [&](const char* key, Sign sign) {
    for (const auto& e : doc.at(key)) {
      const auto src = e.at(0).get<std::size_t>(), dst = e.at(1).get<std::size_t>();
      if (src >= g.size() || dst >= g.size()) {
        throw Error(ErrorCode::SchemaMismatch, std::string("edge index out of range in ") + key);
      }
      g.add_tie(src, dst, sign, e.at(2).get<double>());
    }
  };
  load("pos_edges", Sign::Positive);
  load("neg_edges", Sign::Negative);
  return g;
}

}  // namespace cnl
