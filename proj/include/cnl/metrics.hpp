#pragma once

// Social-network statistics over the sign layers of a SignedDiGraph.
//
// Every per-layer statistic works on the undirected collapse of one layer,
// restricted to the nodes that carry at least one tie in that layer (layer
// isolates are not part of the layer's node set).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cnl/error.hpp"
#include "cnl/graph.hpp"

namespace cnl {

enum class Weighting { Unweighted, Weighted };

struct LayerView {
  Sign which = Sign::Negative;
  Weighting treat_as = Weighting::Unweighted;
};

struct MetricReport {
  std::map<std::string, double> per_node;
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation

  /// Rows sorted by value descending, then actor id ascending.
  std::vector<std::pair<std::string, double>> ranked() const {
    std::vector<std::pair<std::string, double>> rows(per_node.begin(), per_node.end());
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return rows;
  }
};

namespace detail {

struct Collapsed {
  std::vector<std::size_t> members;  // graph indices of the layer's nodes
  Eigen::MatrixXd adj;               // symmetric, zero diagonal

  std::size_t size() const { return members.size(); }
  bool linked(std::size_t i, std::size_t j) const {
    return adj(Eigen::Index(i), Eigen::Index(j)) > 0.0;
  }
};

inline Collapsed collapse(const SignedDiGraph& g, const LayerView& view) {
  const Eigen::MatrixXd& m = g.layer(view.which);
  const Eigen::MatrixXd both = m + m.transpose();
  Collapsed c;
  for (Eigen::Index i = 0; i < both.rows(); ++i) {
    if ((both.row(i).array() > 0.0).any()) c.members.push_back(std::size_t(i));
  }
  const auto n = Eigen::Index(c.members.size());
  c.adj = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double w = both(Eigen::Index(c.members[std::size_t(a)]),
                            Eigen::Index(c.members[std::size_t(b)]));
      if (a != b && w > 0.0) c.adj(a, b) = view.treat_as == Weighting::Weighted ? w : 1.0;
    }
  }
  return c;
}

inline MetricReport make_report(const SignedDiGraph& g, const Collapsed& c,
                                const std::vector<double>& values) {
  MetricReport r;
  for (std::size_t i = 0; i < values.size(); ++i) r.per_node[g.nodes[c.members[i]].id] = values[i];
  if (values.empty()) return r;
  const double n = double(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std_dev = std::sqrt(ss / n);
  return r;
}

inline void require_nodes(const Collapsed& c, std::size_t minimum, const char* what) {
  if (c.size() < minimum) {
    throw Error(ErrorCode::DegenerateGraph, std::string(what) + " needs at least " +
                                                std::to_string(minimum) + " nodes in the layer, got " +
                                                std::to_string(c.size()));
  }
}

}  // namespace detail

/// Neighbor count (or tie strength when weighted) over n - 1.
inline MetricReport degree_centrality(const SignedDiGraph& g, const LayerView& view) {
  const auto c = detail::collapse(g, view);
  detail::require_nodes(c, 2, "degree centrality");
  std::vector<double> values(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    values[i] = c.adj.row(Eigen::Index(i)).sum() / double(c.size() - 1);
  }
  return detail::make_report(g, c, values);
}

/// Perron vector of the collapsed adjacency on its largest connected
/// component (ties on size go to the component holding the earliest node);
/// other nodes score 0. Power iteration runs on A + I so bipartite
/// components converge instead of oscillating.
inline MetricReport eigenvector_centrality(const SignedDiGraph& g, const LayerView& view,
                                           double tol = 1e-12, int max_iter = 100000) {
  const auto c = detail::collapse(g, view);
  detail::require_nodes(c, 2, "eigenvector centrality");
  const std::size_t n = c.size();

  std::vector<int> component(n, -1);
  std::vector<std::size_t> sizes;
  for (std::size_t s = 0; s < n; ++s) {
    if (component[s] >= 0) continue;
    const int id = int(sizes.size());
    std::size_t count = 0;
    std::vector<std::size_t> stack{s};
    component[s] = id;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      ++count;
      for (std::size_t v = 0; v < n; ++v) {
        if (component[v] < 0 && c.linked(u, v)) {
          component[v] = id;
          stack.push_back(v);
        }
      }
    }
    sizes.push_back(count);
  }
  const int largest = int(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (component[i] == largest) keep.push_back(Eigen::Index(i));
  }
  const auto m = Eigen::Index(keep.size());
  Eigen::MatrixXd a(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) = c.adj(keep[std::size_t(i)], keep[std::size_t(j)]);
  }
  const Eigen::MatrixXd shifted = a + Eigen::MatrixXd::Identity(m, m);

  Eigen::VectorXd x = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(double(m)));
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = shifted * x;
    y.normalize();
    x = y;
    const double lambda = x.dot(a * x);
    if ((a * x - lambda * x).norm() <= tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence,
                "eigenvector centrality exceeded " + std::to_string(max_iter) + " iterations");
  }

  std::vector<double> values(n, 0.0);
  for (Eigen::Index i = 0; i < m; ++i) values[std::size_t(keep[std::size_t(i)])] = std::abs(x(i));
  return detail::make_report(g, c, values);
}

/// Brandes accumulation over unweighted BFS; each unordered pair counted
/// once, normalized by (n-1)(n-2)/2. Hop counts are used regardless of the
/// view's weighting.
inline MetricReport betweenness_centrality(const SignedDiGraph& g, const LayerView& view) {
  const auto c = detail::collapse(g, view);
  detail::require_nodes(c, 2, "betweenness centrality");
  const std::size_t n = c.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (c.linked(i, j)) adj[i].push_back(j);
    }
  }

  std::vector<double> bc(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> order;
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<double> sigma(n, 0.0), delta(n, 0.0);
    std::vector<long> dist(n, -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      order.push_back(v);
      for (auto w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto w = *it;
      for (auto v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) bc[w] += delta[w];
    }
  }
  const double pairs = double(n - 1) * double(n - 2) / 2.0;
  for (double& v : bc) v = pairs > 0.0 ? v / 2.0 / pairs : 0.0;
  return detail::make_report(g, c, bc);
}

/// Linked dyads over n(n-1)/2.
inline double density(const SignedDiGraph& g, const LayerView& view) {
  const auto c = detail::collapse(g, {view.which, Weighting::Unweighted});
  detail::require_nodes(c, 2, "density");
  const double n = double(c.size());
  return c.adj.sum() / 2.0 / (n * (n - 1.0) / 2.0);
}

/// Global transitivity: 3 x triangles / connected triples. Zero when the
/// layer has no connected triple.
inline double clustering_coefficient(const SignedDiGraph& g, const LayerView& view) {
  const auto c = detail::collapse(g, {view.which, Weighting::Unweighted});
  detail::require_nodes(c, 3, "clustering coefficient");
  const Eigen::MatrixXd& a = c.adj;
  const double closed_walks = (a * a * a).trace();  // 6 x triangles
  double triples = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double d = a.row(i).sum();
    triples += d * (d - 1.0) / 2.0;
  }
  return triples > 0.0 ? (closed_walks / 2.0) / triples : 0.0;
}

struct SignedTransitivity {
  double closed_negative_fraction = 0.0;  // of closed two-paths
  double closed_positive_fraction = 0.0;  // of closed two-paths
  double open_fraction = 0.0;             // of all two-paths
  std::size_t two_paths = 0;
  std::size_t closed_negative = 0;
  std::size_t closed_positive = 0;
};

/// Classifies the closing dyad of every negative two-path u-v-w (u < w) in
/// the undirected collapse of both layers. A dyad carrying both signs counts
/// as negative.
inline SignedTransitivity signed_transitivity(const SignedDiGraph& g) {
  const Eigen::MatrixXd neg = g.neg + g.neg.transpose();
  const Eigen::MatrixXd pos = g.pos + g.pos.transpose();
  if (!(neg.array() > 0.0).any()) {
    throw Error(ErrorCode::DegenerateGraph, "signed transitivity needs negative ties");
  }
  const auto n = neg.rows();
  SignedTransitivity t;
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index u = 0; u < n; ++u) {
      if (u == v || !(neg(u, v) > 0.0)) continue;
      for (Eigen::Index w = u + 1; w < n; ++w) {
        if (w == v || !(neg(v, w) > 0.0)) continue;
        ++t.two_paths;
        if (neg(u, w) > 0.0) {
          ++t.closed_negative;
        } else if (pos(u, w) > 0.0) {
          ++t.closed_positive;
        }
      }
    }
  }
  const std::size_t closed = t.closed_negative + t.closed_positive;
  if (closed > 0) {
    t.closed_negative_fraction = double(t.closed_negative) / double(closed);
    t.closed_positive_fraction = double(t.closed_positive) / double(closed);
  }
  if (t.two_paths > 0) t.open_fraction = double(t.two_paths - closed) / double(t.two_paths);
  return t;
}

struct EIResult {
  double index = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
  double external = 0.0;
  double internal = 0.0;
};

namespace detail {

inline double ei_of(const Collapsed& c, const std::vector<std::uint32_t>& label,
                    double* external = nullptr, double* internal = nullptr) {
  double e = 0.0, i = 0.0;
  for (std::size_t a = 0; a < c.size(); ++a) {
    for (std::size_t b = a + 1; b < c.size(); ++b) {
      const double w = c.adj(Eigen::Index(a), Eigen::Index(b));
      if (w <= 0.0) continue;
      (label[a] == label[b] ? i : e) += w;
    }
  }
  if (external) *external = e;
  if (internal) *internal = i;
  return (e - i) / (e + i);
}

}  // namespace detail

/// E/I index over the dyads of one layer with a label-permutation test.
/// `labels` holds one group label per graph node. The label shuffles are
/// drawn up front from `seed`, so the p-value does not depend on `workers`.
inline EIResult ei_index(const SignedDiGraph& g, const LayerView& view,
                         const std::vector<std::string>& labels, std::size_t permutations,
                         std::uint64_t seed, unsigned workers = 1) {
  if (labels.size() != g.size()) {
    throw Error(ErrorCode::InvalidArgument, "one label per node required");
  }
  if (permutations < 1) throw Error(ErrorCode::InvalidArgument, "permutations must be >= 1");
  const auto c = detail::collapse(g, view);
  if (c.adj.sum() <= 0.0) throw Error(ErrorCode::NoTies, "layer has no ties");

  std::map<std::string, std::uint32_t> codes;
  std::vector<std::uint32_t> observed(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    observed[i] = codes.emplace(labels[c.members[i]], std::uint32_t(codes.size())).first->second;
  }

  EIResult r;
  r.permutations = permutations;
  r.seed = seed;
  r.index = detail::ei_of(c, observed, &r.external, &r.internal);

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::uint32_t>> shuffles(permutations, observed);
  for (auto& s : shuffles) std::shuffle(s.begin(), s.end(), rng);

  workers = std::max(1u, workers);
  std::vector<std::size_t> hits(workers, 0);
  auto run = [&](unsigned w) {
    for (std::size_t p = w; p < permutations; p += workers) {
      if (detail::ei_of(c, shuffles[p]) >= r.index - 1e-12) ++hits[w];
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  r.p_value = double(std::accumulate(hits.begin(), hits.end(), std::size_t{0})) /
              double(permutations);
  return r;
}

inline std::vector<std::string> category_labels(const SignedDiGraph& g) {
  std::vector<std::string> labels;
  for (const auto& n : g.nodes) labels.emplace_back(to_string(n.category));
  return labels;
}

struct TriadCensus {
  std::size_t ppp = 0, ppn = 0, pnn = 0, nnn = 0;
  double balanced_fraction = 0.0;

  std::size_t total() const { return ppp + ppn + pnn + nnn; }
};

/// Sign classes of fully connected triples of a symmetric signed matrix.
/// Balanced triads have an even number of negative edges (PPP, PNN).
inline TriadCensus triad_census(const SignedMatrix& w) {
  const auto& m = w.values;
  const auto n = m.rows();
  TriadCensus t;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (m(i, j) == 0.0) continue;
      for (Eigen::Index k = j + 1; k < n; ++k) {
        if (m(i, k) == 0.0 || m(j, k) == 0.0) continue;
        const int negatives = int(m(i, j) < 0.0) + int(m(i, k) < 0.0) + int(m(j, k) < 0.0);
        switch (negatives) {
          case 0: ++t.ppp; break;
          case 1: ++t.ppn; break;
          case 2: ++t.pnn; break;
          default: ++t.nnn; break;
        }
      }
    }
  }
  if (t.total() > 0) t.balanced_fraction = double(t.ppp + t.pnn) / double(t.total());
  return t;
}

}  // namespace cnl
