#pragma once

// Signed Laplacian, dense symmetric eigendecomposition, spectral embedding and
// aggression scoring from embedded attack-tie lengths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cnl/error.hpp"
#include "cnl/graph.hpp"

namespace cnl {

inline constexpr double kEigenResidualTol = 1e-8;

struct EigenPairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // unit-norm columns, first non-negligible entry positive
};

namespace detail {

inline void orient(Eigen::Ref<Eigen::VectorXd> x) {
  const double floor = 1e-12 * std::max(1.0, x.norm());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x(i)) > floor) {
      if (x(i) < 0.0) x = -x;
      return;
    }
  }
}

inline void require_symmetric(const Eigen::MatrixXd& m, double tol, const char* what) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " not square");
  if (m.size() == 0) return;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " not symmetric");
  }
}

}  // namespace detail

/// Full eigendecomposition of a symmetric matrix. Throws EigFailure when any
/// pair misses the residual bound ||Ax - lambda x|| <= 1e-8.
inline EigenPairs eigensystem(const Eigen::MatrixXd& a) {
  detail::require_symmetric(a, 1e-12, "matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigFailure, "eigensolver did not converge");
  EigenPairs out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
    out.vectors.col(j).normalize();
    detail::orient(out.vectors.col(j));
    const double residual = (a * out.vectors.col(j) - out.values(j) * out.vectors.col(j)).norm();
    if (residual > kEigenResidualTol) {
      throw Error(ErrorCode::EigFailure, "residual " + std::to_string(residual) + " for eigenvalue " +
                                             std::to_string(out.values(j)));
    }
  }
  return out;
}

struct SignedLaplacian {
  Eigen::MatrixXd matrix;
  std::vector<std::string> node_order;
  bool normalized = true;
  Eigen::VectorXd degree;             // absolute degree of each kept node
  std::vector<std::string> isolates;  // dropped, zero absolute degree
};

/// L = D - W with D_ii = sum_j |W_ij|; normalized: D^-1/2 L D^-1/2. Rows of
/// zero absolute degree are removed first.
inline SignedLaplacian signed_laplacian(const SignedMatrix& w, bool normalized) {
  detail::require_symmetric(w.values, 1e-12, "W");
  if (w.values.size() > 0 && w.values.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw Error(ErrorCode::InvalidArgument, "W has a non-zero diagonal");
  }
  const Eigen::VectorXd abs_degree = w.values.cwiseAbs().rowwise().sum();
  SignedLaplacian lap;
  lap.normalized = normalized;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < abs_degree.size(); ++i) {
    if (abs_degree(i) > 0.0) {
      keep.push_back(i);
      lap.node_order.push_back(w.ids[std::size_t(i)]);
    } else {
      lap.isolates.push_back(w.ids[std::size_t(i)]);
    }
  }
  if (keep.empty()) throw Error(ErrorCode::EmptyAfterIsolateRemoval, "no node has a tie");

  const auto n = Eigen::Index(keep.size());
  lap.degree.resize(n);
  lap.matrix.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    lap.degree(a) = abs_degree(keep[std::size_t(a)]);
    for (Eigen::Index b = 0; b < n; ++b) {
      lap.matrix(a, b) = -w.values(keep[std::size_t(a)], keep[std::size_t(b)]);
    }
    lap.matrix(a, a) = lap.degree(a);
  }
  if (normalized) {
    const Eigen::VectorXd s = lap.degree.cwiseSqrt().cwiseInverse();
    lap.matrix = s.asDiagonal() * lap.matrix * s.asDiagonal();
    lap.matrix = 0.5 * (lap.matrix + lap.matrix.transpose());
  }
  return lap;
}

struct Embedding {
  Eigen::MatrixXd coords;        // n x k
  Eigen::VectorXd eigenvalues;   // k, ascending
  std::vector<std::string> node_order;
  int k = 0;

  std::optional<std::size_t> index_of(std::string_view id) const {
    for (std::size_t i = 0; i < node_order.size(); ++i) {
      if (node_order[i] == id) return i;
    }
    return std::nullopt;
  }

  double distance(std::size_t i, std::size_t j) const {
    return (coords.row(Eigen::Index(i)) - coords.row(Eigen::Index(j))).norm();
  }
};

/// Coordinates from the eigenvectors of the k smallest eigenvalues, skipping
/// the trivial (constant) vector of an all-positive component. For the
/// normalized Laplacian the trivial vector is D^1/2 * 1, so the constancy
/// test runs on D^-1/2 x.
inline Embedding embed(const SignedLaplacian& lap, int k) {
  const auto n = lap.matrix.rows();
  if (k < 1 || k > n - 1) {
    throw Error(ErrorCode::DimensionTooLarge,
                "k = " + std::to_string(k) + " with " + std::to_string(n) + " nodes");
  }
  const EigenPairs pairs = eigensystem(lap.matrix);
  Embedding emb;
  emb.k = k;
  emb.node_order = lap.node_order;
  emb.coords.resize(n, k);
  emb.eigenvalues.resize(k);
  int taken = 0;
  for (Eigen::Index j = 0; j < n && taken < k; ++j) {
    const Eigen::VectorXd x = pairs.vectors.col(j);
    const Eigen::VectorXd z =
        lap.normalized ? Eigen::VectorXd(x.cwiseQuotient(lap.degree.cwiseSqrt())) : x;
    if (z.maxCoeff() - z.minCoeff() < 1e-9 * z.norm()) continue;
    emb.coords.col(taken) = x;
    emb.eigenvalues(taken) = pairs.values(j);
    ++taken;
  }
  if (taken < k) {
    throw Error(ErrorCode::DimensionTooLarge,
                "only " + std::to_string(taken) + " non-trivial eigenvectors for k = " + std::to_string(k));
  }
  return emb;
}

/// Node-split embedding of the directed graph; rows are named "<id>|out" and
/// "<id>|in".
inline Embedding embed_directed(const SignedDiGraph& g, int k, double coupling, bool normalized = true) {
  return embed(signed_laplacian(directed_expand(g, coupling), normalized), k);
}

enum class AggressionClass { Red, Orange, Green };

inline std::string_view to_string(AggressionClass c) {
  switch (c) {
    case AggressionClass::Red: return "red";
    case AggressionClass::Orange: return "orange";
    case AggressionClass::Green: return "green";
  }
  return "green";
}

struct AggressionScore {
  std::string actor;
  double outaggression = 0.0;
  double inaggression = 0.0;
  double net = 0.0;
  AggressionClass cls = AggressionClass::Green;
};

/// green: no outgoing aggression; red: more outgoing than incoming;
/// orange: some outgoing, but not more than incoming.
inline AggressionClass classify(const AggressionScore& s, double epsilon = 1e-9) {
  if (s.outaggression <= epsilon) return AggressionClass::Green;
  if (s.net > epsilon) return AggressionClass::Red;
  return AggressionClass::Orange;
}

namespace detail {

inline std::size_t embedded_row(const Embedding& emb, const std::string& id) {
  auto idx = emb.index_of(id);
  if (!idx) throw Error(ErrorCode::MissingNode, "'" + id + "' is not in the embedding");
  return *idx;
}

template <typename RowOf>
std::vector<AggressionScore> score_all(const SignedDiGraph& g, bool weighted, double epsilon,
                                       RowOf out_row, RowOf in_row) {
  const auto n = Eigen::Index(g.size());
  std::vector<AggressionScore> scores;
  scores.reserve(g.size());
  for (Eigen::Index v = 0; v < n; ++v) {
    AggressionScore s;
    s.actor = g.nodes[std::size_t(v)].id;
    double out_sum = 0.0, out_w = 0.0, in_sum = 0.0, in_w = 0.0;
    for (Eigen::Index u = 0; u < n; ++u) {
      if (const double w = g.neg(v, u); w > 0.0) {
        const double wt = weighted ? w : 1.0;
        out_sum += wt * out_row(std::size_t(v), std::size_t(u));
        out_w += wt;
      }
      if (const double w = g.neg(u, v); w > 0.0) {
        const double wt = weighted ? w : 1.0;
        in_sum += wt * in_row(std::size_t(v), std::size_t(u));
        in_w += wt;
      }
    }
    s.outaggression = out_w > 0.0 ? out_sum / out_w : 0.0;
    s.inaggression = in_w > 0.0 ? in_sum / in_w : 0.0;
    s.net = s.outaggression - s.inaggression;
    s.cls = classify(s, epsilon);
    scores.push_back(std::move(s));
  }
  return scores;
}

}  // namespace detail

/// Out-aggression of v: mean embedded length of its negative out-ties
/// (weighted by tie weight when `weighted`); in-aggression likewise over
/// negative in-ties. Every endpoint of a negative tie must be embedded.
inline std::vector<AggressionScore> aggression_scores(const Embedding& emb, const SignedDiGraph& g,
                                                      bool weighted, double epsilon = 1e-9) {
  auto dist = [&](std::size_t v, std::size_t u) {
    return emb.distance(detail::embedded_row(emb, g.nodes[v].id),
                        detail::embedded_row(emb, g.nodes[u].id));
  };
  std::function<double(std::size_t, std::size_t)> f = dist;
  return detail::score_all(g, weighted, epsilon, f, f);
}

/// Same scores on a node-split embedding: an attack v->u is measured from
/// v|out to u|in.
inline std::vector<AggressionScore> aggression_scores_directed(const Embedding& emb,
                                                               const SignedDiGraph& g, bool weighted,
                                                               double epsilon = 1e-9) {
  auto row = [&](std::size_t v, const char* role) {
    return detail::embedded_row(emb, g.nodes[v].id + role);
  };
  std::function<double(std::size_t, std::size_t)> out = [&](std::size_t v, std::size_t u) {
    return emb.distance(row(v, "|out"), row(u, "|in"));
  };
  std::function<double(std::size_t, std::size_t)> in = [&](std::size_t v, std::size_t u) {
    return emb.distance(row(u, "|out"), row(v, "|in"));
  };
  return detail::score_all(g, weighted, epsilon, out, in);
}

}  // namespace cnl
