#pragma once

// Track analysis on a complete DAG of ranked position reports. Vertex
// evidence supports "the target was here"; edge evidence doubts the direct
// transition between two positions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "dsintel/ds_core.hpp"
#include "dsintel/metacluster.hpp"

namespace dsintel {

inline constexpr std::size_t kTrackOracleLimit = 6;
inline constexpr double kDefaultEdgeCap = 0.999;

class OracleLimitError : public std::runtime_error {
 public:
  explicit OracleLimitError(std::size_t n)
      : std::runtime_error("combine_oracle refuses a graph of " +
                           std::to_string(n) + " vertices (limit is " +
                           std::to_string(kTrackOracleLimit) + ")") {}
};

struct TrackVertex {
  std::string label;
  std::optional<double> time_s;
  std::optional<Position> position;
  double support = 0.0;  // p_i in [0,1)
};

/// Strictly increasing vertex indices (0-based ranks).
using TrackPath = std::vector<std::size_t>;

class TrackGraph;

namespace detail {
struct OracleCache {
  std::once_flag once;
  double conflict = 0.0;
};
}  // namespace detail

class TrackGraph {
 public:
  /// `edge_mass[i][j]` for i < j is q_ij; other entries are ignored.
  TrackGraph(std::vector<TrackVertex> vertices,
             std::vector<std::vector<double>> edge_mass)
      : vertices_(std::move(vertices)),
        edges_(std::move(edge_mass)),
        cache_(std::make_shared<detail::OracleCache>()) {
    const std::size_t n = vertices_.size();
    if (n == 0) throw ValidationError("track graph has no vertices");
    if (edges_.size() != n)
      throw ValidationError("edge mass matrix has the wrong size");
    for (std::size_t i = 0; i < n; ++i) {
      const double p = vertices_[i].support;
      if (!(p >= 0.0 && p < 1.0))
        throw ValidationError("vertex support must lie in [0,1)");
      if (edges_[i].size() != n)
        throw ValidationError("edge mass matrix has the wrong size");
      for (std::size_t j = i + 1; j < n; ++j)
        if (!(edges_[i][j] >= 0.0 && edges_[i][j] < 1.0))
          throw ValidationError("edge mass must lie in [0,1)");
    }
  }

  /// Graph from supports and a dense q matrix (labels "1".."n").
  static TrackGraph from_masses(const std::vector<double>& supports,
                                std::vector<std::vector<double>> edge_mass) {
    std::vector<TrackVertex> vs;
    for (std::size_t i = 0; i < supports.size(); ++i)
      vs.push_back({std::to_string(i + 1), std::nullopt, std::nullopt, supports[i]});
    return TrackGraph(std::move(vs), std::move(edge_mass));
  }

  std::size_t size() const noexcept { return vertices_.size(); }
  const TrackVertex& vertex(std::size_t i) const { return vertices_.at(i); }
  const std::vector<TrackVertex>& vertices() const noexcept { return vertices_; }
  double support(std::size_t i) const { return vertices_.at(i).support; }
  double edge(std::size_t i, std::size_t j) const { return edges_.at(i).at(j); }

 private:
  friend double oracle_conflict(const TrackGraph& g);
  std::vector<TrackVertex> vertices_;
  std::vector<std::vector<double>> edges_;
  std::shared_ptr<detail::OracleCache> cache_;
};

inline void validate_path(const TrackGraph& g, const TrackPath& path) {
  if (path.empty()) throw ValidationError("track path is empty");
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (path[k] >= g.size()) throw ValidationError("track path vertex out of range");
    if (k && path[k] <= path[k - 1])
      throw ValidationError("track path must visit vertices in rank order");
  }
}

/// Doubt about a direct transition from kinematics: the speed needed to
/// cover the distance in the elapsed time, measured against `v_max` (km/h).
inline double kinematic_edge_mass(const TrackVertex& from, const TrackVertex& to,
                                  double v_max, double q_cap = kDefaultEdgeCap) {
  if (!(v_max > 0.0)) throw ValidationError("v_max must be positive");
  if (!from.time_s || !to.time_s || !from.position || !to.position)
    throw ValidationError("kinematic edge mass needs time and position");
  const double dt_h = (*to.time_s - *from.time_s) / 3600.0;
  if (dt_h <= 0.0) return q_cap;
  const double dist = std::hypot(to.position->x_km - from.position->x_km,
                                 to.position->y_km - from.position->y_km);
  const double speed = dist / dt_h;
  if (speed <= v_max) return 0.0;
  return std::min(q_cap, 1.0 - v_max / speed);
}

/// Complete graph over vertices already in rank order, edges from kinematics.
inline TrackGraph build_kinematic_graph(std::vector<TrackVertex> vertices,
                                        double v_max,
                                        double q_cap = kDefaultEdgeCap) {
  const std::size_t n = vertices.size();
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      q[i][j] = kinematic_edge_mass(vertices[i], vertices[j], v_max, q_cap);
  return TrackGraph(std::move(vertices), std::move(q));
}

struct PathAssessment {
  TrackPath path;
  double support = 0.0;
  double plausibility = 0.0;
  double plausibility_unnorm = 0.0;
};

struct TrackAnalysis {
  std::vector<PathAssessment> paths;  // ordered by vertex-set encoding
  double conflict = 0.0;

  const PathAssessment& find(const TrackPath& path) const {
    for (const auto& p : paths)
      if (p.path == path) return p;
    throw ValidationError("path not in analysis");
  }
};

namespace detail {

inline TrackPath path_from_mask(std::uint64_t mask) {
  TrackPath p;
  for (std::size_t i = 0; mask >> i; ++i)
    if ((mask >> i) & 1U) p.push_back(i);
  return p;
}

inline std::uint64_t mask_from_path(const TrackPath& path) {
  std::uint64_t m = 0;
  for (std::size_t v : path) m |= std::uint64_t{1} << v;
  return m;
}

struct OracleEvidence {
  std::uint64_t focal;  // set of track hypotheses, bit (mask - 1)
  double mass;
};

inline std::vector<OracleEvidence> oracle_evidence(const TrackGraph& g) {
  const std::size_t n = g.size();
  const std::uint64_t n_paths = (std::uint64_t{1} << n) - 1;
  std::vector<OracleEvidence> ev;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t focal = 0;
    for (std::uint64_t m = 1; m <= n_paths; ++m)
      if ((m >> i) & 1U) focal |= std::uint64_t{1} << (m - 1);
    ev.push_back({focal, g.support(i)});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::uint64_t between =
          ((std::uint64_t{1} << j) - 1) & ~((std::uint64_t{1} << (i + 1)) - 1);
      std::uint64_t focal = 0;
      for (std::uint64_t m = 1; m <= n_paths; ++m) {
        const bool direct = ((m >> i) & 1U) && ((m >> j) & 1U) && !(m & between);
        if (!direct) focal |= std::uint64_t{1} << (m - 1);
      }
      ev.push_back({focal, g.edge(i, j)});
    }
  }
  return ev;
}

// Depth-first walk over the remaining selections. Once the intersection is
// empty, every completion is conflict and the remaining weight sums to 1.
inline void oracle_walk(const std::vector<OracleEvidence>& ev, std::size_t k,
                        std::uint64_t meet, double weight,
                        std::unordered_map<std::uint64_t, double>& acc,
                        double& conflict) {
  if (weight == 0.0) return;
  if (meet == 0) {
    conflict += weight;
    return;
  }
  if (k == ev.size()) {
    acc[meet] += weight;
    return;
  }
  oracle_walk(ev, k + 1, meet & ev[k].focal, weight * ev[k].mass, acc, conflict);
  oracle_walk(ev, k + 1, meet, weight * (1.0 - ev[k].mass), acc, conflict);
}

struct OracleMasses {
  std::map<std::uint64_t, double> focals;  // unnormalized, nonempty focals
  double conflict = 0.0;
};

// The selection space is cut into a fixed number of chunks by the first few
// evidence choices; chunks are reduced in index order, so the sums do not
// depend on how many threads ran them.
inline OracleMasses oracle_masses(const TrackGraph& g, std::size_t threads) {
  if (g.size() > kTrackOracleLimit) throw OracleLimitError(g.size());
  const auto ev = oracle_evidence(g);
  const std::uint64_t theta = (std::uint64_t{1} << ((std::uint64_t{1} << g.size()) - 1)) - 1;
  const std::size_t split = std::min<std::size_t>(ev.size(), 4);
  const std::size_t chunks = std::size_t{1} << split;

  struct Chunk {
    std::unordered_map<std::uint64_t, double> acc;
    double conflict = 0.0;
  };
  std::vector<Chunk> parts(chunks);
  auto run = [&](std::size_t c) {
    std::uint64_t meet = theta;
    double w = 1.0;
    for (std::size_t k = 0; k < split; ++k) {
      if ((c >> k) & 1U) {
        meet &= ev[k].focal;
        w *= ev[k].mass;
      } else {
        w *= 1.0 - ev[k].mass;
      }
    }
    oracle_walk(ev, split, meet, w, parts[c].acc, parts[c].conflict);
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, chunks);
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < chunks; c += workers) run(c);
      });
    for (auto& t : pool) t.join();
  }

  OracleMasses out;
  for (auto& part : parts) {
    std::map<std::uint64_t, double> sorted(part.acc.begin(), part.acc.end());
    for (const auto& [m, w] : sorted) out.focals[m] += w;
    out.conflict += part.conflict;
  }
  return out;
}

}  // namespace detail

/// Step-by-step evidence combination by full enumeration over the frame of
/// all nonempty tracks. Refuses graphs larger than kTrackOracleLimit.
inline TrackAnalysis combine_oracle(const TrackGraph& g, std::size_t threads = 1) {
  const auto masses = detail::oracle_masses(g, threads);
  const std::uint64_t n_paths = (std::uint64_t{1} << g.size()) - 1;
  const double norm = 1.0 - masses.conflict;
  if (norm <= 0.0) throw TotalConflictError(masses.conflict);

  std::vector<double> pls(n_paths, 0.0);
  std::vector<double> bel(n_paths, 0.0);
  for (const auto& [focal, w] : masses.focals) {
    for (std::uint64_t b = 0; b < n_paths; ++b)
      if ((focal >> b) & 1U) pls[b] += w;
    if (std::has_single_bit(focal)) bel[std::countr_zero(focal)] += w;
  }

  TrackAnalysis out;
  out.conflict = masses.conflict;
  for (std::uint64_t b = 0; b < n_paths; ++b)
    out.paths.push_back({detail::path_from_mask(b + 1), bel[b] / norm,
                         pls[b] / norm, pls[b]});
  return out;
}

/// Total conflict of the full combination, computed once per graph.
inline double oracle_conflict(const TrackGraph& g) {
  std::call_once(g.cache_->once, [&] {
    g.cache_->conflict = detail::oracle_masses(g, 1).conflict;
  });
  return g.cache_->conflict;
}

struct PathPlausibility {
  double unnormalized = 0.0;
  std::optional<double> normalized;  // only within the oracle limit
};

inline double path_plausibility_unnorm(const TrackGraph& g, const TrackPath& path) {
  validate_path(g, path);
  double value = 1.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (k < path.size() && path[k] == i) {
      ++k;
      continue;
    }
    value *= 1.0 - g.support(i);
  }
  for (std::size_t k2 = 1; k2 < path.size(); ++k2)
    value *= 1.0 - g.edge(path[k2 - 1], path[k2]);
  return value;
}

/// Closed-form plausibility of a completely specified track: the product of
/// doubt-free factors over vertices off the track and transitions on it.
inline PathPlausibility path_plausibility(const TrackGraph& g, const TrackPath& path) {
  PathPlausibility out;
  out.unnormalized = path_plausibility_unnorm(g, path);
  if (g.size() <= kTrackOracleLimit)
    out.normalized = out.unnormalized / (1.0 - oracle_conflict(g));
  return out;
}

struct RankedPath {
  TrackPath path;
  double score = 0.0;  // log plausibility up to the constant sum log(1 - p_i)
  double plausibility_unnorm = 0.0;
};

namespace detail {

inline bool ranks_before(const RankedPath& a, const RankedPath& b) {
  const double tol = 1e-12 * std::max({1.0, std::abs(a.score), std::abs(b.score)});
  if (a.score > b.score + tol) return true;
  if (b.score > a.score + tol) return false;
  return a.path < b.path;
}

inline void keep_best(std::vector<RankedPath>& list, RankedPath cand, std::size_t k) {
  auto pos = std::find_if(list.begin(), list.end(),
                          [&](const RankedPath& e) { return ranks_before(cand, e); });
  if (list.size() >= k && pos == list.end()) return;
  list.insert(pos, std::move(cand));
  if (list.size() > k) list.pop_back();
}

}  // namespace detail

/// k best tracks by plausibility via longest-path dynamic programming over
/// the DAG: vertex gain -log(1 - p_i), transition cost log(1 - q_ij).
/// Equal scores prefer the lexicographically smaller vertex sequence.
inline std::vector<RankedPath> best_path_dp(const TrackGraph& g, std::size_t top_k = 1) {
  if (top_k == 0) return {};
  const std::size_t n = g.size();
  std::vector<double> gain(n);
  for (std::size_t i = 0; i < n; ++i) gain[i] = -std::log1p(-g.support(i));

  std::vector<std::vector<RankedPath>> ending(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto& list = ending[j];
    detail::keep_best(list, {{j}, gain[j], 0.0}, top_k);
    for (std::size_t i = 0; i < j; ++i) {
      const double step = std::log1p(-g.edge(i, j)) + gain[j];
      for (const auto& e : ending[i]) {
        const double score = e.score + step;
        if (list.size() >= top_k && score < list.back().score - 1e-9) continue;
        RankedPath cand{e.path, score, 0.0};
        cand.path.push_back(j);
        detail::keep_best(list, std::move(cand), top_k);
      }
    }
  }

  std::vector<RankedPath> all;
  for (auto& list : ending)
    for (auto& e : list) detail::keep_best(all, std::move(e), top_k);
  for (auto& e : all) e.plausibility_unnorm = path_plausibility_unnorm(g, e.path);
  return all;
}

/// Graphviz rendering: supports on vertices, edge masses on edges.
inline void write_dot(std::ostream& os, const TrackGraph& g,
                      const std::string& name = "tracks") {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  out << "digraph \"" << name << "\" {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < g.size(); ++i)
    out << "  v" << i + 1 << " [label=\"" << g.vertex(i).label << "\\np="
        << g.support(i) << "\"];\n";
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i + 1; j < g.size(); ++j)
      out << "  v" << i + 1 << " -> v" << j + 1 << " [label=\"" << g.edge(i, j)
          << "\"];\n";
  out << "}\n";
  os << out.str();
}

}  // namespace dsintel
