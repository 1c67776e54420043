#pragma once

// Partitioning of a corpus of reports into per-target subsets by minimizing
// the metaconflict 1 - (1 - c0) * prod_i (1 - c_i).

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "dsintel/ds_core.hpp"

namespace dsintel {

struct Position {
  double x_km = 0.0;
  double y_km = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

struct Report {
  std::string id;
  MassFunction evidence;
  std::optional<double> time_s;
  std::optional<Position> position;
};

class EvidenceCorpus {
 public:
  EvidenceCorpus(FramePtr frame, std::vector<Report> reports)
      : frame_(std::move(frame)), reports_(std::move(reports)) {
    if (!frame_) throw ValidationError("corpus requires a frame");
    if (reports_.empty()) throw ValidationError("corpus has no reports");
    std::unordered_set<std::string> seen;
    for (const auto& r : reports_) {
      if (!seen.insert(r.id).second)
        throw ValidationError("duplicate report id '" + r.id + "'");
      if (!same_frame(r.evidence.frame(), frame_))
        throw ValidationError("report '" + r.id +
                              "' is not on the corpus frame");
    }
  }

  const FramePtr& frame() const noexcept { return frame_; }
  const std::vector<Report>& reports() const noexcept { return reports_; }
  std::size_t size() const noexcept { return reports_.size(); }
  const Report& operator[](std::size_t i) const { return reports_.at(i); }

  std::optional<std::size_t> index_of(std::string_view id) const {
    for (std::size_t i = 0; i < reports_.size(); ++i)
      if (reports_[i].id == id) return i;
    return std::nullopt;
  }

 private:
  FramePtr frame_;
  std::vector<Report> reports_;
};

/// Prior probability over the number of subsets r = 1..r_max.
class DomainPrior {
 public:
  explicit DomainPrior(std::vector<double> probabilities)
      : probs_(std::move(probabilities)) {
    if (probs_.empty()) throw ValidationError("domain prior is empty");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw ValidationError("domain prior has a negative entry");
      total += p;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
      throw ValidationError("domain prior sums to " + detail::fmt_mass(total));
  }

  static DomainPrior from_map(const std::map<int, double>& by_count) {
    if (by_count.empty()) throw ValidationError("domain prior is empty");
    if (by_count.begin()->first < 1)
      throw ValidationError("domain prior counts must be >= 1");
    std::vector<double> probs(static_cast<std::size_t>(by_count.rbegin()->first),
                              0.0);
    for (const auto& [r, p] : by_count) probs[static_cast<std::size_t>(r - 1)] = p;
    return DomainPrior(std::move(probs));
  }

  static DomainPrior uniform(std::size_t r_max) {
    if (r_max == 0) throw ValidationError("r_max must be >= 1");
    return DomainPrior(std::vector<double>(r_max, 1.0 / static_cast<double>(r_max)));
  }

  std::size_t r_max() const noexcept { return probs_.size(); }
  double probability(std::size_t n) const noexcept {
    return (n >= 1 && n <= probs_.size()) ? probs_[n - 1] : 0.0;
  }
  const std::vector<double>& probabilities() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

/// Disjoint nonempty blocks of report indices covering the corpus. Stored in
/// canonical form: members ascending, blocks ordered by smallest member.
class Partition {
 public:
  Partition(std::vector<std::vector<std::size_t>> blocks, std::size_t n_reports)
      : blocks_(std::move(blocks)) {
    std::vector<int> seen(n_reports, 0);
    for (auto& b : blocks_) {
      if (b.empty()) throw ValidationError("partition contains an empty block");
      std::sort(b.begin(), b.end());
      for (std::size_t i : b) {
        if (i >= n_reports) throw ValidationError("partition member out of range");
        if (seen[i]++) throw ValidationError("partition blocks overlap");
      }
    }
    for (int s : seen)
      if (!s) throw ValidationError("partition does not cover the corpus");
    std::sort(blocks_.begin(), blocks_.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    n_reports_ = n_reports;
  }

  /// From one block label per report; labels need not be contiguous.
  static Partition from_labels(std::span<const std::size_t> labels) {
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    std::vector<std::vector<std::size_t>> blocks;
    for (auto& [label, members] : groups) blocks.push_back(std::move(members));
    return Partition(std::move(blocks), labels.size());
  }

  const std::vector<std::vector<std::size_t>>& blocks() const noexcept {
    return blocks_;
  }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  std::size_t report_count() const noexcept { return n_reports_; }

  /// Restricted-growth labelling: the canonical encoding. Merging two blocks
  /// always yields a lexicographically smaller encoding.
  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out(n_reports_);
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      for (std::size_t i : blocks_[b]) out[i] = b;
    return out;
  }

  std::size_t block_of(std::size_t report) const {
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      if (std::binary_search(blocks_[b].begin(), blocks_[b].end(), report))
        return b;
    throw ValidationError("report not in partition");
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.blocks_ == b.blocks_;
  }

 private:
  std::vector<std::vector<std::size_t>> blocks_;
  std::size_t n_reports_ = 0;
};

struct MetaConflictReport {
  double c0 = 0.0;
  std::vector<double> cluster_conflicts;
  double mcf = 0.0;
};

/// Accumulated Dempster conflict of all evidence in a block; 1 on total
/// contradiction, 0 for empty or singleton blocks.
inline double cluster_conflict(const EvidenceCorpus& corpus,
                               std::span<const std::size_t> block) {
  if (block.size() <= 1) return 0.0;
  std::vector<MassFunction> ms;
  ms.reserve(block.size());
  for (std::size_t i : block) ms.push_back(corpus[i].evidence);
  try {
    return combine_all(ms).conflict;
  } catch (const TotalConflictError&) {
    return 1.0;
  }
}

/// Conflict between the categorical hypothesis "n subsets" and the prior.
inline double domain_conflict(std::size_t n, const DomainPrior& prior) {
  return 1.0 - prior.probability(n);
}

inline MetaConflictReport combine_metaconflict(double c0,
                                               std::vector<double> clusters) {
  double survive = 1.0 - c0;
  for (double c : clusters) survive *= 1.0 - c;
  return {c0, std::move(clusters), 1.0 - survive};
}

inline MetaConflictReport metaconflict(const EvidenceCorpus& corpus,
                                       const Partition& partition,
                                       const DomainPrior& prior) {
  std::vector<double> clusters;
  clusters.reserve(partition.block_count());
  for (const auto& b : partition.blocks())
    clusters.push_back(cluster_conflict(corpus, b));
  return combine_metaconflict(domain_conflict(partition.block_count(), prior),
                              std::move(clusters));
}

struct SearchConfig {
  std::size_t restarts = 20;
  std::uint64_t seed = 1;
  std::size_t max_sweeps = 1000;
  std::size_t threads = 1;
};

struct SearchOutcome {
  Partition partition;
  MetaConflictReport report;
  double initial_mcf = 1.0;
  std::size_t moves = 0;
};

namespace detail {

inline constexpr double kImprovementEps = 1e-12;
// Rounding allowance when a merge ties the current criterion.
inline constexpr double kMergeSlack = 1e-15;

// Cached combination state of one block during local search.
struct BlockState {
  std::vector<std::size_t> members;
  std::optional<MassFunction> combined;  // empty when totally contradictory
  double conflict = 0.0;
};

inline BlockState make_block(const EvidenceCorpus& corpus,
                             std::vector<std::size_t> members) {
  BlockState st;
  st.members = std::move(members);
  if (st.members.empty()) return st;
  std::vector<MassFunction> ms;
  ms.reserve(st.members.size());
  for (std::size_t i : st.members) ms.push_back(corpus[i].evidence);
  try {
    auto c = combine_all(ms);
    st.combined = std::move(c.mass);
    st.conflict = c.conflict;
  } catch (const TotalConflictError&) {
    st.conflict = 1.0;
  }
  return st;
}

inline double conflict_without(const EvidenceCorpus& corpus,
                               const BlockState& b, std::size_t report) {
  std::vector<std::size_t> rest;
  rest.reserve(b.members.size());
  for (std::size_t i : b.members)
    if (i != report) rest.push_back(i);
  return cluster_conflict(corpus, rest);
}

inline double conflict_with(const EvidenceCorpus& corpus, const BlockState& b,
                            std::size_t report) {
  if (b.members.empty()) return 0.0;
  if (!b.combined) return 1.0;
  try {
    const auto step = combine_dempster(*b.combined, corpus[report].evidence);
    return 1.0 - (1.0 - b.conflict) * (1.0 - step.conflict);
  } catch (const TotalConflictError&) {
    return 1.0;
  }
}

inline bool better_result(const SearchOutcome& a, const SearchOutcome& b) {
  if (a.report.mcf < b.report.mcf - kImprovementEps) return true;
  if (b.report.mcf < a.report.mcf - kImprovementEps) return false;
  return a.partition.labels() < b.partition.labels();
}

}  // namespace detail

/// Best-improvement local search from a given labelling. Each step evaluates
/// every single-report transfer (to each other block, then to one fresh
/// block) and applies the one with the largest metaconflict decrease. When
/// no transfer improves, the best non-worsening merge of two blocks is taken.
inline SearchOutcome local_search(const EvidenceCorpus& corpus,
                                  const DomainPrior& prior,
                                  std::span<const std::size_t> initial_labels,
                                  std::size_t max_sweeps = 1000) {
  using detail::BlockState;
  if (initial_labels.size() != corpus.size())
    throw ValidationError("initial labelling does not match corpus size");

  const Partition start = Partition::from_labels(initial_labels);
  std::vector<BlockState> blocks;
  for (const auto& b : start.blocks())
    blocks.push_back(detail::make_block(corpus, b));
  std::vector<std::size_t> label = start.labels();

  auto survival = [&](std::size_t n, auto&& cluster_factor) {
    double s = 1.0 - domain_conflict(n, prior);
    for (std::size_t i = 0; i < blocks.size(); ++i) s *= cluster_factor(i);
    return s;
  };
  auto current_survival = [&] {
    return survival(blocks.size(),
                    [&](std::size_t i) { return 1.0 - blocks[i].conflict; });
  };

  const double initial_mcf = 1.0 - current_survival();
  std::size_t moves = 0;

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    const double base = current_survival();
    const std::size_t n = blocks.size();
    double best_gain = detail::kImprovementEps;
    std::optional<std::pair<std::size_t, std::size_t>> best;  // (report, target)

    for (std::size_t j = 0; j < corpus.size(); ++j) {
      const std::size_t from = label[j];
      const bool singleton = blocks[from].members.size() == 1;
      const double c_from = detail::conflict_without(corpus, blocks[from], j);
      const std::size_t n_after_removal = singleton ? n - 1 : n;

      for (std::size_t to = 0; to < n; ++to) {
        if (to == from) continue;
        const double c_to = detail::conflict_with(corpus, blocks[to], j);
        const double s = survival(n_after_removal, [&](std::size_t i) {
          if (i == from) return 1.0 - c_from;
          if (i == to) return 1.0 - c_to;
          return 1.0 - blocks[i].conflict;
        });
        if (s - base > best_gain) {
          best_gain = s - base;
          best = {j, to};
        }
      }
      if (!singleton) {
        const double s = survival(n + 1, [&](std::size_t i) {
          return i == from ? 1.0 - c_from : 1.0 - blocks[i].conflict;
        });
        if (s - base > best_gain) {
          best_gain = s - base;
          best = {j, n};
        }
      }
    }
    if (!best) {
      // No transfer helps: merge the pair of blocks that keeps the criterion
      // highest, provided it does not get worse. Ties merge, so the search
      // settles on the coarsest of equally scored partitions.
      std::optional<BlockState> merged_best;
      std::pair<std::size_t, std::size_t> pair{0, 0};
      double best_s = base - detail::kMergeSlack;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
          std::vector<std::size_t> joined = blocks[a].members;
          joined.insert(joined.end(), blocks[b].members.begin(), blocks[b].members.end());
          std::sort(joined.begin(), joined.end());
          auto m = detail::make_block(corpus, std::move(joined));
          const double s = survival(n - 1, [&](std::size_t i) {
            if (i == a) return 1.0 - m.conflict;
            if (i == b) return 1.0;
            return 1.0 - blocks[i].conflict;
          });
          if (s > best_s) {
            best_s = s;
            merged_best = std::move(m);
            pair = {a, b};
          }
        }
      }
      if (!merged_best) break;
      std::vector<BlockState> next;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == pair.first)
          next.push_back(std::move(*merged_best));
        else if (i != pair.second)
          next.push_back(std::move(blocks[i]));
      }
      blocks = std::move(next);
      for (std::size_t b = 0; b < blocks.size(); ++b)
        for (std::size_t i : blocks[b].members) label[i] = b;
      ++moves;
      continue;
    }

    const auto [j, to] = *best;
    const std::size_t from = label[j];
    std::vector<std::vector<std::size_t>> members;
    for (const auto& b : blocks) members.push_back(b.members);
    if (to == n) members.emplace_back();
    std::erase(members[from], j);
    members[to].push_back(j);
    std::sort(members[to].begin(), members[to].end());

    std::vector<BlockState> next;
    for (std::size_t b = 0; b < members.size(); ++b) {
      if (members[b].empty()) continue;
      if (b == from || b == to)
        next.push_back(detail::make_block(corpus, std::move(members[b])));
      else
        next.push_back(std::move(blocks[b]));
    }
    blocks = std::move(next);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (std::size_t i : blocks[b].members) label[i] = b;
    ++moves;
  }

  Partition result = Partition::from_labels(label);
  MetaConflictReport report = metaconflict(corpus, result, prior);
  return {std::move(result), std::move(report), initial_mcf, moves};
}

/// Random initial labelling for one restart: a block count drawn uniformly
/// from 1..min(r_max, N), then each report assigned uniformly.
inline std::vector<std::size_t> random_labels(std::size_t n_reports,
                                              const DomainPrior& prior,
                                              std::uint64_t seed,
                                              std::size_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  const std::size_t n_max = std::min(prior.r_max(), n_reports);
  std::uniform_int_distribution<std::size_t> count(1, n_max);
  const std::size_t n = count(rng);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> labels(n_reports);
  for (auto& l : labels) l = pick(rng);
  return labels;
}

/// Multi-start local search. Restarts are independent and may run on
/// several threads; the merge keeps the lowest metaconflict and breaks ties
/// by canonical encoding, so the result does not depend on scheduling.
inline SearchOutcome partition_search(const EvidenceCorpus& corpus,
                                      const DomainPrior& prior,
                                      const SearchConfig& config = {}) {
  const std::size_t restarts = std::max<std::size_t>(config.restarts, 1);
  std::vector<std::optional<SearchOutcome>> results(restarts);

  auto run = [&](std::size_t r) {
    const auto labels = random_labels(corpus.size(), prior, config.seed, r);
    results[r] = local_search(corpus, prior, labels, config.max_sweeps);
  };

  const std::size_t workers =
      std::clamp<std::size_t>(config.threads, 1, restarts);
  if (workers == 1) {
    for (std::size_t r = 0; r < restarts; ++r) run(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < restarts; r = next++) run(r);
      });
    for (auto& t : pool) t.join();
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r)
    if (detail::better_result(*results[r], *results[best])) best = r;
  return std::move(*results[best]);
}

}  // namespace dsintel
