#pragma once

// Graded membership of reports in subsets, derived from how cluster and
// domain conflicts change under hypothetical single-report moves.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "dsintel/ds_core.hpp"
#include "dsintel/metacluster.hpp"

namespace dsintel {

struct BlockEvidence {
  double cluster_against = 0.0;
  double domain_component = 0.0;
  double total = 0.0;  // 1 - (1 - cluster_against)(1 - domain_component)
};

struct MembershipEvidence {
  std::size_t report = 0;
  std::size_t own_block = 0;
  std::vector<BlockEvidence> blocks;
  BlockEvidence fresh;  // moving the report into a new block of its own
};

struct ReportMembership {
  std::vector<double> plausibility;
  double fresh_plausibility = 1.0;
  std::vector<double> weights;  // plausibilities normalized over real blocks
};

struct MembershipSpecification {
  std::vector<ReportMembership> reports;  // corpus order
};

/// Share of the conflict `after` that is new relative to `before`:
/// 1 - (1 - after) / (1 - before), floored at 0. A pre-existing conflict of
/// 1 leaves nothing to attribute and yields 1.
inline double incremental_conflict(double before, double after) {
  const double room = 1.0 - before;
  if (room <= 0.0) return 1.0;
  return std::clamp((after - before) / room, 0.0, 1.0);
}

namespace detail {

inline BlockEvidence fuse(double cluster, double domain) {
  return {cluster, domain, 1.0 - (1.0 - cluster) * (1.0 - domain)};
}

}  // namespace detail

inline MembershipEvidence membership_evidence(const EvidenceCorpus& corpus,
                                              const Partition& partition,
                                              const DomainPrior& prior,
                                              std::size_t report) {
  if (partition.report_count() != corpus.size())
    throw ValidationError("partition does not match corpus");
  const auto& blocks = partition.blocks();
  const std::size_t n = blocks.size();
  const std::size_t own = partition.block_of(report);
  const bool singleton = blocks[own].size() == 1;

  MembershipEvidence ev;
  ev.report = report;
  ev.own_block = own;
  ev.blocks.resize(n);

  const double c0 = domain_conflict(n, prior);
  // Leaving a singleton block removes that block; every other placement
  // inherits the count change.
  const double leave_domain =
      singleton ? incremental_conflict(c0, domain_conflict(n - 1, prior)) : 0.0;

  std::vector<std::size_t> without;
  for (std::size_t i : blocks[own])
    if (i != report) without.push_back(i);
  const double c_own = cluster_conflict(corpus, blocks[own]);
  const double c_own_without = cluster_conflict(corpus, without);
  ev.blocks[own] = detail::fuse(incremental_conflict(c_own_without, c_own), 0.0);

  for (std::size_t k = 0; k < n; ++k) {
    if (k == own) continue;
    std::vector<std::size_t> with = blocks[k];
    with.insert(std::upper_bound(with.begin(), with.end(), report), report);
    const double before = cluster_conflict(corpus, blocks[k]);
    const double after = cluster_conflict(corpus, with);
    ev.blocks[k] = detail::fuse(incremental_conflict(before, after), leave_domain);
  }

  if (singleton) {
    ev.fresh = detail::fuse(0.0, 0.0);
  } else {
    ev.fresh = detail::fuse(
        0.0, incremental_conflict(c0, domain_conflict(n + 1, prior)));
  }
  return ev;
}

inline ReportMembership membership_from_evidence(const MembershipEvidence& ev) {
  ReportMembership rm;
  rm.plausibility.reserve(ev.blocks.size());
  double total = 0.0;
  for (const auto& b : ev.blocks) {
    rm.plausibility.push_back(1.0 - b.total);
    total += rm.plausibility.back();
  }
  rm.fresh_plausibility = 1.0 - ev.fresh.total;
  rm.weights.resize(rm.plausibility.size());
  for (std::size_t k = 0; k < rm.weights.size(); ++k)
    rm.weights[k] = total > 0.0
                        ? rm.plausibility[k] / total
                        : 1.0 / static_cast<double>(rm.weights.size());
  return rm;
}

inline MembershipSpecification specify_corpus(const EvidenceCorpus& corpus,
                                              const Partition& partition,
                                              const DomainPrior& prior) {
  MembershipSpecification spec;
  spec.reports.reserve(corpus.size());
  for (std::size_t j = 0; j < corpus.size(); ++j)
    spec.reports.push_back(
        membership_from_evidence(membership_evidence(corpus, partition, prior, j)));
  return spec;
}

/// Every report of the corpus, discounted by its membership plausibility
/// for `block`.
inline std::vector<MassFunction> discounted_view(
    const EvidenceCorpus& corpus, const MembershipSpecification& spec,
    std::size_t block) {
  if (spec.reports.size() != corpus.size())
    throw ValidationError("specification does not match corpus");
  std::vector<MassFunction> out;
  out.reserve(corpus.size());
  for (std::size_t j = 0; j < corpus.size(); ++j) {
    const auto& pls = spec.reports[j].plausibility;
    if (block >= pls.size()) throw ValidationError("no such block");
    out.push_back(discount(corpus[j].evidence, std::clamp(pls[block], 0.0, 1.0)));
  }
  return out;
}

}  // namespace dsintel
