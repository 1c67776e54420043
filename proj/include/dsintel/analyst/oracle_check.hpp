#pragma once

// Brute-force cross-checks used by the `oracle-check` subcommand.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dsintel/analyst/pipeline.hpp"
#include "dsintel/metacluster.hpp"
#include "dsintel/track_graph.hpp"

namespace dsintel::analyst {

inline constexpr std::size_t kPartitionOracleLimit = 12;

struct ExhaustiveMinimum {
  double mcf = 1.0;
  std::vector<std::size_t> labels;  // first minimizer in enumeration order
  std::size_t partitions = 0;
};

/// Every set partition with at most r_max blocks (the rest score 1),
/// enumerated as restricted-growth strings; block conflicts are memoized by
/// member bitmask.
inline ExhaustiveMinimum exhaustive_partition_minimum(const EvidenceCorpus& corpus,
                                                      const DomainPrior& prior) {
  const std::size_t n = corpus.size();
  if (n > kPartitionOracleLimit)
    throw ValidationError("exhaustive partition oracle limited to " +
                          std::to_string(kPartitionOracleLimit) + " reports");
  std::vector<double> conflict(std::size_t{1} << n, -1.0);
  auto block_conflict = [&](std::uint32_t mask) {
    double& c = conflict[mask];
    if (c < 0.0) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1U) members.push_back(i);
      c = cluster_conflict(corpus, members);
    }
    return c;
  };

  ExhaustiveMinimum best;
  std::vector<std::size_t> labels(n, 0);
  std::vector<std::uint32_t> masks;
  const std::size_t max_blocks = std::min(n, prior.r_max());
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      double survive = prior.probability(masks.size());
      for (auto m : masks) survive *= 1.0 - block_conflict(m);
      const double mcf = 1.0 - survive;
      ++best.partitions;
      if (best.labels.empty() || mcf < best.mcf - 1e-12) {
        best.mcf = mcf;
        best.labels = labels;
      }
      return;
    }
    for (std::size_t b = 0; b < masks.size(); ++b) {
      labels[i] = b;
      masks[b] |= std::uint32_t{1} << i;
      rec(i + 1);
      masks[b] &= ~(std::uint32_t{1} << i);
    }
    if (masks.size() < max_blocks) {
      labels[i] = masks.size();
      masks.push_back(std::uint32_t{1} << i);
      rec(i + 1);
      masks.pop_back();
    }
  };
  rec(0);
  return best;
}

struct OracleLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Compares the search against exhaustive enumeration and, per block, the
/// closed-form track plausibilities against the full combination.
inline std::vector<OracleLine> oracle_check(const CorpusFile& input,
                                            const PipelineFlags& flags) {
  std::vector<OracleLine> lines;
  PipelineFlags f = flags;
  f.stages = {true, false, false, true, false};
  const auto result = run_pipeline(input, f);

  if (input.corpus.size() <= kPartitionOracleLimit) {
    const auto ex = exhaustive_partition_minimum(input.corpus, input.prior);
    const double got = result.metaconflict->mcf;
    std::ostringstream d;
    d << "search mcf " << got << ", exhaustive mcf " << ex.mcf << " over "
      << ex.partitions << " partitions";
    lines.push_back({"partition minimum", std::abs(got - ex.mcf) <= 1e-9, d.str()});
  } else {
    lines.push_back({"partition minimum", true, "skipped: corpus larger than oracle limit"});
  }

  for (const auto& ct : result.tracks) {
    const std::string name = "block " + std::to_string(ct.block) + " tracks";
    if (!ct.graph || !ct.oracle) {
      lines.push_back({name, true, "skipped: no graph within oracle limit"});
      continue;
    }
    double worst = 0.0;
    const PathAssessment* argmax = nullptr;
    for (const auto& a : ct.oracle->paths) {
      worst = std::max(worst, std::abs(path_plausibility_unnorm(*ct.graph, a.path) -
                                       a.plausibility_unnorm));
      if (!argmax || a.plausibility_unnorm > argmax->plausibility_unnorm + 1e-12)
        argmax = &a;
    }
    const auto top = best_path_dp(*ct.graph, 1);
    const bool same_value =
        std::abs(top.front().plausibility_unnorm - argmax->plausibility_unnorm) <= 1e-9;
    std::ostringstream d;
    d << "max |closed form - oracle| = " << worst << ", dp top-1 "
      << (same_value ? "matches" : "differs from") << " oracle argmax";
    lines.push_back({name, worst <= 1e-9 && same_value, d.str()});
  }
  return lines;
}

}  // namespace dsintel::analyst
