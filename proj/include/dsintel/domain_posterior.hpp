#pragma once

// Posterior distribution over the number of targets from per-subset
// existence support and a prior over counts.

#include <cstddef>
#include <span>
#include <vector>

#include "dsintel/ds_core.hpp"
#include "dsintel/metacluster.hpp"

namespace dsintel {

/// Masses on "at least k subsets exist", k = 1..n, plus the vacuous rest.
struct CountingBpa {
  std::vector<double> at_least;  // at_least[k-1] is the mass on "at least k"
  double vacuous = 1.0;

  std::size_t subset_count() const noexcept { return at_least.size(); }
};

struct PosteriorDistribution {
  std::vector<double> probabilities;  // index r-1 for r = 1..r_max

  double probability(std::size_t r) const noexcept {
    return (r >= 1 && r <= probabilities.size()) ? probabilities[r - 1] : 0.0;
  }
  /// Smallest count attaining the maximum probability.
  std::size_t mode() const noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probabilities.size(); ++i)
      if (probabilities[i] > probabilities[best]) best = i;
    return best + 1;
  }
  double mean() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i)
      m += static_cast<double>(i + 1) * probabilities[i];
    return m;
  }
};

/// Degree to which a block's evidence supports anything other than the
/// whole frame: 1 - prod_e m_e(Theta).
inline double subset_support(const EvidenceCorpus& corpus,
                             std::span<const std::size_t> block) {
  if (block.empty()) throw ValidationError("subset_support of an empty block");
  double theta = 1.0;
  for (std::size_t i : block) theta *= corpus[i].evidence.theta_mass();
  return 1.0 - theta;
}

/// Combination of the simple supports "subset i exists". The probability
/// that exactly k subsets are supported is the k-th coefficient of
/// prod_i ((1 - s_i) + s_i x), evaluated by the polynomial recurrence.
inline CountingBpa counting_bpa(std::span<const double> supports) {
  std::vector<double> exactly{1.0};
  for (double s : supports) {
    if (!(s >= 0.0 && s <= 1.0))
      throw ValidationError("subset support outside [0,1]");
    std::vector<double> next(exactly.size() + 1, 0.0);
    for (std::size_t k = 0; k < exactly.size(); ++k) {
      next[k] += exactly[k] * (1.0 - s);
      next[k + 1] += exactly[k] * s;
    }
    exactly = std::move(next);
  }
  CountingBpa cb;
  cb.vacuous = exactly[0];
  cb.at_least.assign(exactly.begin() + 1, exactly.end());
  return cb;
}

/// Dempster combination of the counting bpa with a Bayesian prior. The
/// result is Bayesian: P(r) is proportional to prior(r) * Pls_cb({r}).
inline PosteriorDistribution posterior_distribution(const CountingBpa& cb,
                                                    const DomainPrior& prior) {
  const std::size_t r_max = prior.r_max();
  if (cb.subset_count() > r_max)
    throw ValidationError("counting bpa has " +
                          std::to_string(cb.subset_count()) +
                          " subsets but the prior stops at r_max = " +
                          std::to_string(r_max));
  PosteriorDistribution post;
  post.probabilities.resize(r_max);
  if (cb.vacuous == 1.0) {
    // Constant likelihood: the prior comes back unchanged, bit for bit.
    for (std::size_t r = 1; r <= r_max; ++r) post.probabilities[r - 1] = prior.probability(r);
    return post;
  }
  double plausible = cb.vacuous;
  double total = 0.0;
  for (std::size_t r = 1; r <= r_max; ++r) {
    if (r <= cb.subset_count()) plausible += cb.at_least[r - 1];
    post.probabilities[r - 1] = prior.probability(r) * plausible;
    total += post.probabilities[r - 1];
  }
  if (total <= 0.0)
    throw ValidationError(
        "prior is incompatible with every supported subset count");
  for (double& p : post.probabilities) p /= total;
  return post;
}

/// Convenience: supports of every block of a partition, in block order.
inline std::vector<double> partition_supports(const EvidenceCorpus& corpus,
                                              const Partition& partition) {
  std::vector<double> out;
  for (const auto& b : partition.blocks()) out.push_back(subset_support(corpus, b));
  return out;
}

}  // namespace dsintel
