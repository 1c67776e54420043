#pragma once

// Decision analysis over expected-utility intervals. A point inside each
// interval is selected by rho in [0,1]; preferences are lengths of the
// rho-sets where an alternative comes out on top.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dsintel/ds_core.hpp"

namespace dsintel {

inline constexpr double kRhoTieTolerance = 1e-12;

struct UtilityBpa {
  MassFunction mass;
  std::vector<double> utility;  // one value per frame element

  UtilityBpa(MassFunction m, std::vector<double> u)
      : mass(std::move(m)), utility(std::move(u)) {
    if (utility.size() != mass.frame()->size())
      throw ValidationError("utility vector does not match the frame");
    for (double v : utility)
      if (!std::isfinite(v)) throw ValidationError("utility values must be finite");
  }
};

struct UtilityIntervalChoice {
  std::string id;
  double e_low = 0.0;
  double e_high = 0.0;

  double value(double rho) const noexcept { return e_low + rho * (e_high - e_low); }
};

inline UtilityIntervalChoice expected_interval(const UtilityBpa& u,
                                               std::string id = {}) {
  UtilityIntervalChoice c{std::move(id), 0.0, 0.0};
  for (const auto& [s, w] : u.mass.focals()) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < u.utility.size(); ++i) {
      if (!s.contains(i)) continue;
      lo = std::min(lo, u.utility[i]);
      hi = std::max(hi, u.utility[i]);
    }
    c.e_low += w * lo;
    c.e_high += w * hi;
  }
  if (c.e_high < c.e_low) c.e_high = c.e_low;
  return c;
}

struct RhoSegment {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> winners;  // several only for coincident lines
};

struct RhoSegmentation {
  std::vector<RhoSegment> segments;  // consecutive, covering [0,1]
  std::vector<double> preference;    // per choice, sums to 1

  /// Winner(s) at rho; at a breakpoint the segment to the right counts.
  const std::vector<std::size_t>& winners_at(double rho) const {
    for (const auto& s : segments)
      if (rho < s.hi) return s.winners;
    return segments.back().winners;
  }
};

namespace detail {

// Sorted breakpoints in (0,1) where any two value lines cross, plus 0 and 1.
inline std::vector<double> rho_breakpoints(
    const std::vector<UtilityIntervalChoice>& lines) {
  std::vector<double> pts{0.0, 1.0};
  for (std::size_t a = 0; a < lines.size(); ++a) {
    for (std::size_t b = a + 1; b < lines.size(); ++b) {
      const double slope_a = lines[a].e_high - lines[a].e_low;
      const double slope_b = lines[b].e_high - lines[b].e_low;
      const double ds = slope_a - slope_b;
      if (ds == 0.0) continue;
      const double rho = (lines[b].e_low - lines[a].e_low) / ds;
      if (rho > 0.0 && rho < 1.0) pts.push_back(rho);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

inline std::vector<std::size_t> argmax_at(
    const std::vector<UtilityIntervalChoice>& lines, double rho) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : lines) best = std::max(best, c.value(rho));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (lines[i].value(rho) >= best - kRhoTieTolerance) out.push_back(i);
  return out;
}

}  // namespace detail

/// Upper envelope of the affine value lines over rho in [0,1]. Coincident
/// lines share the length of the segments they win.
inline RhoSegmentation rho_segmentation(
    const std::vector<UtilityIntervalChoice>& choices) {
  if (choices.empty()) throw ValidationError("rho_segmentation needs a choice");
  for (const auto& c : choices)
    if (!(c.e_low <= c.e_high))
      throw ValidationError("choice '" + c.id + "' has e_low > e_high");

  const auto pts = detail::rho_breakpoints(choices);
  RhoSegmentation seg;
  seg.preference.assign(choices.size(), 0.0);
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double lo = pts[k];
    const double hi = pts[k + 1];
    auto winners = detail::argmax_at(choices, 0.5 * (lo + hi));
    if (!seg.segments.empty() && seg.segments.back().winners == winners) {
      seg.segments.back().hi = hi;
    } else {
      seg.segments.push_back({lo, hi, std::move(winners)});
    }
  }
  for (const auto& s : seg.segments) {
    const double share = (s.hi - s.lo) / static_cast<double>(s.winners.size());
    for (std::size_t w : s.winners) seg.preference[w] += share;
  }
  return seg;
}

struct DecisionMaker {
  std::string id;
  std::vector<UtilityIntervalChoice> choices;
};

struct PlayOutcome {
  std::vector<std::size_t> choice;  // per decision maker, index into its choices
  std::vector<double> value;        // rho-value of each final choice
};

namespace detail {

// True when `v` reaches the maximum of the values in `all` (ties count).
inline bool holds_maximum(const std::vector<double>& all, std::size_t who) {
  for (std::size_t k = 0; k < all.size(); ++k)
    if (k != who && all[k] > all[who] + kRhoTieTolerance) return false;
  return true;
}

inline PlayOutcome play_from(const std::vector<DecisionMaker>& makers,
                             double rho, std::size_t who, PlayOutcome prefix) {
  if (who == makers.size()) return prefix;
  std::optional<PlayOutcome> best;
  bool best_wins = false;
  double best_own = 0.0;
  for (std::size_t c = 0; c < makers[who].choices.size(); ++c) {
    PlayOutcome next = prefix;
    next.choice.push_back(c);
    next.value.push_back(makers[who].choices[c].value(rho));
    PlayOutcome outcome = play_from(makers, rho, who + 1, std::move(next));
    const bool wins = holds_maximum(outcome.value, who);
    const double own = outcome.value[who];
    const bool better =
        !best || (wins && !best_wins) ||
        (wins == best_wins && own > best_own + kRhoTieTolerance);
    if (better) {
      best = std::move(outcome);
      best_wins = wins;
      best_own = own;
    }
  }
  return *best;
}

}  // namespace detail

/// Backward induction over decision makers acting in order. Each one wants
/// its final choice to attain the maximum value among everyone's choices;
/// failing that (or as a tie-break) it maximizes its own value; remaining
/// ties go to the earliest-listed alternative.
inline PlayOutcome sequential_play(const std::vector<DecisionMaker>& makers,
                                   double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("rho outside [0,1]");
  for (const auto& m : makers)
    if (m.choices.empty())
      throw ValidationError("decision maker '" + m.id + "' has no choices");
  return detail::play_from(makers, rho, 0, {});
}

/// Length of the rho-set on which each alternative is the one a decision
/// maker picks in the sequential game. Exact: the game outcome is constant
/// between consecutive crossings of any two value lines.
inline std::vector<std::vector<double>> competitive_preferences(
    const std::vector<DecisionMaker>& makers) {
  std::vector<UtilityIntervalChoice> lines;
  for (const auto& m : makers)
    lines.insert(lines.end(), m.choices.begin(), m.choices.end());
  const auto pts = detail::rho_breakpoints(lines);

  std::vector<std::vector<double>> pref;
  for (const auto& m : makers) pref.emplace_back(m.choices.size(), 0.0);
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const auto outcome = sequential_play(makers, 0.5 * (pts[k] + pts[k + 1]));
    for (std::size_t d = 0; d < makers.size(); ++d)
      pref[d][outcome.choice[d]] += pts[k + 1] - pts[k];
  }
  return pref;
}

}  // namespace dsintel
