#pragma once

// Dempster-Shafer substrate: frames of discernment, mass functions,
// Dempster's rule with explicit conflict, belief/plausibility and discounting.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dsintel {

inline constexpr double kMassTolerance = 1e-9;
inline constexpr double kPruneThreshold = 1e-12;

/// Raised for malformed inputs (bad masses, unknown elements, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when two bodies of evidence have no compatible focal pair.
class TotalConflictError : public std::runtime_error {
 public:
  explicit TotalConflictError(double conflict)
      : std::runtime_error("total conflict in combination (conflict = " +
                           std::to_string(conflict) + ")"),
        conflict_(conflict) {}
  double conflict() const noexcept { return conflict_; }

 private:
  double conflict_;
};

/// A subset of a frame, encoded by element index.
struct Subset {
  std::uint64_t bits = 0;

  constexpr bool empty() const noexcept { return bits == 0; }
  constexpr bool contains(std::size_t index) const noexcept {
    return (bits >> index) & 1U;
  }
  constexpr bool is_subset_of(Subset other) const noexcept {
    return (bits & ~other.bits) == 0;
  }
  constexpr bool intersects(Subset other) const noexcept {
    return (bits & other.bits) != 0;
  }
  constexpr int count() const noexcept { return std::popcount(bits); }

  friend constexpr Subset operator&(Subset a, Subset b) noexcept {
    return {a.bits & b.bits};
  }
  friend constexpr Subset operator|(Subset a, Subset b) noexcept {
    return {a.bits | b.bits};
  }
  friend constexpr auto operator<=>(Subset, Subset) = default;
};

class Frame;
using FramePtr = std::shared_ptr<const Frame>;

/// Ordered set of hypothesis labels. The order fixes the subset encoding.
class Frame {
 public:
  static constexpr std::size_t kMaxElements = 64;

  explicit Frame(std::vector<std::string> elements)
      : elements_(std::move(elements)) {
    if (elements_.empty()) throw ValidationError("frame must be nonempty");
    if (elements_.size() > kMaxElements)
      throw ValidationError("frame has " + std::to_string(elements_.size()) +
                            " elements; at most 64 are supported");
    for (std::size_t i = 0; i < elements_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (elements_[i] == elements_[j])
          throw ValidationError("duplicate frame element '" + elements_[i] +
                                "'");
  }

  static FramePtr make(std::vector<std::string> elements) {
    return std::make_shared<const Frame>(std::move(elements));
  }

  std::size_t size() const noexcept { return elements_.size(); }
  const std::vector<std::string>& elements() const noexcept {
    return elements_;
  }
  const std::string& element(std::size_t i) const { return elements_.at(i); }

  std::optional<std::size_t> index_of(std::string_view label) const {
    for (std::size_t i = 0; i < elements_.size(); ++i)
      if (elements_[i] == label) return i;
    return std::nullopt;
  }

  Subset full() const noexcept {
    return {size() == 64 ? ~std::uint64_t{0}
                         : ((std::uint64_t{1} << size()) - 1)};
  }

  Subset singleton(std::size_t index) const {
    if (index >= size()) throw ValidationError("element index out of range");
    return {std::uint64_t{1} << index};
  }

  Subset complement(Subset s) const noexcept { return {full().bits & ~s.bits}; }

  template <typename Range>
  Subset subset_of(const Range& labels) const {
    Subset s;
    for (const auto& label : labels) {
      auto idx = index_of(label);
      if (!idx)
        throw ValidationError("unknown frame element '" + std::string(label) +
                              "'");
      s.bits |= std::uint64_t{1} << *idx;
    }
    return s;
  }

  Subset subset(std::initializer_list<std::string_view> labels) const {
    return subset_of(labels);
  }

  std::vector<std::string> labels(Subset s) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (s.contains(i)) out.push_back(elements_[i]);
    return out;
  }

  std::string format(Subset s) const {
    if (s == full()) return "Theta";
    std::string out = "{";
    bool first = true;
    for (std::size_t i = 0; i < size(); ++i) {
      if (!s.contains(i)) continue;
      if (!first) out += ",";
      out += elements_[i];
      first = false;
    }
    return out + "}";
  }

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.elements_ == b.elements_;
  }

 private:
  std::vector<std::string> elements_;
};

inline bool same_frame(const FramePtr& a, const FramePtr& b) {
  return a == b || (a && b && *a == *b);
}

/// A basic probability assignment. Focal sets are nonempty, masses positive
/// and summing to one; entries are kept sorted by subset encoding.
class MassFunction {
 public:
  using Entry = std::pair<Subset, double>;

  static MassFunction vacuous(FramePtr frame) {
    Subset theta = frame->full();
    return MassFunction(std::move(frame), {{theta, 1.0}});
  }

  const FramePtr& frame() const noexcept { return frame_; }
  std::span<const Entry> focals() const noexcept { return focals_; }
  std::size_t size() const noexcept { return focals_.size(); }

  double mass(Subset s) const noexcept {
    auto it = std::lower_bound(
        focals_.begin(), focals_.end(), s,
        [](const Entry& e, Subset key) { return e.first < key; });
    return (it != focals_.end() && it->first == s) ? it->second : 0.0;
  }

  double theta_mass() const noexcept { return mass(frame_->full()); }

  bool is_vacuous() const noexcept {
    return focals_.size() == 1 && focals_.front().first == frame_->full();
  }

  std::string to_string() const {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < focals_.size(); ++i) {
      if (i) os << ", ";
      os << frame_->format(focals_[i].first) << ": " << focals_[i].second;
    }
    os << "}";
    return os.str();
  }

  friend MassFunction make_mass(FramePtr frame, std::span<const Entry> entries);
  friend MassFunction make_mass(FramePtr frame,
                                std::initializer_list<Entry> entries);

 private:
  friend struct MassAccess;
  MassFunction(FramePtr frame, std::vector<Entry> focals)
      : frame_(std::move(frame)), focals_(std::move(focals)) {}

  FramePtr frame_;
  std::vector<Entry> focals_;
};

namespace detail {

inline std::string fmt_mass(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace detail

// Internal constructor access for operations that already guarantee the
// invariants (sorted, positive, normalized).
struct MassAccess {
  static MassFunction from_accumulator(FramePtr frame,
                                       const std::map<Subset, double>& acc) {
    double total = 0.0;
    for (const auto& [s, m] : acc) total += m;
    std::vector<MassFunction::Entry> focals;
    focals.reserve(acc.size());
    double kept = 0.0;
    for (const auto& [s, m] : acc) {
      if (m / total < kPruneThreshold) continue;
      focals.emplace_back(s, m);
      kept += m;
    }
    for (auto& e : focals) e.second /= kept;
    return MassFunction(std::move(frame), std::move(focals));
  }
};

/// Builds a validated mass function: zero entries are dropped and duplicate
/// subsets merged.
inline MassFunction make_mass(FramePtr frame,
                              std::span<const MassFunction::Entry> entries) {
  if (!frame) throw ValidationError("mass function requires a frame");
  std::map<Subset, double> acc;
  double total = 0.0;
  for (const auto& [s, m] : entries) {
    if (!std::isfinite(m) || m < 0.0)
      throw ValidationError("negative or non-finite mass " +
                            detail::fmt_mass(m));
    if (!s.is_subset_of(frame->full()))
      throw ValidationError("focal set outside the frame");
    if (m == 0.0) continue;
    if (s.empty()) throw ValidationError("empty focal set");
    acc[s] += m;
    total += m;
  }
  if (std::abs(total - 1.0) > kMassTolerance)
    throw ValidationError("masses sum to " + detail::fmt_mass(total));
  std::vector<MassFunction::Entry> focals(acc.begin(), acc.end());
  return MassFunction(std::move(frame), std::move(focals));
}

inline MassFunction make_mass(FramePtr frame,
                              std::initializer_list<MassFunction::Entry> entries) {
  return make_mass(std::move(frame),
                   std::span<const MassFunction::Entry>(entries.begin(),
                                                        entries.size()));
}

/// Simple support function: `s` with mass `weight`, remainder on the frame.
inline MassFunction simple_support(FramePtr frame, Subset s, double weight) {
  Subset theta = frame->full();
  return make_mass(std::move(frame), {{s, weight}, {theta, 1.0 - weight}});
}

struct Combination {
  MassFunction mass;
  double conflict;
};

/// Dempster's rule. Conflict is the product mass on empty intersections;
/// the rest is renormalized. Throws TotalConflictError when nothing survives.
inline Combination combine_dempster(const MassFunction& a,
                                    const MassFunction& b) {
  if (!same_frame(a.frame(), b.frame()))
    throw ValidationError("cannot combine mass functions on different frames");
  std::map<Subset, double> acc;
  double conflict = 0.0;
  double agreement = 0.0;
  for (const auto& [sa, ma] : a.focals()) {
    for (const auto& [sb, mb] : b.focals()) {
      const double w = ma * mb;
      const Subset meet = sa & sb;
      if (meet.empty()) {
        conflict += w;
      } else {
        acc[meet] += w;
        agreement += w;
      }
    }
  }
  if (agreement <= 0.0) throw TotalConflictError(std::min(conflict, 1.0));
  return {MassAccess::from_accumulator(a.frame(), acc),
          std::clamp(conflict, 0.0, 1.0)};
}

/// Left fold of Dempster's rule. The accumulated conflict 1 - prod(1 - c_k)
/// equals the conflict of one simultaneous combination.
inline Combination combine_all(std::span<const MassFunction> masses) {
  if (masses.empty()) throw ValidationError("combine_all needs at least one input");
  MassFunction acc = masses.front();
  double survive = 1.0;
  for (std::size_t i = 1; i < masses.size(); ++i) {
    try {
      auto step = combine_dempster(acc, masses[i]);
      survive *= 1.0 - step.conflict;
      acc = std::move(step.mass);
    } catch (const TotalConflictError&) {
      throw TotalConflictError(1.0);
    }
  }
  return {std::move(acc), 1.0 - survive};
}

struct BeliefInterval {
  double belief;
  double plausibility;
};

inline BeliefInterval query_bel_pls(const MassFunction& m, Subset a) {
  if (!a.is_subset_of(m.frame()->full()))
    throw ValidationError("query set outside the frame");
  double bel = 0.0;
  double pls = 0.0;
  for (const auto& [s, w] : m.focals()) {
    if (s.is_subset_of(a)) bel += w;
    if (s.intersects(a)) pls += w;
  }
  return {std::min(bel, 1.0), std::min(pls, 1.0)};
}

/// Shafer discounting with reliability `alpha`: non-frame masses scale by
/// alpha, the deficit moves to the whole frame.
inline MassFunction discount(const MassFunction& m, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ValidationError("discount factor " + detail::fmt_mass(alpha) +
                          " outside [0,1]");
  if (alpha == 1.0) return m;
  const Subset theta = m.frame()->full();
  std::vector<MassFunction::Entry> out;
  double moved = 0.0;
  for (const auto& [s, w] : m.focals()) {
    if (s == theta) continue;
    if (alpha > 0.0) out.emplace_back(s, w * alpha);
    moved += w;
  }
  const double theta_mass = m.theta_mass() + moved * (1.0 - alpha);
  out.emplace_back(theta, theta_mass);
  return make_mass(m.frame(), out);
}

}  // namespace dsintel
