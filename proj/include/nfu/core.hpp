#pragma once

// Domain types shared by every part of the toolkit: exact currency, response
// homogeneity group (RHG) summaries, unit-level microdata and the estimated
// response propensities derived from group counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace nfu {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Malformed or inconsistent input. Maps to CLI exit status 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure (singular systems, overflow). Maps to CLI exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A group too thin for variance work (m_h < 2 or a zero denominator).
class DegenerateGroupError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// ---------------------------------------------------------------------------
// Money
// ---------------------------------------------------------------------------

/// Non-negative currency amount held as an exact count of cents.
class Money {
 public:
  constexpr Money() = default;

  static Money from_cents(std::int64_t cents) {
    if (cents < 0) throw InputError("money amount must be non-negative");
    Money out;
    out.cents_ = cents;
    return out;
  }

  static Money from_dollars(std::int64_t dollars) {
    std::int64_t cents = 0;
    if (dollars < 0 || __builtin_mul_overflow(dollars, std::int64_t{100}, &cents)) {
      throw InputError("dollar amount out of range");
    }
    return from_cents(cents);
  }

  /// Accepts "$19,640", "19640", "19640.50", "$19.6k" and similar.
  static Money parse(std::string_view text);

  [[nodiscard]] std::string format() const;

  [[nodiscard]] constexpr std::int64_t cents() const { return cents_; }
  [[nodiscard]] double dollars() const { return static_cast<double>(cents_) / 100.0; }

  friend Money operator+(Money a, Money b) {
    std::int64_t sum = 0;
    if (__builtin_add_overflow(a.cents_, b.cents_, &sum)) throw NumericalError("money overflow");
    return from_cents(sum);
  }

  Money& operator+=(Money other) { return *this = *this + other; }

  /// Scales by a non-negative count (visits times nonrespondents).
  [[nodiscard]] Money times(std::int64_t count) const {
    if (count < 0) throw InputError("money multiplier must be non-negative");
    std::int64_t out = 0;
    if (__builtin_mul_overflow(cents_, count, &out)) throw NumericalError("money overflow");
    return from_cents(out);
  }

  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  std::int64_t cents_ = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace detail

inline Money Money::parse(std::string_view text) {
  const std::string original(text);
  auto fail = [&](const char* why) -> Money {
    throw InputError("cannot parse money value '" + original + "': " + why);
  };
  std::string_view s = detail::trim(text);
  if (!s.empty() && s.front() == '$') s.remove_prefix(1);
  int scale_digits = 2;  // one cent is 1e-2 dollars or 1e-5 thousands
  if (!s.empty() && (s.back() == 'k' || s.back() == 'K')) {
    s.remove_suffix(1);
    scale_digits = 5;
  }
  if (s.empty()) return fail("empty");

  std::int64_t whole = 0;
  std::size_t pos = 0;
  int digits = 0;
  for (; pos < s.size() && s[pos] != '.'; ++pos) {
    const char c = s[pos];
    if (c == ',') continue;
    if (c < '0' || c > '9') return fail("unexpected character");
    if (__builtin_mul_overflow(whole, std::int64_t{10}, &whole) ||
        __builtin_add_overflow(whole, std::int64_t{c - '0'}, &whole)) {
      return fail("out of range");
    }
    ++digits;
  }
  std::int64_t frac = 0;
  int frac_digits = 0;
  if (pos < s.size()) {
    for (++pos; pos < s.size(); ++pos) {
      const char c = s[pos];
      if (c < '0' || c > '9') return fail("unexpected character in fraction");
      if (frac_digits == scale_digits) {
        if (c != '0') return fail("finer than one cent");
        continue;
      }
      frac = frac * 10 + (c - '0');
      ++frac_digits;
    }
  }
  if (digits == 0 && frac_digits == 0) return fail("no digits");
  for (; frac_digits < scale_digits; ++frac_digits) frac *= 10;

  std::int64_t unit = 1;
  for (int i = 0; i < scale_digits; ++i) unit *= 10;
  std::int64_t cents = 0;
  if (__builtin_mul_overflow(whole, unit, &cents) || __builtin_add_overflow(cents, frac, &cents)) {
    return fail("out of range");
  }
  return from_cents(cents);
}

inline std::string Money::format() const {
  const std::string digits = std::to_string(cents_ / 100);
  std::string grouped;
  const std::size_t lead = digits.size() % 3;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != 0 && (i % 3) == lead) grouped.push_back(',');
    grouped.push_back(digits[i]);
  }
  std::string out = "$" + grouped;
  if (const auto c = cents_ % 100; c != 0) {
    out.push_back('.');
    out.push_back(static_cast<char>('0' + c / 10));
    out.push_back(static_cast<char>('0' + c % 10));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Response homogeneity groups
// ---------------------------------------------------------------------------

/// Half-open propensity interval (lo, hi].
struct ScoreRange {
  double lo = 0.0;
  double hi = 1.0;

  [[nodiscard]] bool contains(double score) const { return score > lo && score <= hi; }
  [[nodiscard]] bool overlaps(const ScoreRange& o) const { return lo < o.hi && o.lo < hi; }
};

struct RhgSummary {
  std::string id;
  std::optional<ScoreRange> range;  // absent when groups come straight from microdata
  std::int64_t n = 0;               // sampled units
  std::int64_t m = 0;               // respondents
  Money unit_cost;                  // per visit per nonrespondent
  double s2 = 0.0;                  // respondent residual variance, study units squared

  [[nodiscard]] std::int64_t nonrespondents() const { return n - m; }

  void validate() const {
    if (id.empty()) throw InputError("RHG id must not be empty");
    if (n < 0 || m < 0 || m > n) {
      throw InputError("RHG '" + id + "': counts must satisfy 0 <= m <= n");
    }
    if (!(s2 >= 0.0) || !std::isfinite(s2)) throw InputError("RHG '" + id + "': s2 must be finite and >= 0");
    if (range) {
      if (!(range->lo >= 0.0 && range->lo < range->hi && range->hi <= 1.0)) {
        throw InputError("RHG '" + id + "': score range must satisfy 0 <= lo < hi <= 1");
      }
    }
  }
};

/// Ordered, validated collection of RHG summaries.
class RhgTable {
 public:
  RhgTable() = default;

  explicit RhgTable(std::vector<RhgSummary> groups) : groups_(std::move(groups)) {
    for (const auto& g : groups_) g.validate();
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      for (std::size_t j = i + 1; j < groups_.size(); ++j) {
        const auto& a = groups_[i];
        const auto& b = groups_[j];
        if (a.id == b.id) throw InputError("duplicate RHG id '" + a.id + "'");
        if (a.range && b.range && a.range->overlaps(*b.range)) {
          throw InputError("RHG score ranges overlap: '" + a.id + "' and '" + b.id + "'");
        }
      }
    }
    for (std::size_t i = 0; i < groups_.size(); ++i) index_.emplace(groups_[i].id, i);
  }

  [[nodiscard]] std::size_t size() const { return groups_.size(); }
  [[nodiscard]] bool empty() const { return groups_.empty(); }
  [[nodiscard]] const RhgSummary& operator[](std::size_t i) const { return groups_[i]; }
  [[nodiscard]] auto begin() const { return groups_.begin(); }
  [[nodiscard]] auto end() const { return groups_.end(); }
  [[nodiscard]] const std::vector<RhgSummary>& groups() const { return groups_; }

  [[nodiscard]] std::optional<std::size_t> find(std::string_view id) const {
    if (auto it = index_.find(std::string(id)); it != index_.end()) return it->second;
    return std::nullopt;
  }

  [[nodiscard]] std::size_t index_of(std::string_view id) const {
    if (auto i = find(id)) return *i;
    throw InputError("unknown RHG id '" + std::string(id) + "'");
  }

  [[nodiscard]] const RhgSummary& at(std::string_view id) const { return groups_[index_of(id)]; }

  [[nodiscard]] std::int64_t total_n() const {
    std::int64_t t = 0;
    for (const auto& g : groups_) t += g.n;
    return t;
  }

  [[nodiscard]] std::int64_t total_m() const {
    std::int64_t t = 0;
    for (const auto& g : groups_) t += g.m;
    return t;
  }

 private:
  std::vector<RhgSummary> groups_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Propensities
// ---------------------------------------------------------------------------

/// Group response rate m/n at full precision.
inline double rho_hat(std::int64_t m, std::int64_t n) {
  if (n <= 0) throw InputError("response rate needs n >= 1");
  if (m < 0 || m > n) throw InputError("response rate needs 0 <= m <= n");
  return static_cast<double>(m) / static_cast<double>(n);
}

inline double rho_hat(const RhgSummary& g) {
  if (g.n <= 0) throw InputError("RHG '" + g.id + "': response rate needs n >= 1");
  return rho_hat(g.m, g.n);
}

/// Estimated joint response probability for a pair of units.
///   same unit               -> m/n
///   same group, distinct    -> m(m-1) / (n(n-1))
///   different groups        -> (m/n)(m'/n')
inline double rho_hat_pair(const RhgSummary& gi, const RhgSummary& gj, bool same_unit) {
  if (gi.id == gj.id) {
    if (same_unit) return rho_hat(gi);
    if (gi.m < 2 || gi.n < 2) {
      throw DegenerateGroupError("RHG '" + gi.id + "' has fewer than 2 respondents; merge it with an adjacent group");
    }
    return (static_cast<double>(gi.m) / static_cast<double>(gi.n)) *
           (static_cast<double>(gi.m - 1) / static_cast<double>(gi.n - 1));
  }
  if (same_unit) throw InputError("a unit cannot belong to two RHGs");
  return rho_hat(gi) * rho_hat(gj);
}

inline double rho_hat_pair(std::string_view i_group, std::string_view j_group, const RhgTable& table,
                           bool same_unit) {
  return rho_hat_pair(table.at(i_group), table.at(j_group), same_unit);
}

/// Overall response rate after adding expected (or realised) converts per group.
inline double response_rate(const RhgTable& table, const std::vector<double>& extra_converts = {}) {
  if (!extra_converts.empty() && extra_converts.size() != table.size()) {
    throw InputError("converts vector must have one entry per RHG");
  }
  const auto n = table.total_n();
  if (n <= 0) throw InputError("response rate needs at least one sampled unit");
  double respondents = static_cast<double>(table.total_m());
  for (std::size_t h = 0; h < extra_converts.size(); ++h) {
    const double c = extra_converts[h];
    if (!(c >= 0.0) || c > static_cast<double>(table[h].nonrespondents())) {
      throw InputError("converts for RHG '" + table[h].id + "' exceed its nonrespondents");
    }
    respondents += c;
  }
  return respondents / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Unit-level microdata
// ---------------------------------------------------------------------------

struct UnitRecord {
  std::string unit_id;
  std::string design_stratum;
  std::string rhg_id;
  double pi = 1.0;
  bool delta = false;
  std::optional<double> y;  // always present in simulated truth
  std::vector<double> x;
  std::vector<std::string> cat;

  [[nodiscard]] double weight() const { return 1.0 / pi; }
};

/// Stratified simple random sampling without replacement.
struct StratifiedSrs {
  struct Stratum {
    std::int64_t N = 0;
    std::int64_t n = 0;
  };
  std::map<std::string, Stratum> strata;
};

/// Arbitrary design with an explicit table of second-order inclusion probabilities.
struct ExplicitPairs {
  // key is (min id, max id); diagonal entries are implied by pi
  std::map<std::pair<std::string, std::string>, double> pi_ij;

  void set(const std::string& a, const std::string& b, double value) {
    pi_ij[a < b ? std::pair{a, b} : std::pair{b, a}] = value;
  }

  [[nodiscard]] std::optional<double> get(const std::string& a, const std::string& b) const {
    auto it = pi_ij.find(a < b ? std::pair{a, b} : std::pair{b, a});
    if (it == pi_ij.end()) return std::nullopt;
    return it->second;
  }
};

using SampleDesign = std::variant<StratifiedSrs, ExplicitPairs>;

struct SampleDataset {
  std::vector<UnitRecord> units;
  std::vector<double> tx;  // population totals of the auxiliary vector
  SampleDesign design;

  [[nodiscard]] std::size_t aux_dim() const { return tx.size(); }

  void validate() const {
    std::unordered_map<std::string, int> seen;
    for (const auto& u : units) {
      if (!(u.pi > 0.0 && u.pi <= 1.0)) throw InputError("unit '" + u.unit_id + "': pi must lie in (0, 1]");
      if (u.delta && !u.y) throw InputError("unit '" + u.unit_id + "': respondent without a y value");
      if (u.x.size() != tx.size()) {
        throw InputError("unit '" + u.unit_id + "': auxiliary vector has dimension " + std::to_string(u.x.size()) +
                         ", expected " + std::to_string(tx.size()));
      }
      if (++seen[u.unit_id] > 1) throw InputError("duplicate unit id '" + u.unit_id + "'");
    }
    if (const auto* srs = std::get_if<StratifiedSrs>(&design)) {
      for (const auto& u : units) {
        auto it = srs->strata.find(u.design_stratum);
        if (it == srs->strata.end()) throw InputError("unit '" + u.unit_id + "': unknown design stratum '" + u.design_stratum + "'");
        const auto& st = it->second;
        if (st.n < 1 || st.n > st.N) throw InputError("stratum '" + u.design_stratum + "': need 1 <= n <= N");
        const double expected = static_cast<double>(st.n) / static_cast<double>(st.N);
        if (std::abs(u.pi - expected) > 1e-9 * expected) {
          throw InputError("unit '" + u.unit_id + "': pi disagrees with stratum sampling fraction n/N");
        }
      }
    }
  }
};

/// Rebuilds the group counts of `table` from microdata. Unit costs, ranges and
/// s2 are carried over; groups absent from the data get n = m = 0.
inline RhgTable tabulate(const RhgTable& table, const SampleDataset& data) {
  std::vector<RhgSummary> groups = table.groups();
  for (auto& g : groups) g.n = g.m = 0;
  for (const auto& u : data.units) {
    auto& g = groups[table.index_of(u.rhg_id)];
    ++g.n;
    if (u.delta) ++g.m;
  }
  return RhgTable(std::move(groups));
}

/// Builds a range-less table with one group per distinct rhg_id, sorted by id.
inline RhgTable tabulate(const SampleDataset& data) {
  std::map<std::string, RhgSummary> by_id;
  for (const auto& u : data.units) {
    auto& g = by_id[u.rhg_id];
    g.id = u.rhg_id;
    ++g.n;
    if (u.delta) ++g.m;
  }
  std::vector<RhgSummary> groups;
  groups.reserve(by_id.size());
  for (auto& [id, g] : by_id) groups.push_back(std::move(g));
  return RhgTable(std::move(groups));
}

}  // namespace nfu
