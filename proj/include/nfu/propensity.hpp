#pragma once

// Propensity-score utilities: binning scores into RHGs, and imputing scores
// for units without paradata from their nearest categorical neighbours.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nfu/core.hpp"

namespace nfu {

struct ScoredUnit {
  std::string unit_id;
  std::optional<double> score;  // absent for units to be imputed
  std::vector<std::string> cat;
};

/// Number of positions at which two categorical vectors differ.
inline std::size_t mismatch_count(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw InputError("Gower distance needs categorical vectors of equal, non-zero dimension (got " +
                     std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i] ? 1 : 0;
  return d;
}

/// Gower dissimilarity for all-categorical data: the fraction of mismatches.
inline double gower_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return static_cast<double>(mismatch_count(a, b)) / static_cast<double>(a.size());
}

namespace detail {

inline void check_donors(const std::vector<ScoredUnit>& donors, std::size_t k) {
  if (donors.empty()) throw InputError("kNN imputation needs at least one donor");
  if (k == 0) throw InputError("kNN imputation needs k >= 1");
  if (k > donors.size()) {
    throw InputError("k = " + std::to_string(k) + " exceeds the " + std::to_string(donors.size()) + " available donors");
  }
  for (const auto& d : donors) {
    if (!d.score) throw InputError("donor '" + d.unit_id + "' has no score");
    if (!(*d.score > 0.0 && *d.score <= 1.0)) throw InputError("donor '" + d.unit_id + "': score must lie in (0, 1]");
  }
}

/// Donor indices sorted by id, so that distance ties resolve by ascending id.
inline std::vector<std::size_t> id_order(const std::vector<ScoredUnit>& donors) {
  std::vector<std::size_t> order(donors.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return donors[a].unit_id < donors[b].unit_id; });
  return order;
}

inline double knn_mean(const std::vector<std::string>& cat, const std::vector<ScoredUnit>& donors,
                       const std::vector<std::size_t>& by_id, std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> dist;  // (mismatches, rank in id order)
  dist.reserve(by_id.size());
  for (std::size_t r = 0; r < by_id.size(); ++r) dist.emplace_back(mismatch_count(cat, donors[by_id[r]].cat), r);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  // sum in id order so that the result does not depend on the input order
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  for (std::size_t i = 0; i < k; ++i) chosen.push_back(dist[i].second);
  std::sort(chosen.begin(), chosen.end());
  double sum = 0.0;
  for (const auto r : chosen) sum += *donors[by_id[r]].score;
  return sum / static_cast<double>(k);
}

}  // namespace detail

/// Unweighted mean score of the k nearest donors for each new unit.
inline std::vector<double> knn_impute(const std::vector<ScoredUnit>& targets, const std::vector<ScoredUnit>& donors,
                                      std::size_t k) {
  detail::check_donors(donors, k);
  const auto by_id = detail::id_order(donors);
  std::vector<double> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(detail::knn_mean(t.cat, donors, by_id, k));
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validated choice of k
// ---------------------------------------------------------------------------

struct CvEntry {
  std::size_t k = 0;
  double rmse = 0.0;      // pooled over all held-out predictions
  double se = 0.0;        // standard error of the per-fold RMSEs
  std::vector<double> fold_rmse;
};

struct CvReport {
  std::vector<CvEntry> entries;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::size_t chosen_k = 0;
  std::string rule;
};

/// Stable 64-bit hash of a unit id mixed with a seed (FNV-1a, then splitmix64).
inline std::uint64_t stable_hash(std::string_view id, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Fold of every donor: donors are ranked by (hash(id, seed), id) and dealt
/// round-robin, which keeps folds balanced and independent of input order.
inline std::vector<std::size_t> assign_folds(const std::vector<ScoredUnit>& donors, std::size_t folds,
                                             std::uint64_t seed) {
  std::vector<std::size_t> order(donors.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> key(donors.size());
  for (std::size_t i = 0; i < donors.size(); ++i) key[i] = stable_hash(donors[i].unit_id, seed);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return key[a] != key[b] ? key[a] < key[b] : donors[a].unit_id < donors[b].unit_id;
  });
  std::vector<std::size_t> fold(donors.size());
  for (std::size_t r = 0; r < order.size(); ++r) fold[order[r]] = r % folds;
  return fold;
}

/// Smallest candidate whose RMSE is within `band` standard errors of the
/// minimum (the one-standard-error rule when band = 1).
inline std::size_t select_k(const CvReport& report, double band = 1.0) {
  if (report.entries.empty()) throw InputError("cannot select k from an empty CV report");
  const auto best = std::min_element(report.entries.begin(), report.entries.end(), [](const auto& a, const auto& b) {
    return a.rmse != b.rmse ? a.rmse < b.rmse : a.k < b.k;
  });
  const double threshold = best->rmse + band * best->se;
  std::size_t chosen = best->k;
  for (const auto& e : report.entries) {
    if (e.rmse <= threshold) chosen = std::min(chosen, e.k);
  }
  return chosen;
}

inline CvReport kfold_cv_rmse(const std::vector<ScoredUnit>& donors, const std::vector<std::size_t>& k_candidates,
                              std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw InputError("cross validation needs at least 2 folds");
  if (k_candidates.empty()) throw InputError("cross validation needs at least one candidate k");
  if (donors.size() < folds) throw InputError("fewer donors than folds");
  detail::check_donors(donors, 1);
  const auto fold = assign_folds(donors, folds, seed);

  std::vector<std::vector<ScoredUnit>> train(folds);
  std::vector<std::vector<std::size_t>> held(folds);
  for (std::size_t i = 0; i < donors.size(); ++i) {
    held[fold[i]].push_back(i);
    for (std::size_t f = 0; f < folds; ++f) {
      if (f != fold[i]) train[f].push_back(donors[i]);
    }
  }
  // score held-out donors in id order so the sums ignore input order
  for (auto& h : held) {
    std::sort(h.begin(), h.end(), [&](std::size_t a, std::size_t b) { return donors[a].unit_id < donors[b].unit_id; });
  }
  std::size_t smallest_train = donors.size();
  for (const auto& t : train) smallest_train = std::min(smallest_train, t.size());
  for (const auto k : k_candidates) {
    if (k == 0 || k > smallest_train) {
      throw InputError("candidate k = " + std::to_string(k) + " exceeds the smallest training fold (" +
                       std::to_string(smallest_train) + " donors)");
    }
  }

  CvReport report;
  report.folds = folds;
  report.seed = seed;
  std::vector<std::vector<double>> sq_err(k_candidates.size(), std::vector<double>(folds, 0.0));
  for (std::size_t f = 0; f < folds; ++f) {
    const auto by_id = detail::id_order(train[f]);
    for (const auto i : held[f]) {
      for (std::size_t c = 0; c < k_candidates.size(); ++c) {
        const double pred = detail::knn_mean(donors[i].cat, train[f], by_id, k_candidates[c]);
        const double e = pred - *donors[i].score;
        sq_err[c][f] += e * e;
      }
    }
  }
  for (std::size_t c = 0; c < k_candidates.size(); ++c) {
    CvEntry entry;
    entry.k = k_candidates[c];
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      total += sq_err[c][f];
      entry.fold_rmse.push_back(std::sqrt(sq_err[c][f] / static_cast<double>(held[f].size())));
    }
    entry.rmse = std::sqrt(total / static_cast<double>(donors.size()));
    const double mean = std::accumulate(entry.fold_rmse.begin(), entry.fold_rmse.end(), 0.0) / static_cast<double>(folds);
    double ss = 0.0;
    for (const double r : entry.fold_rmse) ss += (r - mean) * (r - mean);
    entry.se = std::sqrt(ss / static_cast<double>(folds - 1) / static_cast<double>(folds));
    report.entries.push_back(std::move(entry));
  }
  report.chosen_k = select_k(report);
  report.rule = "smallest k with RMSE <= min RMSE + 1 SE";
  return report;
}

// ---------------------------------------------------------------------------
// Binning into RHGs
// ---------------------------------------------------------------------------

inline std::vector<double> default_edges() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}; }

struct Binning {
  RhgTable table;                       // counts only; unit cost and s2 left at zero
  std::vector<std::size_t> assignment;  // group index per input unit
};

/// Assigns each score to the half-open bin (lo, hi] containing it. Group ids
/// are "1".."H". `responded` is optional and fills m_h when given.
inline Binning bin_rhg(const std::vector<double>& scores, const std::vector<double>& edges = default_edges(),
                       const std::vector<bool>& responded = {}) {
  if (edges.size() < 2) throw InputError("binning needs at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw InputError("bin edges must be strictly increasing");
  }
  if (edges.front() < 0.0 || edges.back() > 1.0) throw InputError("bin edges must lie within [0, 1]");
  if (!responded.empty() && responded.size() != scores.size()) {
    throw InputError("response indicators must match the number of scores");
  }
  const std::size_t H = edges.size() - 1;
  std::vector<RhgSummary> groups(H);
  for (std::size_t h = 0; h < H; ++h) {
    groups[h].id = std::to_string(h + 1);
    groups[h].range = ScoreRange{edges[h], edges[h + 1]};
  }
  Binning out;
  out.assignment.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    // first edge >= s closes the bin (lo, hi]
    const auto it = std::lower_bound(edges.begin() + 1, edges.end(), s);
    if (!(s > edges.front()) || it == edges.end()) {
      throw InputError("score " + std::to_string(s) + " lies outside every bin");
    }
    const auto h = static_cast<std::size_t>(it - edges.begin() - 1);
    out.assignment.push_back(h);
    ++groups[h].n;
    if (!responded.empty() && responded[i]) ++groups[h].m;
  }
  out.table = RhgTable(std::move(groups));
  return out;
}

}  // namespace nfu
