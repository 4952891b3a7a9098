// Copyright 2026 The sspk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sspk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "sspk/error.hpp"

namespace sspk {
namespace {

struct RocPoint {
  double pfa = 0.0;
  double pmiss = 0.0;
};

// Midpoints between consecutive distinct scores plus one threshold below and
// one above everything. No score ever equals a threshold, so the tie
// convention (ties count as errors) never actually fires.
std::vector<double> sweep_thresholds(const std::vector<double>& tar_sorted,
                                     const std::vector<double>& non_sorted) {
  std::vector<double> all;
  all.reserve(tar_sorted.size() + non_sorted.size());
  all.insert(all.end(), tar_sorted.begin(), tar_sorted.end());
  all.insert(all.end(), non_sorted.begin(), non_sorted.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> thresholds;
  thresholds.reserve(all.size() + 1);
  thresholds.push_back(all.front() - 1.0);
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    thresholds.push_back(0.5 * (all[i] + all[i + 1]));
  }
  thresholds.push_back(all.back() + 1.0);
  return thresholds;
}

// p_miss = #(target <= threshold) / n_target,
// p_fa = #(nontarget >= threshold) / n_nontarget.
RocPoint roc_at(const std::vector<double>& tar_sorted,
                const std::vector<double>& non_sorted, double threshold) {
  const auto miss = static_cast<double>(
      std::upper_bound(tar_sorted.begin(), tar_sorted.end(), threshold) -
      tar_sorted.begin());
  const auto accept = static_cast<double>(
      non_sorted.end() -
      std::lower_bound(non_sorted.begin(), non_sorted.end(), threshold));
  return RocPoint{accept / static_cast<double>(non_sorted.size()),
                  miss / static_cast<double>(tar_sorted.size())};
}

double cross(const RocPoint& o, const RocPoint& a, const RocPoint& b) {
  return (a.pfa - o.pfa) * (b.pmiss - o.pmiss) -
         (a.pmiss - o.pmiss) * (b.pfa - o.pfa);
}

// Lower convex hull over p_fa, ascending. Input must be sorted by p_fa with
// ties broken by p_miss.
std::vector<RocPoint> lower_hull(std::vector<RocPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const RocPoint& a, const RocPoint& b) {
    if (a.pfa != b.pfa) return a.pfa < b.pfa;
    return a.pmiss < b.pmiss;
  });
  std::vector<RocPoint> hull;
  for (const RocPoint& p : pts) {
    while (hull.size() >= 2 &&
           cross(hull[hull.size() - 2], hull[hull.size() - 1], p) <= 0.0) {
      hull.pop_back();
    }
    hull.push_back(p);
  }
  return hull;
}

void check_nonempty(const std::vector<double>& tar,
                    const std::vector<double>& non) {
  if (tar.empty()) throw DataError("no target trials to score");
  if (non.empty()) throw DataError("no nontarget trials to score");
}

}  // namespace

double eer_percent(const std::vector<double>& target_scores,
                   const std::vector<double>& nontarget_scores) {
  check_nonempty(target_scores, nontarget_scores);
  std::vector<double> tar = target_scores;
  std::vector<double> non = nontarget_scores;
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());

  std::vector<RocPoint> pts;
  for (double th : sweep_thresholds(tar, non)) {
    pts.push_back(roc_at(tar, non, th));
  }
  const std::vector<RocPoint> hull = lower_hull(std::move(pts));

  // The hull runs from (1, 0) back at the low-threshold end to (0, 1) at the
  // high end once sorted by p_fa, i.e. from (0, 1) to (1, 0). The difference
  // p_miss - p_fa is strictly decreasing along it, so exactly one segment
  // crosses the diagonal.
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const double d = hull[i].pmiss - hull[i].pfa;
    if (d == 0.0) return 100.0 * hull[i].pfa;
    if (d < 0.0) {
      // Crossed between i-1 and i; i == 0 cannot happen since p_fa 0 only
      // pairs with p_miss 1 after hulling.
      const RocPoint& a = hull[i - 1];
      const RocPoint& b = hull[i];
      const double da = a.pmiss - a.pfa;
      const double t = da / (da - d);
      return 100.0 * (a.pfa + t * (b.pfa - a.pfa));
    }
  }
  throw NumericError("equal error rate: hull never crossed the diagonal");
}

double min_dcf(const std::vector<double>& target_scores,
               const std::vector<double>& nontarget_scores, double p_target,
               double c_miss, double c_fa) {
  check_nonempty(target_scores, nontarget_scores);
  if (!(p_target > 0.0) || !(p_target < 1.0)) {
    throw ConfigError("target prior must lie strictly between 0 and 1");
  }
  if (!(c_miss > 0.0) || !(c_fa > 0.0)) {
    throw ConfigError("detection costs must be positive");
  }
  std::vector<double> tar = target_scores;
  std::vector<double> non = nontarget_scores;
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());

  const double w_miss = c_miss * p_target;
  const double w_fa = c_fa * (1.0 - p_target);
  double best = std::numeric_limits<double>::infinity();
  for (double th : sweep_thresholds(tar, non)) {
    const RocPoint p = roc_at(tar, non, th);
    best = std::min(best, w_miss * p.pmiss + w_fa * p.pfa);
  }
  return best / std::min(w_miss, w_fa);
}

}  // namespace sspk
