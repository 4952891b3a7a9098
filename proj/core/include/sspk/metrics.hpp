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

#ifndef SSPK_METRICS_HPP_
#define SSPK_METRICS_HPP_

#include <vector>

namespace sspk {

// Equal error rate in percent. The ROC is swept over all inter-score
// thresholds, its convex hull is taken, and the hull's crossing with the
// miss-equals-false-alarm diagonal is interpolated linearly. Ties between a
// score and the threshold count as errors on both sides, which the midpoint
// threshold sweep makes moot. Always within [0, 50].
double eer_percent(const std::vector<double>& target_scores,
                   const std::vector<double>& nontarget_scores);

// Minimum normalized detection cost: min over thresholds of
// (c_miss * p_target * p_miss + c_fa * (1 - p_target) * p_fa) divided by
// min(c_miss * p_target, c_fa * (1 - p_target)). Always within [0, 1].
double min_dcf(const std::vector<double>& target_scores,
               const std::vector<double>& nontarget_scores,
               double p_target = 0.01, double c_miss = 1.0, double c_fa = 1.0);

}  // namespace sspk

#endif  // SSPK_METRICS_HPP_
