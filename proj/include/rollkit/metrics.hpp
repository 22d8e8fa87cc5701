#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rollkit/common.hpp"
#include "rollkit/rollout_data.hpp"

namespace rollkit {

struct PassCurve {
  std::vector<int> budgets;
  std::vector<double> values;  // non-decreasing in K, in [0,1]

  double at(int k) const {
    for (std::size_t i = 0; i < budgets.size(); ++i)
      if (budgets[i] == k) return values[i];
    throw ParameterError("pass curve has no budget K=" + std::to_string(k));
  }
};

struct DiversityProfile {
  std::vector<int> budgets;
  std::vector<double> avg_gain;  // in [-1, 1]
  int n_max = 16;
};

enum class PassEstimator { kUnbiased, kEmpiricalPrefix };

inline PassEstimator parse_estimator(const std::string& name) {
  if (name == "unbiased") return PassEstimator::kUnbiased;
  if (name == "empirical-prefix") return PassEstimator::kEmpiricalPrefix;
  throw ParameterError("unknown estimator '" + name +
                       "' (expected unbiased|empirical-prefix)");
}

namespace detail {

// C(n, k) in unsigned 64-bit; exact for every n <= 62.
inline std::uint64_t binomial_u64(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (int i = 1; i <= k; ++i) {
    c = c * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  }
  return static_cast<std::uint64_t>(c);
}

}  // namespace detail

// Unbiased pass@k over a pool of n_total rollouts with n_correct successes:
// 1 - C(n_total - n_correct, k) / C(n_total, k). Small pools go through exact
// integer binomials; larger ones use the stable product form whose factors
// all lie in [0, 1].
inline double pass_at_k_unbiased(int n_total, int n_correct, int k) {
  if (n_correct < 0 || n_correct > n_total)
    throw ParameterError("pass_at_k_unbiased: need 0 <= n_correct <= n_total");
  if (k < 1 || k > n_total)
    throw ParameterError("pass_at_k_unbiased: need 1 <= k <= n_total");
  const int wrong = n_total - n_correct;
  if (wrong < k) return 1.0;
  if (n_total <= 62) {
    const double bad = static_cast<double>(detail::binomial_u64(wrong, k));
    const double all = static_cast<double>(detail::binomial_u64(n_total, k));
    return 1.0 - bad / all;
  }
  double miss = 1.0;
  for (int i = 0; i < k; ++i)
    miss *= static_cast<double>(wrong - i) / static_cast<double>(n_total - i);
  return 1.0 - miss;
}

// True iff at least one selected rollout is labeled correct. Empty selection
// is a miss; a missing label is an error naming the offending rollout.
inline bool pass_empirical(const ProblemPool& pool,
                           std::span<const int> selected) {
  bool hit = false;
  for (int idx : selected) {
    if (idx < 0 || idx >= pool.size())
      throw ParameterError("pass_empirical: index out of range");
    const auto& r = pool.rollouts[static_cast<std::size_t>(idx)];
    if (!r.correct.has_value())
      throw ValidationError("rollout " + std::to_string(r.rollout_id) +
                            " of problem '" + pool.problem_id +
                            "' has no correctness label");
    hit = hit || *r.correct;
  }
  return hit;
}

// Relative improvement over a baseline; negative means degradation.
inline double lift(double method_pass, double baseline_pass) {
  if (!(baseline_pass > 0.0))
    throw ParameterError("lift undefined: baseline pass is not positive");
  return (method_pass - baseline_pass) / baseline_pass;
}

// Marginal value of the extra rollouts needed to reach n_max from k.
inline double average_gain(const PassCurve& curve, int k, int n_max) {
  if (k >= n_max)
    throw ParameterError("average_gain: need k < n_max");
  return (curve.at(n_max) - curve.at(k)) / static_cast<double>(n_max - k);
}

inline int count_correct(const ProblemPool& pool) {
  int c = 0;
  for (const auto& r : pool.rollouts) {
    if (!r.correct.has_value())
      throw ValidationError("rollout " + std::to_string(r.rollout_id) +
                            " of problem '" + pool.problem_id +
                            "' has no correctness label");
    c += *r.correct ? 1 : 0;
  }
  return c;
}

// pass@k of one labeled pool under the chosen estimator. The empirical-prefix
// estimator scores the first k rollouts in logged order instead of averaging
// over subsets.
inline double pool_pass_at(const ProblemPool& pool, int k,
                           PassEstimator estimator) {
  if (estimator == PassEstimator::kUnbiased)
    return pass_at_k_unbiased(pool.size(), count_correct(pool), k);
  if (k < 1 || k > pool.size())
    throw ParameterError("pool_pass_at: need 1 <= k <= pool size");
  for (int i = 0; i < k; ++i) {
    const auto& r = pool.rollouts[static_cast<std::size_t>(i)];
    if (!r.correct.has_value())
      throw ValidationError("rollout " + std::to_string(r.rollout_id) +
                            " of problem '" + pool.problem_id +
                            "' has no correctness label");
    if (*r.correct) return 1.0;
  }
  return 0.0;
}

// Unweighted mean of per-problem pass values at each budget.
inline PassCurve mean_pass_curve(std::span<const ProblemPool> pools,
                                 std::span<const int> budgets,
                                 PassEstimator estimator) {
  if (pools.empty()) throw ParameterError("mean_pass_curve: no pools");
  PassCurve curve;
  curve.budgets.assign(budgets.begin(), budgets.end());
  for (int k : budgets) {
    double acc = 0.0;
    for (const auto& pool : pools) acc += pool_pass_at(pool, k, estimator);
    curve.values.push_back(acc / static_cast<double>(pools.size()));
  }
  return curve;
}

inline const std::vector<int>& default_profile_budgets() {
  static const std::vector<int> kBudgets = {1, 2, 4, 6, 8};
  return kBudgets;
}

// Average gain per additional rollout from each budget K to n_max, averaged
// over problems.
inline DiversityProfile diversity_profile(std::span<const ProblemPool> pools,
                                          std::span<const int> budgets,
                                          int n_max,
                                          PassEstimator estimator) {
  for (int k : budgets)
    if (k < 1 || k >= n_max)
      throw ParameterError("diversity_profile: budgets must lie in [1, n_max)");
  std::vector<int> all(budgets.begin(), budgets.end());
  all.push_back(n_max);
  const PassCurve curve = mean_pass_curve(pools, all, estimator);
  DiversityProfile profile;
  profile.n_max = n_max;
  profile.budgets.assign(budgets.begin(), budgets.end());
  for (int k : budgets)
    profile.avg_gain.push_back(average_gain(curve, k, n_max));
  return profile;
}

inline DiversityProfile diversity_profile(std::span<const ProblemPool> pools,
                                          int n_max, PassEstimator estimator) {
  return diversity_profile(pools, default_profile_budgets(), n_max, estimator);
}

}  // namespace rollkit
