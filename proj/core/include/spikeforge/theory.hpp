// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "spikeforge/calibration.hpp"
#include "spikeforge/snn.hpp"
#include "spikeforge/tensor.hpp"

namespace spikeforge {

using Rational = boost::multiprecision::cpp_rational;

/// Accepts integers, decimals ("0.37" is 37/100 exactly) and fractions ("5/8").
Rational parse_rational(std::string_view text);
/// The exact binary value of a finite double.
Rational exact_rational(double value);
double to_double(const Rational& r);
std::string to_string(const Rational& r);

/// min(max(x, 0), theta)
Rational clipped_relu(const Rational& x, const Rational& theta);

/// Exact outcome distribution of one TPP neuron that accumulated T*X.
/// Keys are spike sequences written s[1]..s[T] as '0'/'1'.
struct OutcomeDistribution {
  int T = 0;
  Rational theta;
  Rational X;
  std::map<std::string, Rational> support;

  Rational total_probability() const;
  std::map<int, Rational> spike_count_distribution() const;
  /// E[theta/T * total spikes]
  Rational expected_scaled_total() const;
};

/// Depth-first expansion of the Bernoulli tree; branches of probability 0 are
/// dropped. Throws std::invalid_argument unless 1 <= T <= 20 and theta > 0.
OutcomeDistribution enumerate_tpp(const Rational& theta, int T, const Rational& X);

/// Distribution of the running spike count after each step: element t-1 maps
/// count -> probability after step t. Polynomial in T (no tree expansion).
std::vector<std::map<int, Rational>> tpp_count_marginals(const Rational& theta, int T, const Rational& X);

struct CheckReport {
  std::string name;
  bool passed = false;
  double statistic = 0.0;
  double tolerance = 0.0;
  std::uint64_t trials = 0;
  std::string notes;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::pair<std::string, double>> metrics;

  double metric(std::string_view key) const;  // NaN when absent
};

/// For every t: |((T-t+1) theta/T) * mean(sum_{i<=t} s[i]) - ReLU_theta(X)| <= k*SE
/// over Monte Carlo trials of the engine, plus the same quantity computed
/// exactly (when T <= 16) compared with ==. statistic = number of failing
/// (t, method) pairs.
CheckReport check_running_expectation(const Rational& theta, int T, const Rational& X, std::uint64_t trials, std::uint64_t seed,
                        double se_multiple = 4.0);

/// For every positive-probability history of length t-1 whose residue is > 0:
/// ((T-t+1) theta/T) * P(s[t]=1 | history) + (theta/T) * sum s[i<t] == ReLU_theta(X).
/// statistic = number of histories where the identity fails.
CheckReport check_conditional_expectation(const Rational& theta, int T, const Rational& X);

/// Total spikes per trial must lie in {floor(y), floor(y)+1} (just {y} when y
/// is an integer), y = T * clamp(X, 0, theta) / theta. Support values whose
/// exact probability makes them certain to appear in the sample also count as
/// violations when absent.
CheckReport check_spike_count_support(const Rational& theta, int T, const Rational& X, std::uint64_t trials, std::uint64_t seed);

/// Two stacked layers: TPP neurons driven by X feed W. Every trial must keep
/// ||W * (theta/T) sum s - W * ReLU_theta(X)||_inf <= ||W||_inf theta / T, with
/// ||W||_inf the max absolute row sum (relative slack 1e-12 for rounding).
CheckReport check_layer_error_bound(const Tensor& W, double theta, int T, const std::vector<double>& X, std::uint64_t trials,
                        std::uint64_t seed);

/// Total-variation distance between engine sequence frequencies and
/// enumerate_tpp.
CheckReport check_tpp_distribution(const Rational& theta, int T, const Rational& X, std::uint64_t trials,
                                   std::uint64_t seed, double tolerance = 0.01);

/// trains[i] is the spike train of neuron i (all of length T <= 8). Averages
/// sum_i w_i s_i[pi(t)] over all T! permutations pi exactly; statistic = number
/// of steps whose average differs from step 1's.
CheckReport check_permutation_average(const std::vector<std::vector<int>>& trains, const std::vector<Rational>& weights);

/// theta * rate - X + (v[T] - v[0]) / T per neuron, where X is the affine block
/// feeding the layer applied to the mean upstream activity. Traces must come
/// from baseline or shuffle runs of `model`.
CheckReport check_rate_identity(const std::vector<SimTrace>& traces, const ConvertedModel& model,
                                double tolerance = 1e-9);

enum class Suite { thm1, perm, identity, all };
std::string_view to_string(Suite s);
Suite parse_suite(std::string_view text);

struct SuiteOptions {
  std::uint64_t seed = 7;
  /// 0 keeps each check's default trial count.
  std::uint64_t trials = 0;
  unsigned threads = 1;
};

/// Runs a suite. Report order and contents depend only on suite and options
/// other than threads.
std::vector<CheckReport> run_suite(Suite suite, const SuiteOptions& options);

inline constexpr int kCheckReportSchemaVersion = 1;

/// {"schema_version", "suite", "seed", "trials", "passed", "checks": [...]}
std::string reports_to_json(const std::vector<CheckReport>& reports, Suite suite, const SuiteOptions& options);

}  // namespace spikeforge
