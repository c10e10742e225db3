// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "spikeforge/error.hpp"
#include "spikeforge/parallel.hpp"
#include "spikeforge/trainer.hpp"

namespace spikeforge {

namespace {

using boost::multiprecision::cpp_int;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

cpp_int pow10(unsigned n) {
  cpp_int r = 1;
  for (unsigned i = 0; i < n; ++i) r *= 10;
  return r;
}

Rational parse_decimal(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty number");
  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    const std::string exp_text(s.substr(e + 1));
    std::size_t used = 0;
    try {
      exponent = std::stol(exp_text, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (exp_text.empty() || used != exp_text.size()) throw std::invalid_argument("bad exponent in '" + std::string(s) + "'");
    s = s.substr(0, e);
  }
  std::string digits;
  unsigned frac = 0;
  bool dot = false;
  for (char c : s) {
    if (c == '.' && !dot) {
      dot = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (dot) ++frac;
    } else {
      throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
  }
  if (digits.empty()) throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  // cpp_int reads a leading 0 as an octal prefix.
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
  Rational r(cpp_int(digits), pow10(frac));
  if (exponent > 0) r *= Rational(pow10(static_cast<unsigned>(exponent)));
  if (exponent < 0) r /= Rational(pow10(static_cast<unsigned>(-exponent)));
  return negative ? Rational(-r) : r;
}

Rational clamp01(const Rational& r) {
  if (r < 0) return Rational(0);
  if (r > 1) return Rational(1);
  return r;
}

void require_tpp_args(const Rational& theta, int T, int max_T) {
  if (!(theta > 0)) throw std::invalid_argument("theta must be > 0");
  if (T < 1 || T > max_T) throw std::invalid_argument("T must lie in [1, " + std::to_string(max_T) + "]");
}

// Bias of step t (1-based) after k spikes: clamp((T X / theta - k) / (T - t + 1), 0, 1).
Rational step_bias(const Rational& y, int T, int t, int k) { return clamp01((y - k) / (T - t + 1)); }

std::uint64_t name_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

void finish(CheckReport& r) { r.passed = r.statistic <= r.tolerance; }

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    return parse_decimal(text.substr(0, slash)) / den;
  }
  return parse_decimal(text);
}

Rational exact_rational(double value) {
  if (!std::isfinite(value)) throw NumericError("cannot convert a non-finite value to a rational");
  if (value == 0.0) return Rational(0);
  int exp = 0;
  const double m = std::frexp(value, &exp);
  const auto mantissa = static_cast<long long>(std::ldexp(m, 53));
  exp -= 53;
  Rational r{cpp_int(mantissa)};
  if (exp > 0) r *= Rational(cpp_int(1) << exp);
  if (exp < 0) r /= Rational(cpp_int(1) << -exp);
  return r;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string to_string(const Rational& r) {
  const auto den = denominator(r);
  if (den == 1) return numerator(r).str();
  return numerator(r).str() + "/" + den.str();
}

Rational clipped_relu(const Rational& x, const Rational& theta) {
  if (x < 0) return Rational(0);
  return x < theta ? x : theta;
}

Rational OutcomeDistribution::total_probability() const {
  Rational sum = 0;
  for (const auto& [seq, p] : support) sum += p;
  return sum;
}

std::map<int, Rational> OutcomeDistribution::spike_count_distribution() const {
  std::map<int, Rational> out;
  for (const auto& [seq, p] : support) out[static_cast<int>(std::count(seq.begin(), seq.end(), '1'))] += p;
  return out;
}

Rational OutcomeDistribution::expected_scaled_total() const {
  Rational e = 0;
  for (const auto& [k, p] : spike_count_distribution()) e += p * k;
  return e * theta / T;
}

OutcomeDistribution enumerate_tpp(const Rational& theta, int T, const Rational& X) {
  require_tpp_args(theta, T, 20);
  OutcomeDistribution d{T, theta, X, {}};
  const Rational y = Rational(T) * X / theta;
  std::string seq;
  std::function<void(int, int, const Rational&)> expand = [&](int t, int k, const Rational& prob) {
    if (t > T) {
      d.support.emplace(seq, prob);
      return;
    }
    const Rational b = step_bias(y, T, t, k);
    if (b > 0) {
      seq.push_back('1');
      expand(t + 1, k + 1, prob * b);
      seq.pop_back();
    }
    if (b < 1) {
      seq.push_back('0');
      expand(t + 1, k, prob * (1 - b));
      seq.pop_back();
    }
  };
  expand(1, 0, Rational(1));
  return d;
}

std::vector<std::map<int, Rational>> tpp_count_marginals(const Rational& theta, int T, const Rational& X) {
  require_tpp_args(theta, T, 4096);
  const Rational y = Rational(T) * X / theta;
  std::vector<std::map<int, Rational>> out;
  std::map<int, Rational> cur{{0, Rational(1)}};
  for (int t = 1; t <= T; ++t) {
    std::map<int, Rational> next;
    for (const auto& [k, p] : cur) {
      const Rational b = step_bias(y, T, t, k);
      if (b > 0) next[k + 1] += p * b;
      if (b < 1) next[k] += p * (1 - b);
    }
    out.push_back(next);
    cur = std::move(next);
  }
  return out;
}

double CheckReport::metric(std::string_view key) const {
  for (const auto& [k, v] : metrics)
    if (k == key) return v;
  return std::numeric_limits<double>::quiet_NaN();
}

CheckReport check_running_expectation(const Rational& theta, int T, const Rational& X, std::uint64_t trials,
                                      std::uint64_t seed, double se_multiple) {
  require_tpp_args(theta, T, 4096);
  if (trials < 2) throw std::invalid_argument("need at least 2 trials");
  CheckReport r;
  r.name = "running-expectation T=" + std::to_string(T) + " X=" + to_string(X);
  r.trials = trials;
  r.parameters = {{"theta", to_string(theta)}, {"T", std::to_string(T)}, {"X", to_string(X)},
                  {"se_multiple", fmt(se_multiple)}};
  const Rational target = clipped_relu(X, theta);
  const double target_d = to_double(target);
  const double th = to_double(theta);
  const double acc = to_double(Rational(T) * X);
  const auto n = static_cast<std::size_t>(T);

  std::vector<std::uint64_t> sum(n, 0), sumsq(n, 0);
  for (std::uint64_t k = 0; k < trials; ++k) {
    const auto out = tpp_layer(std::span<const double>(&acc, 1), th, T, RngKey{seed, k, 1, 0});
    std::uint64_t c = 0;
    for (std::size_t t = 0; t < n; ++t) {
      c += out.spikes[t] != 0.0;
      sum[t] += c;
      sumsq[t] += c * c;
    }
  }

  const bool exact = T <= 16;
  std::vector<std::map<int, Rational>> marginals;
  if (exact) marginals = tpp_count_marginals(theta, T, X);

  std::string mc_fail, exact_fail, exact_values;
  double failures = 0, max_gap = 0, max_z = 0, max_exact_gap = 0;
  const auto dn = static_cast<double>(trials);
  for (std::size_t i = 0; i < n; ++i) {
    const int t = static_cast<int>(i) + 1;
    const double f = static_cast<double>(T - t + 1) * th / static_cast<double>(T);
    const double mean = static_cast<double>(sum[i]) / dn;
    const double var = std::max(0.0, (static_cast<double>(sumsq[i]) - dn * mean * mean) / (dn - 1.0));
    const double se = f * std::sqrt(var / dn);
    const double lhs = f * mean;
    const double gap = std::abs(lhs - target_d);
    max_gap = std::max(max_gap, gap);
    if (gap > std::max(se_multiple * se, 1e-12)) {
      ++failures;
      mc_fail += " " + std::to_string(t);
    }
    if (exact) {
      Rational e = 0;
      for (const auto& [k, p] : marginals[i]) e += p * k;
      const Rational lhs_exact = Rational(T - t + 1) * theta / T * e;
      exact_values += " " + fmt(to_double(lhs_exact));
      max_exact_gap = std::max(max_exact_gap, std::abs(to_double(lhs_exact - target)));
      if (lhs_exact != target) {
        ++failures;
        exact_fail += " " + std::to_string(t);
      }
      if (se > 0) max_z = std::max(max_z, std::abs(lhs - to_double(lhs_exact)) / se);
    }
  }
  r.statistic = failures;
  r.tolerance = 0;
  r.metrics = {{"target", target_d}, {"max_abs_gap_monte_carlo", max_gap}};
  if (exact) {
    r.metrics.emplace_back("max_abs_gap_exact", max_exact_gap);
    r.metrics.emplace_back("max_z_engine_vs_exact", max_z);
  }
  r.notes = "monte carlo failing steps:" + (mc_fail.empty() ? std::string(" none") : mc_fail);
  if (exact)
    r.notes += "; exact failing steps:" + (exact_fail.empty() ? std::string(" none") : exact_fail) +
               "; exact lhs by step:" + exact_values;
  finish(r);
  return r;
}

CheckReport check_conditional_expectation(const Rational& theta, int T, const Rational& X) {
  require_tpp_args(theta, T, 20);
  CheckReport r;
  r.name = "conditional-expectation T=" + std::to_string(T) + " X=" + to_string(X);
  r.parameters = {{"theta", to_string(theta)}, {"T", std::to_string(T)}, {"X", to_string(X)}};
  const Rational target = clipped_relu(X, theta);
  const Rational y = Rational(T) * X / theta;
  std::size_t checked = 0, failing = 0;
  std::string examples;
  std::string history;
  std::function<void(int, int)> walk = [&](int t, int k) {
    if (t > T) return;
    const Rational b = step_bias(y, T, t, k);
    const Rational residue = Rational(T) * X - theta * k;
    if (residue > 0) {
      ++checked;
      const Rational lhs = Rational(T - t + 1) * theta / T * b + theta / T * k;
      if (lhs != target) {
        ++failing;
        if (failing <= 8)
          examples += " [" + (history.empty() ? std::string("-") : history) + "] " + to_string(lhs);
      }
    }
    if (b > 0) {
      history.push_back('1');
      walk(t + 1, k + 1);
      history.pop_back();
    }
    if (b < 1) {
      history.push_back('0');
      walk(t + 1, k);
      history.pop_back();
    }
  };
  walk(1, 0);
  r.statistic = static_cast<double>(failing);
  r.tolerance = 0;
  r.trials = checked;
  r.metrics = {{"histories_checked", static_cast<double>(checked)}, {"histories_failing", static_cast<double>(failing)}};
  r.notes = "target " + to_string(target) +
            (failing == 0 ? std::string("; identity holds on every history")
                          : "; failing histories (s[1..t-1]) and lhs:" + examples);
  finish(r);
  return r;
}

CheckReport check_spike_count_support(const Rational& theta, int T, const Rational& X, std::uint64_t trials,
                                      std::uint64_t seed) {
  require_tpp_args(theta, T, 4096);
  CheckReport r;
  r.name = "spike-count-support T=" + std::to_string(T) + " X=" + to_string(X);
  r.trials = trials;
  r.parameters = {{"theta", to_string(theta)}, {"T", std::to_string(T)}, {"X", to_string(X)}};
  const Rational y = Rational(T) * clipped_relu(X, theta) / theta;
  const auto lo = static_cast<int>(numerator(y) / denominator(y));
  std::set<int> allowed{lo};
  if (denominator(y) != 1) allowed.insert(lo + 1);

  const double th = to_double(theta);
  const double acc = to_double(Rational(T) * X);
  std::map<int, std::uint64_t> observed;
  std::uint64_t out_of_bound = 0;
  for (std::uint64_t k = 0; k < trials; ++k) {
    const auto out = tpp_layer(std::span<const double>(&acc, 1), th, T, RngKey{seed, k, 1, 0});
    int total = 0;
    for (double s : out.spikes.data()) total += s != 0.0;
    ++observed[total];
    if (!allowed.count(total)) ++out_of_bound;
  }

  std::uint64_t missing = 0;
  std::string exact_text;
  if (T <= 64) {
    for (const auto& [k, p] : tpp_count_marginals(theta, T, X).back()) {
      exact_text += " " + std::to_string(k) + ":" + to_string(p);
      if (to_double(p) * static_cast<double>(trials) >= 20.0 && !observed.count(k)) ++missing;
    }
  }
  std::string allowed_text, observed_text;
  for (int a : allowed) allowed_text += " " + std::to_string(a);
  for (const auto& [k, c] : observed) observed_text += " " + std::to_string(k) + ":" + std::to_string(c);

  r.statistic = static_cast<double>(out_of_bound + missing);
  r.tolerance = 0;
  r.metrics = {{"out_of_bound_trials", static_cast<double>(out_of_bound)},
               {"missing_support_values", static_cast<double>(missing)},
               {"support_min", observed.empty() ? 0.0 : observed.begin()->first},
               {"support_max", observed.empty() ? 0.0 : observed.rbegin()->first},
               {"support_size", static_cast<double>(observed.size())}};
  r.notes = "allowed{" + allowed_text + " }; observed{" + observed_text + " }";
  if (!exact_text.empty()) r.notes += "; exact{" + exact_text + " }";
  finish(r);
  return r;
}

CheckReport check_layer_error_bound(const Tensor& W, double theta, int T, const std::vector<double>& X,
                                    std::uint64_t trials, std::uint64_t seed) {
  if (W.rank() != 2 || W.dim(1) != X.size()) throw DimensionError("layer bound: W must be [out x X.size()]");
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be > 0");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  CheckReport r;
  r.name = "layer-error-bound T=" + std::to_string(T) + " " + std::to_string(W.dim(0)) + "x" + std::to_string(W.dim(1));
  r.trials = trials;
  r.parameters = {{"theta", fmt(theta)}, {"T", std::to_string(T)}, {"W_shape", to_string(W.shape())}};

  const std::size_t rows = W.dim(0), cols = W.dim(1);
  double norm = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < cols; ++j) s += std::abs(W.at(i, j));
    norm = std::max(norm, s);
  }
  const double bound = norm * theta / T;
  std::vector<double> clipped(cols), acc(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    clipped[j] = std::clamp(X[j], 0.0, theta);
    acc[j] = static_cast<double>(T) * X[j];
  }
  const Tensor target = matvec(W, clipped);
  std::uint64_t violations = 0;
  double worst = 0;
  std::vector<double> rate(cols);
  for (std::uint64_t k = 0; k < trials; ++k) {
    const auto out = tpp_layer(acc, std::span<const double>(&theta, 1), T, RngKey{seed, k, 1, 0});
    std::fill(rate.begin(), rate.end(), 0.0);
    for (std::size_t t = 0; t < static_cast<std::size_t>(T); ++t)
      for (std::size_t j = 0; j < cols; ++j) rate[j] += out.spikes[t * cols + j];
    for (auto& v : rate) v = theta * v / T;
    const Tensor next = matvec(W, rate);
    const double diff = max_abs_diff(next, target);
    worst = std::max(worst, diff);
    if (diff > bound * (1.0 + 1e-12) + 1e-15) ++violations;
  }
  r.statistic = static_cast<double>(violations);
  r.tolerance = 0;
  r.metrics = {{"bound", bound}, {"norm_inf", norm}, {"max_error", worst}};
  r.notes = "max error " + fmt(worst) + " vs bound " + fmt(bound);
  finish(r);
  return r;
}

CheckReport check_tpp_distribution(const Rational& theta, int T, const Rational& X, std::uint64_t trials,
                                   std::uint64_t seed, double tolerance) {
  const auto exact = enumerate_tpp(theta, T, X);
  CheckReport r;
  r.name = "tpp-distribution T=" + std::to_string(T) + " X=" + to_string(X);
  r.trials = trials;
  r.parameters = {{"theta", to_string(theta)}, {"T", std::to_string(T)}, {"X", to_string(X)}};
  const double th = to_double(theta);
  const double acc = to_double(Rational(T) * X);
  std::map<std::string, std::uint64_t> freq;
  std::string seq(static_cast<std::size_t>(T), '0');
  for (std::uint64_t k = 0; k < trials; ++k) {
    const auto out = tpp_layer(std::span<const double>(&acc, 1), th, T, RngKey{seed, k, 1, 0});
    for (std::size_t t = 0; t < seq.size(); ++t) seq[t] = out.spikes[t] != 0.0 ? '1' : '0';
    ++freq[seq];
  }
  double tv = 0;
  std::size_t unexpected = 0;
  for (const auto& [s, p] : exact.support) {
    const auto it = freq.find(s);
    const double f = it == freq.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(trials);
    tv += std::abs(f - to_double(p));
  }
  for (const auto& [s, c] : freq)
    if (!exact.support.count(s)) {
      ++unexpected;
      tv += static_cast<double>(c) / static_cast<double>(trials);
    }
  tv *= 0.5;
  r.statistic = tv;
  r.tolerance = tolerance;
  r.metrics = {{"total_variation", tv},
               {"support_size", static_cast<double>(exact.support.size())},
               {"unexpected_sequences", static_cast<double>(unexpected)}};
  r.notes = "exact E[theta/T sum s] = " + to_string(exact.expected_scaled_total());
  finish(r);
  return r;
}

CheckReport check_permutation_average(const std::vector<std::vector<int>>& trains, const std::vector<Rational>& weights) {
  if (trains.empty() || trains.size() != weights.size())
    throw std::invalid_argument("permutation check needs one weight per spike train");
  const std::size_t T = trains.front().size();
  if (T < 1 || T > 8) throw std::invalid_argument("permutation check needs 1 <= T <= 8");
  for (const auto& s : trains)
    if (s.size() != T) throw DimensionError("spike trains must share one length");

  std::vector<Rational> column(T, Rational(0));
  for (std::size_t i = 0; i < trains.size(); ++i)
    for (std::size_t t = 0; t < T; ++t) column[t] += weights[i] * trains[i][t];

  std::vector<std::size_t> perm(T);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<Rational> total(T, Rational(0));
  std::uint64_t count = 0;
  do {
    for (std::size_t t = 0; t < T; ++t) total[t] += column[perm[t]];
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));

  CheckReport r;
  r.name = "permutation-average T=" + std::to_string(T) + " N=" + std::to_string(trains.size());
  r.trials = count;
  r.parameters = {{"T", std::to_string(T)}, {"N", std::to_string(trains.size())}};
  std::size_t differing = 0;
  std::string averages;
  for (std::size_t t = 0; t < T; ++t) {
    const Rational avg = total[t] / count;
    averages += " " + to_string(avg);
    if (total[t] != total[0]) ++differing;
  }
  r.statistic = static_cast<double>(differing);
  r.tolerance = 0;
  r.metrics = {{"expectation", to_double(total[0] / count)}, {"permutations", static_cast<double>(count)}};
  r.notes = "per-step averages:" + averages;
  finish(r);
  return r;
}

CheckReport check_rate_identity(const std::vector<SimTrace>& traces, const ConvertedModel& model, double tolerance) {
  CheckReport r;
  r.name = "rate-identity";
  r.trials = traces.size();
  r.tolerance = tolerance;
  const auto activations = model.base.activation_indices();
  double worst = 0, worst_plus = 0;
  std::size_t neurons = 0;
  for (const auto& trace : traces) {
    if (trace.mode.variant == NeuronVariant::tpp)
      throw std::invalid_argument("rate identity applies to integrate-and-fire traces only");
    if (trace.layers.size() != activations.size()) throw StructureError("trace does not match the model's layers");
    const double T = trace.T;
    for (std::size_t l = 0; l < trace.layers.size(); ++l) {
      const auto& layer = trace.layers[l];
      Tensor upstream;
      std::size_t begin = 0;
      if (l == 0) {
        upstream = trace.input;
        if (trace.encoding == InputEncoding::rate)
          for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] = trace.input_counts[i] / T;
      } else {
        const auto& prev = trace.layers[l - 1];
        begin = prev.model_layer + 1;
        upstream = Tensor(prev.shape);
        for (std::size_t i = 0; i < upstream.size(); ++i)
          upstream[i] = (trace.absorbed ? 1.0 : prev.theta[i]) * prev.spike_counts[i] / T;
      }
      const Tensor drive = forward_range(model.base, begin, layer.model_layer, upstream);
      for (std::size_t i = 0; i < drive.size(); ++i) {
        const double rate_term = layer.theta[i] * layer.spike_counts[i] / T;
        const double drift = (layer.residue[i] - layer.initial[i]) / T;
        // Summing v[t] = v[t-1] + x[t] - theta s[t] over t gives
        // theta * rate = X - (v[T] - v[0]) / T.
        worst = std::max(worst, std::abs(rate_term - drive[i] + drift));
        worst_plus = std::max(worst_plus, std::abs(rate_term - drive[i] - drift));
      }
      neurons += drive.size();
    }
  }
  r.statistic = worst;
  r.metrics = {{"max_residual", worst},
               {"max_residual_with_added_drift", worst_plus},
               {"neuron_checks", static_cast<double>(neurons)}};
  r.notes = "max per-neuron residual " + fmt(worst) + "; with the drift term added instead of subtracted " +
            fmt(worst_plus);
  finish(r);
  return r;
}

// --- suites ----------------------------------------------------------------

std::string_view to_string(Suite s) {
  switch (s) {
    case Suite::thm1: return "thm1";
    case Suite::perm: return "perm";
    case Suite::identity: return "identity";
    case Suite::all: return "all";
  }
  return "unknown";
}

Suite parse_suite(std::string_view text) {
  for (auto s : {Suite::thm1, Suite::perm, Suite::identity, Suite::all})
    if (to_string(s) == text) return s;
  throw std::invalid_argument("unknown suite '" + std::string(text) + "'");
}

namespace {

using Task = std::function<CheckReport()>;

std::uint64_t trials_or(const SuiteOptions& o, std::uint64_t fallback) { return o.trials ? o.trials : fallback; }

std::uint64_t check_seed(const SuiteOptions& o, std::string_view name) { return derive(o.seed, name_hash(name)); }

void tpp_tasks(std::vector<Task>& tasks, const SuiteOptions& o) {
  const Rational one(1);
  for (int T : {4, 8, 16})
    for (const char* x : {"0", "0.37", "0.5", "0.99", "2"})
      tasks.emplace_back([=] {
        const Rational X = parse_rational(x);
        const std::string key = "running " + std::to_string(T) + " " + x;
        return check_running_expectation(one, T, X, trials_or(o, 100'000), check_seed(o, key));
      });
  for (const char* x : {"0.25", "0.6", "0.875"})
    tasks.emplace_back([=] { return check_conditional_expectation(one, 4, parse_rational(x)); });
  for (const char* x : {"0.5", "0.625", "0.99"})
    tasks.emplace_back([=] {
      return check_spike_count_support(one, 4, parse_rational(x), trials_or(o, 100'000),
                                       check_seed(o, std::string("support ") + x));
    });
  for (int T : {4, 8})
    tasks.emplace_back([=] {
      SplitMix64 gen(check_seed(o, "bound instance " + std::to_string(T)));
      Tensor W({4, 4});
      for (auto& w : W.data()) w = 2.0 * unit_interval(gen()) - 1.0;
      std::vector<double> X(4);
      for (auto& x : X) x = 2.0 * unit_interval(gen()) - 0.5;
      auto r = check_layer_error_bound(W, 1.0, T, X, trials_or(o, 10'000), check_seed(o, "bound " + std::to_string(T)));
      r.name = "layer-error-bound T=" + std::to_string(T) + " random 4x4";
      return r;
    });
  for (const char* x : {"0.625", "0.99"})
    tasks.emplace_back([=] {
      return check_tpp_distribution(one, 4, parse_rational(x), trials_or(o, 1'000'000),
                                    check_seed(o, std::string("distribution ") + x));
    });
}

void perm_tasks(std::vector<Task>& tasks, const SuiteOptions& o) {
  for (int T : {3, 4, 5})
    tasks.emplace_back([=] {
      SplitMix64 gen(check_seed(o, "perm " + std::to_string(T)));
      constexpr int kInstances = 50;
      CheckReport agg;
      agg.name = "permutation-average T=" + std::to_string(T);
      agg.parameters = {{"T", std::to_string(T)}, {"instances", std::to_string(kInstances)}};
      std::size_t failing = 0;
      for (int k = 0; k < kInstances; ++k) {
        const auto n = 1 + uniform_below(6, gen());
        std::vector<std::vector<int>> trains(n, std::vector<int>(static_cast<std::size_t>(T)));
        std::vector<Rational> w;
        for (auto& s : trains)
          for (auto& b : s) b = static_cast<int>(gen() >> 63);
        for (std::size_t i = 0; i < n; ++i) w.push_back(exact_rational(2.0 * unit_interval(gen()) - 1.0));
        const auto r = check_permutation_average(trains, w);
        agg.trials += r.trials;
        if (!r.passed) ++failing;
      }
      agg.statistic = static_cast<double>(failing);
      agg.tolerance = 0;
      agg.metrics = {{"instances", kInstances}, {"failing_instances", static_cast<double>(failing)}};
      agg.notes = std::to_string(kInstances) + " random instances, exhaustive over all permutations";
      finish(agg);
      return agg;
    });
}

struct IdentityFixture {
  ModelGraph mlp;
  Dataset inputs;
  ThresholdPlan layer_plan;
  ThresholdPlan channel_plan;
};

IdentityFixture identity_fixture(std::uint64_t seed) {
  IdentityFixture f;
  f.mlp = random_mlp({16, 32, 32, 10}, derive(seed, 1));
  f.inputs = uniform_inputs({16}, 100, derive(seed, 2));
  const auto stats = collect_activation_stats(f.mlp, f.inputs, f.inputs.size());
  f.layer_plan = fit_thresholds(stats, ThresholdSource::max(), Granularity::layer);
  f.channel_plan = fit_thresholds(stats, ThresholdSource::max(), Granularity::channel);
  return f;
}

ModelGraph conv_bn_model(std::uint64_t seed) {
  SplitMix64 gen(seed);
  auto normal = [&](double s) { return s * standard_normal(gen); };
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit_interval(gen()); };
  ModelGraph m;
  m.input_shape = {1, 6, 6};
  Tensor w({4, 1, 3, 3}), b({4});
  for (auto& v : w.data()) v = normal(std::sqrt(2.0 / 9.0));
  for (auto& v : b.data()) v = normal(0.1);
  m.layers.emplace_back(Conv2dLayer{w, b, 1, 1});
  BatchNormLayer bn{Tensor({4}), Tensor({4}), Tensor({4}), Tensor({4}), 1e-5};
  for (std::size_t c = 0; c < 4; ++c) {
    bn.gamma[c] = uniform(0.5, 1.5);
    bn.beta[c] = normal(0.1);
    bn.running_mean[c] = normal(0.1);
    bn.running_var[c] = uniform(0.5, 1.5);
  }
  m.layers.emplace_back(bn);
  m.layers.emplace_back(ActivationLayer{ActivationSpec::relu()});
  m.layers.emplace_back(AvgPoolLayer{2, 2});
  m.layers.emplace_back(FlattenLayer{});
  Tensor w2({8, 36}), b2({8}), w3({5, 8}), b3({5});
  for (auto& v : w2.data()) v = normal(std::sqrt(2.0 / 36.0));
  for (auto& v : b2.data()) v = normal(0.1);
  for (auto& v : w3.data()) v = normal(0.5);
  for (auto& v : b3.data()) v = normal(0.1);
  m.layers.emplace_back(LinearLayer{w2, b2});
  m.layers.emplace_back(ActivationLayer{ActivationSpec::relu()});
  m.layers.emplace_back(LinearLayer{w3, b3});
  return m;
}

ModelGraph mlp_bn_model(std::uint64_t seed) {
  auto m = random_mlp({16, 32, 10}, seed);
  SplitMix64 gen(derive(seed, 9));
  BatchNormLayer bn{Tensor({32}), Tensor({32}), Tensor({32}), Tensor({32}), 1e-5};
  for (std::size_t c = 0; c < 32; ++c) {
    bn.gamma[c] = 0.5 + unit_interval(gen());
    bn.beta[c] = 0.1 * standard_normal(gen);
    bn.running_mean[c] = 0.1 * standard_normal(gen);
    bn.running_var[c] = 0.5 + unit_interval(gen());
  }
  m.layers.insert(m.layers.begin() + 1, bn);
  return m;
}

CheckReport rate_identity_task(const SuiteOptions& o, const std::string& label, const SimConfig& config,
                               AbsorbMode absorb) {
  const auto f = identity_fixture(o.seed);
  const auto converted = absorb_thresholds(f.mlp, f.layer_plan, absorb);
  const Simulator sim(converted);
  std::vector<SimTrace> traces;
  for (std::size_t i = 0; i < f.inputs.size(); ++i)
    traces.push_back(sim.run(f.inputs.sample(i), config, RngKey{check_seed(o, label), i, 0, 0}).trace);
  auto r = check_rate_identity(traces, converted);
  r.name = "rate-identity " + label;
  r.parameters = {{"model", "mlp 16-32-32-10"}, {"T", std::to_string(config.T)},
                  {"mode", std::string(to_string(config.mode.variant))},
                  {"encoding", std::string(to_string(config.encoding))},
                  {"initial_potential", fmt(config.mode.initial_potential)},
                  {"absorbed", absorb == AbsorbMode::absorbed ? "true" : "false"}};
  return r;
}

CheckReport fold_task(const SuiteOptions& o, const std::string& label, const ModelGraph& model) {
  const auto folded = fold_batchnorm(model);
  const auto inputs = uniform_inputs(model.input_shape, 100, check_seed(o, "fold inputs " + label));
  double worst = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto x = inputs.sample(i);
    worst = std::max(worst, max_abs_diff(ann_forward(model, x).logits, ann_forward(folded, x).logits));
  }
  CheckReport r;
  r.name = "fold-batchnorm " + label;
  r.trials = inputs.size();
  r.statistic = worst;
  r.tolerance = 1e-9;
  r.metrics = {{"max_abs_diff", worst}};
  r.notes = "folded vs unfolded forward, max |diff| " + fmt(worst);
  finish(r);
  return r;
}

CheckReport absorb_task(const SuiteOptions& o, const std::string& label, const ModelGraph& model,
                        const Dataset& inputs, Granularity granularity) {
  const auto stats = collect_activation_stats(model, inputs, inputs.size());
  const auto plan = fit_thresholds(stats, ThresholdSource::max(), granularity);
  const auto absorbed = absorb_thresholds(model, plan, AbsorbMode::absorbed);
  const auto reference = absorb_thresholds(model, plan, AbsorbMode::reference);
  const Simulator a(absorbed), b(reference);
  double worst = 0;
  std::uint64_t runs = 0;
  for (auto mode : {NeuronMode::baseline(), NeuronMode::shuffled(), NeuronMode::tpp()}) {
    SimConfig config;
    config.mode = mode;
    config.T = 8;
    for (std::size_t i = 0; i < std::min<std::size_t>(inputs.size(), 25); ++i) {
      const RngKey key{check_seed(o, "absorb " + label), i, 0, 0};
      const auto x = inputs.sample(i);
      worst = std::max(worst, max_abs_diff(a.run(x, config, key).logits, b.run(x, config, key).logits));
      ++runs;
    }
  }
  CheckReport r;
  r.name = "absorb-equivalence " + label;
  r.trials = runs;
  r.statistic = worst;
  r.tolerance = 1e-9;
  r.parameters = {{"granularity", std::string(to_string(granularity))}, {"T", "8"},
                  {"modes", "baseline,shuffle,tpp"}};
  r.metrics = {{"max_abs_diff", worst}};
  r.notes = "absorbed vs reference-mode logits on shared streams, max |diff| " + fmt(worst);
  finish(r);
  return r;
}

void identity_tasks(std::vector<Task>& tasks, const SuiteOptions& o) {
  SimConfig base;
  base.T = 16;
  tasks.emplace_back([=] { return rate_identity_task(o, "baseline", base, AbsorbMode::absorbed); });
  tasks.emplace_back([=] {
    SimConfig c = base;
    c.mode = NeuronMode::baseline(0.5);
    return rate_identity_task(o, "baseline half-theta start", c, AbsorbMode::absorbed);
  });
  tasks.emplace_back([=] {
    SimConfig c = base;
    c.encoding = InputEncoding::rate;
    return rate_identity_task(o, "baseline rate-coded input", c, AbsorbMode::absorbed);
  });
  tasks.emplace_back([=] { return rate_identity_task(o, "baseline reference mode", base, AbsorbMode::reference); });
  tasks.emplace_back([=] {
    SimConfig c = base;
    c.mode = NeuronMode::shuffled();
    return rate_identity_task(o, "shuffle", c, AbsorbMode::absorbed);
  });
  tasks.emplace_back([=] { return fold_task(o, "mlp", mlp_bn_model(check_seed(o, "fold mlp"))); });
  tasks.emplace_back([=] { return fold_task(o, "conv", conv_bn_model(check_seed(o, "fold conv"))); });
  tasks.emplace_back([=] {
    const auto f = identity_fixture(o.seed);
    return absorb_task(o, "mlp layer", f.mlp, f.inputs, Granularity::layer);
  });
  tasks.emplace_back([=] {
    const auto f = identity_fixture(o.seed);
    return absorb_task(o, "mlp channel", f.mlp, f.inputs, Granularity::channel);
  });
  tasks.emplace_back([=] {
    const auto model = fold_batchnorm(conv_bn_model(check_seed(o, "fold conv")));
    const auto inputs = uniform_inputs(model.input_shape, 100, check_seed(o, "absorb conv inputs"));
    return absorb_task(o, "conv channel", model, inputs, Granularity::channel);
  });
}

}  // namespace

std::vector<CheckReport> run_suite(Suite suite, const SuiteOptions& options) {
  std::vector<Task> tasks;
  if (suite == Suite::thm1 || suite == Suite::all) tpp_tasks(tasks, options);
  if (suite == Suite::perm || suite == Suite::all) perm_tasks(tasks, options);
  if (suite == Suite::identity || suite == Suite::all) identity_tasks(tasks, options);
  std::vector<CheckReport> reports(tasks.size());
  parallel_for(tasks.size(), options.threads, [&](std::size_t i) { reports[i] = tasks[i](); });
  return reports;
}

std::string reports_to_json(const std::vector<CheckReport>& reports, Suite suite, const SuiteOptions& options) {
  using nlohmann::ordered_json;
  ordered_json checks = ordered_json::array();
  bool all_passed = true;
  for (const auto& r : reports) {
    all_passed = all_passed && r.passed;
    ordered_json params = ordered_json::object(), metrics = ordered_json::object();
    for (const auto& [k, v] : r.parameters) params[k] = v;
    for (const auto& [k, v] : r.metrics) metrics[k] = v;
    checks.push_back(ordered_json{{"name", r.name},
                                  {"passed", r.passed},
                                  {"statistic", r.statistic},
                                  {"tolerance", r.tolerance},
                                  {"trials", r.trials},
                                  {"parameters", params},
                                  {"metrics", metrics},
                                  {"notes", r.notes}});
  }
  ordered_json doc{{"schema_version", kCheckReportSchemaVersion},
                   {"suite", std::string(to_string(suite))},
                   {"seed", options.seed},
                   {"trials", options.trials},
                   {"passed", all_passed},
                   {"checks", checks}};
  return doc.dump(2) + "\n";
}

}  // namespace spikeforge
