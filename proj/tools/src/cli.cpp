// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "spikeforge/calibration.hpp"
#include "spikeforge/error.hpp"
#include "spikeforge/metrics.hpp"
#include "spikeforge/report.hpp"
#include "spikeforge/snn.hpp"
#include "spikeforge/theory.hpp"
#include "spikeforge/trainer.hpp"
#include "spikeforge/weights_io.hpp"

namespace spikeforge {

namespace {

using nlohmann::ordered_json;

// Bad argument values detected after CLI11 parsing.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!s.empty() && s.front() == '-') throw std::invalid_argument("negative");
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (s.empty() || used != s.size()) throw UsageError(std::string("invalid ") + what + " '" + s + "'");
  return v;
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& text, F&& item, const char* what) {
  std::vector<T> out;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) throw UsageError(std::string("empty entry in ") + what + " list '" + text + "'");
    out.push_back(item(part));
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

std::vector<int> parse_T_list(const std::string& text) {
  return parse_list<int>(text, [](const std::string& s) {
    const auto v = parse_u64(s, "T");
    if (v < 1 || v > 1'000'000) throw UsageError("T must lie in [1, 1000000], got " + s);
    return static_cast<int>(v);
  }, "T");
}

std::vector<NeuronVariant> parse_modes(const std::string& text) {
  return parse_list<NeuronVariant>(text, [](const std::string& s) {
    try {
      return parse_neuron_variant(s);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }, "mode");
}

template <typename F>
auto usage_guard(F&& f) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::unique_ptr<std::ostream> open_out(const std::string& path) {
  auto f = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*f) throw Error("cannot write " + path);
  return f;
}

template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(fallback);
    return;
  }
  auto f = open_out(path);
  fn(*f);
  if (!*f) throw Error("failed writing " + path);
}

void log_config(std::ostream& err, const ordered_json& config) { err << config.dump() << '\n'; }

ordered_json to_json(const std::vector<int>& v) { return ordered_json(v); }

std::vector<std::string> mode_names(const std::vector<NeuronVariant>& modes) {
  std::vector<std::string> names;
  for (auto m : modes) names.emplace_back(to_string(m));
  return names;
}

// Loads weights that carry a threshold plan and converts them for simulation.
ConvertedModel load_converted(const std::string& dir, bool reference) {
  auto bundle = read_weight_bundle(dir);
  if (!bundle.plan) throw CalibrationError("weights in " + dir + " carry no threshold plan; run `calibrate` first");
  return absorb_thresholds(fold_batchnorm(bundle.model), *bundle.plan,
                           reference ? AbsorbMode::reference : AbsorbMode::absorbed);
}

struct SimOptions {
  std::string weights;
  std::string data;
  std::size_t limit = 0;
  double initial_potential = 0.0;
  std::string shuffle_scope = "shared";
  std::string encoding = "constant";
  std::string head = "accumulate";
  bool reference = false;
  unsigned threads = 1;

  void add_to(CLI::App* app) {
    app->add_option("--weights", weights, "Directory holding manifest.json + weights.bin (calibrated)")->required();
    app->add_option("--data", data, "Dataset spec, e.g. idx:IMAGES,LABELS or synth:xor:N")->required();
    app->add_option("--limit", limit, "Evaluate only the first N samples (0 = all)");
    app->add_option("--initial-potential", initial_potential, "Baseline/shuffle v[0] as a fraction of theta");
    app->add_option("--shuffle-scope", shuffle_scope, "shared | per-neuron");
    app->add_option("--encoding", encoding, "constant | rate");
    app->add_option("--head", head, "accumulate | spiking");
    app->add_flag("--reference", reference, "Keep weights unabsorbed and emit theta-valued spikes");
  }

  SweepConfig sweep() const {
    SweepConfig c;
    c.limit = limit;
    c.threads = threads;
    c.initial_potential = initial_potential;
    usage_guard([&] {
      c.shuffle_scope = parse_shuffle_scope(shuffle_scope);
      c.encoding = parse_input_encoding(encoding);
      c.head = parse_head_mode(head);
      return 0;
    });
    return c;
  }

  ordered_json json() const {
    return ordered_json{{"weights", weights},       {"data", data},
                        {"limit", limit},           {"initial_potential", initial_potential},
                        {"shuffle_scope", shuffle_scope}, {"encoding", encoding},
                        {"head", head},             {"reference", reference},
                        {"threads", threads}};
  }
};

std::vector<std::uint64_t> resolve_seeds(const std::string& seeds, std::optional<std::uint64_t> seed, std::size_t trials) {
  if (!seeds.empty()) return parse_list<std::uint64_t>(seeds, [](const std::string& s) { return parse_u64(s, "seed"); }, "seed");
  if (trials == 0) throw UsageError("--trials must be >= 1");
  const std::uint64_t first = seed ? *seed : default_seed();
  std::vector<std::uint64_t> out;
  for (std::size_t k = 0; k < trials; ++k) out.push_back(first + k);
  return out;
}

int cmd_train(std::ostream& out, std::ostream& err, const std::string& data_spec, const std::string& test_spec,
              const std::string& out_dir, const std::string& hidden, const TrainConfig& base, unsigned threads) {
  TrainConfig config = base;
  config.hidden = parse_list<std::size_t>(hidden, [](const std::string& s) { return parse_u64(s, "width"); }, "hidden");
  log_config(err, ordered_json{{"command", "train"},
                               {"data", data_spec},
                               {"test", test_spec},
                               {"out", out_dir},
                               {"hidden", config.hidden},
                               {"epochs", config.epochs},
                               {"learning_rate", config.learning_rate},
                               {"batch_size", config.batch_size},
                               {"momentum", config.momentum},
                               {"seed", config.seed},
                               {"threads", threads}});
  const auto train = load_data_spec(data_spec);
  const auto model = train_toy_mlp(train, config);
  write_weights(model, out_dir);
  ordered_json summary{{"train_accuracy", ann_accuracy(model, train, threads)}, {"train_samples", train.size()}};
  if (!test_spec.empty()) {
    const auto test = load_data_spec(test_spec);
    summary["test_accuracy"] = ann_accuracy(model, test, threads);
    summary["test_samples"] = test.size();
  }
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_calibrate(std::ostream& out, std::ostream& err, const std::string& weights, const std::string& data_spec,
                  std::size_t samples, const std::string& source_text, const std::string& granularity_text,
                  const std::string& out_dir, std::uint64_t seed, unsigned threads) {
  const auto source = usage_guard([&] { return ThresholdSource::parse(source_text); });
  const auto granularity = usage_guard([&] { return parse_granularity(granularity_text); });
  if (samples == 0) throw UsageError("--samples must be >= 1");
  log_config(err, ordered_json{{"command", "calibrate"},
                               {"weights", weights},
                               {"data", data_spec},
                               {"samples", samples},
                               {"source", source.to_string()},
                               {"granularity", std::string(to_string(granularity))},
                               {"out", out_dir},
                               {"seed", seed},
                               {"threads", threads}});
  const auto model = fold_batchnorm(read_weights(weights));
  const auto data = load_data_spec(data_spec);
  StatsOptions options;
  options.seed = seed;
  options.threads = threads;
  const auto stats = collect_activation_stats(model, data, samples, options);
  const auto plan = fit_thresholds(stats, source, granularity);
  write_weights(model, out_dir, plan);
  ordered_json layers = ordered_json::array();
  for (const auto& l : plan.layers) {
    double lo = l.theta.front(), hi = l.theta.front();
    for (double t : l.theta) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    layers.push_back(ordered_json{{"layer", l.layer}, {"thresholds", l.theta.size()}, {"min", lo}, {"max", hi}});
  }
  out << ordered_json{{"samples", stats.samples}, {"layers", layers}}.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

std::uint64_t default_seed(std::uint64_t fallback) {
  if (const char* env = std::getenv("SPIKEFORGE_SEED"); env && *env) return parse_u64(env, "SPIKEFORGE_SEED");
  return fallback;
}

Dataset load_data_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw UsageError("dataset spec '" + spec + "' has no kind prefix");
  const std::string kind = spec.substr(0, colon), rest = spec.substr(colon + 1);
  if (kind == "idx") {
    const auto files = split(rest, ',');
    if (files.size() != 2) throw UsageError("idx spec needs IMAGES,LABELS");
    return load_idx(files[0], files[1]);
  }
  if (kind == "cifar10") {
    std::vector<std::filesystem::path> files;
    for (const auto& f : split(rest, ',')) files.emplace_back(f);
    return load_cifar10(files);
  }
  if (kind == "synth") {
    const auto parts = split(rest, ':');
    if (parts.size() < 2 || parts.size() > 3) throw UsageError("synth spec needs xor|blobs:N[:SEED]");
    const auto n = parse_u64(parts[1], "sample count");
    const auto seed = parts.size() == 3 ? parse_u64(parts[2], "seed") : 0;
    if (parts[0] == "xor") return synth_dataset(SynthKind::xor_corners, n, seed);
    if (parts[0] == "blobs") return synth_dataset(SynthKind::gaussian_blobs, n, seed);
    throw UsageError("unknown synthetic dataset '" + parts[0] + "'");
  }
  throw UsageError("unknown dataset kind '" + kind + "'");
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<std::uint64_t> env_seed;
  try {
    if (const char* env = std::getenv("SPIKEFORGE_SEED"); env && *env) env_seed = default_seed();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App app{"spikeforge: ANN-to-SNN conversion and spiking simulation"};
  app.name("spikeforge");
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  // train
  auto* train = app.add_subcommand("train", "Train a toy relu MLP and write its weights");
  std::string train_data, train_test, train_out, hidden = "128,64";
  TrainConfig train_config;
  train_config.seed = env_seed.value_or(1);
  train->add_option("--data", train_data, "Training dataset spec")->required();
  train->add_option("--test", train_test, "Optional test dataset spec for reporting");
  train->add_option("--out", train_out, "Output weights directory")->required();
  train->add_option("--hidden", hidden, "Hidden widths, comma separated");
  train->add_option("--epochs", train_config.epochs);
  train->add_option("--lr", train_config.learning_rate);
  train->add_option("--batch", train_config.batch_size);
  train->add_option("--momentum", train_config.momentum);
  train->add_option("--seed", train_config.seed);

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Fit thresholds and store them with the weights");
  std::string cal_weights, cal_data, cal_source = "max", cal_granularity = "layer", cal_out;
  std::size_t cal_samples = 1000;
  std::uint64_t cal_seed = env_seed.value_or(1);
  calibrate->add_option("--weights", cal_weights)->required();
  calibrate->add_option("--data", cal_data)->required();
  calibrate->add_option("--samples", cal_samples, "Calibration samples");
  calibrate->add_option("--source", cal_source, "max | pct:P");
  calibrate->add_option("--granularity", cal_granularity, "layer | channel");
  calibrate->add_option("--out", cal_out)->required();
  calibrate->add_option("--seed", cal_seed, "Reservoir sampling seed");

  // run
  auto* run = app.add_subcommand("run", "Accuracy sweep over modes, latencies and seeds");
  SimOptions run_sim;
  run_sim.add_to(run);
  std::string run_modes = "baseline", run_T = "8", run_seeds, run_out, run_anytime;
  std::optional<std::uint64_t> run_seed;
  std::size_t run_trials = 1;
  run->add_option("--mode", run_modes, "baseline,shuffle,tpp (comma separated)");
  run->add_option("--T", run_T, "Latencies, comma separated");
  run->add_option("--seeds", run_seeds, "Seeds, comma separated");
  run->add_option("--seed", run_seed, "First seed (with --trials)");
  run->add_option("--trials", run_trials, "Number of consecutive seeds starting at --seed");
  run->add_option("--out", run_out, "Accuracy CSV (default stdout)");
  run->add_option("--anytime", run_anytime, "Also write the anytime-accuracy CSV here");

  // verify
  auto* verify = app.add_subcommand("verify", "Run the property suites and emit check reports");
  std::string suite_name = "all", verify_json;
  SuiteOptions suite;
  suite.seed = env_seed.value_or(7);
  verify->add_option("--suite", suite_name, "thm1 | perm | identity | all");
  verify->add_option("--seed", suite.seed);
  verify->add_option("--trials", suite.trials, "Monte Carlo trials per check (0 = per-check default)");
  verify->add_option("--json", verify_json, "Write the JSON report here");

  // spikes
  auto* spikes = app.add_subcommand("spikes", "Spike counts per layer and step, with percentage difference");
  SimOptions sp_sim;
  sp_sim.add_to(spikes);
  std::string sp_modes = "tpp", sp_T = "8", sp_baseline = "baseline", sp_out;
  std::uint64_t sp_seed = env_seed.value_or(1);
  spikes->add_option("--mode", sp_modes);
  spikes->add_option("--T", sp_T);
  spikes->add_option("--seed", sp_seed);
  spikes->add_option("--baseline-mode", sp_baseline, "Reference mode for the percentage difference");
  spikes->add_option("--out", sp_out, "CSV (default stdout)");

  // hist
  auto* hist = app.add_subcommand("hist", "Histogram of pre-fire membrane potentials");
  SimOptions h_sim;
  h_sim.limit = 100;
  h_sim.add_to(hist);
  std::string h_mode = "baseline", h_out;
  int h_T = 8, h_t = 1;
  std::size_t h_layer = 1, h_bins = 20;
  std::optional<std::size_t> h_channel;
  std::uint64_t h_seed = env_seed.value_or(1);
  hist->add_option("--mode", h_mode);
  hist->add_option("--T", h_T);
  hist->add_option("--t", h_t, "Step (1-based)");
  hist->add_option("--layer", h_layer, "Spiking layer (1-based)");
  hist->add_option("--bins", h_bins);
  hist->add_option("--channel", h_channel, "Restrict to one channel");
  hist->add_option("--seed", h_seed);
  hist->add_option("--out", h_out, "CSV (default stdout)");

  // export-report
  auto* exp = app.add_subcommand("export-report", "Summarize a sweep CSV as JSON");
  std::string exp_in, exp_out;
  exp->add_option("--in", exp_in)->required();
  exp->add_option("--out", exp_out, "JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(out, err, train_data, train_test, train_out, hidden, train_config, threads);
    if (*calibrate)
      return cmd_calibrate(out, err, cal_weights, cal_data, cal_samples, cal_source, cal_granularity, cal_out,
                           cal_seed, threads);

    if (*run) {
      run_sim.threads = threads;
      SweepConfig config = run_sim.sweep();
      config.modes = parse_modes(run_modes);
      config.T_values = parse_T_list(run_T);
      config.seeds = resolve_seeds(run_seeds, run_seed, run_trials);
      auto cfg = run_sim.json();
      cfg["command"] = "run";
      cfg["modes"] = mode_names(config.modes);
      cfg["T"] = to_json(config.T_values);
      cfg["seeds"] = config.seeds;
      log_config(err, cfg);
      const auto model = load_converted(run_sim.weights, run_sim.reference);
      const auto data = load_data_spec(run_sim.data);
      const auto cells = run_sweep(config, model, data);
      with_output(run_out, out, [&](std::ostream& o) { write_accuracy_csv(o, accuracy_rows(cells)); });
      if (!run_anytime.empty())
        with_output(run_anytime, out, [&](std::ostream& o) { write_anytime_csv(o, anytime_rows(cells)); });
      return kExitOk;
    }

    if (*verify) {
      const auto s = usage_guard([&] { return parse_suite(suite_name); });
      suite.threads = threads;
      log_config(err, ordered_json{{"command", "verify"},
                                   {"suite", suite_name},
                                   {"seed", suite.seed},
                                   {"trials", suite.trials},
                                   {"threads", threads},
                                   {"json", verify_json}});
      const auto reports = run_suite(s, suite);
      std::size_t passed = 0;
      for (const auto& r : reports) {
        passed += r.passed;
        out << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  statistic=" << format_double(r.statistic)
            << " tolerance=" << format_double(r.tolerance) << '\n';
      }
      out << passed << "/" << reports.size() << " checks passed\n";
      if (!verify_json.empty())
        with_output(verify_json, out, [&](std::ostream& o) { o << reports_to_json(reports, s, suite); });
      return passed == reports.size() ? kExitOk : kExitFailure;
    }

    if (*spikes) {
      sp_sim.threads = threads;
      SweepConfig config = sp_sim.sweep();
      auto modes = parse_modes(sp_modes);
      const auto baseline = usage_guard([&] { return parse_neuron_variant(sp_baseline); });
      config.modes = modes;
      if (std::find(modes.begin(), modes.end(), baseline) == modes.end()) config.modes.insert(config.modes.begin(), baseline);
      config.T_values = parse_T_list(sp_T);
      config.seeds = {sp_seed};
      auto cfg = sp_sim.json();
      cfg["command"] = "spikes";
      cfg["modes"] = mode_names(modes);
      cfg["baseline_mode"] = sp_baseline;
      cfg["T"] = to_json(config.T_values);
      cfg["seed"] = sp_seed;
      log_config(err, cfg);
      const auto model = load_converted(sp_sim.weights, sp_sim.reference);
      const auto data = load_data_spec(sp_sim.data);
      const auto cells = run_sweep(config, model, data);
      auto find_cell = [&](NeuronVariant m, int T) -> const SweepCell& {
        for (const auto& c : cells)
          if (c.mode == m && c.T == T) return c;
        throw std::logic_error("missing sweep cell");
      };
      with_output(sp_out, out, [&](std::ostream& o) {
        CsvWriter csv(o);
        csv.row({"mode", "T", "layer", "step", "mean_spikes", "baseline_mean_spikes", "pct_difference"});
        for (auto m : modes)
          for (int T : config.T_values) {
            const auto& ours = find_cell(m, T).spikes;
            const auto& ref = find_cell(baseline, T).spikes;
            for (std::size_t l = 0; l < ours.layers.size(); ++l) {
              const auto& a = ours.layers[l];
              const auto& b = ref.layers[l];
              for (std::size_t t = 0; t < a.per_step.size(); ++t)
                csv.row({std::string(to_string(m)), std::to_string(T), std::to_string(a.layer), std::to_string(t + 1),
                         format_double(a.per_step[t]), format_double(b.per_step[t]),
                         format_optional(percentage_difference(a.per_step[t], b.per_step[t]))});
            }
            for (const auto& d : compare_spikes(ours, ref))
              csv.row({std::string(to_string(m)), std::to_string(T), d.layer ? std::to_string(*d.layer) : "all", "all",
                       format_double(d.ours), format_double(d.baseline), format_optional(d.percent)});
          }
      });
      return kExitOk;
    }

    if (*hist) {
      const auto mode = usage_guard([&] { return parse_neuron_variant(h_mode); });
      if (h_T < 1) throw UsageError("--T must be >= 1");
      if (h_t < 1 || h_t > h_T) throw UsageError("--t must lie in [1, T]");
      if (h_layer < 1) throw UsageError("--layer is 1-based");
      if (h_bins < 1) throw UsageError("--bins must be >= 1");
      h_sim.threads = threads;
      const SweepConfig sc = h_sim.sweep();
      auto cfg = h_sim.json();
      cfg["command"] = "hist";
      cfg["mode"] = h_mode;
      cfg["T"] = h_T;
      cfg["t"] = h_t;
      cfg["layer"] = h_layer;
      cfg["bins"] = h_bins;
      cfg["channel"] = h_channel ? ordered_json(*h_channel) : ordered_json(nullptr);
      cfg["seed"] = h_seed;
      log_config(err, cfg);
      const auto model = load_converted(h_sim.weights, h_sim.reference);
      const auto data = load_data_spec(h_sim.data);
      const Simulator sim(model);
      if (h_layer > sim.spiking_layers())
        throw UsageError("model has " + std::to_string(sim.spiking_layers()) + " spiking layers");
      SimConfig config;
      config.mode.variant = mode;
      config.mode.shuffle_scope = sc.shuffle_scope;
      config.mode.initial_potential = mode == NeuronVariant::tpp ? 0.0 : sc.initial_potential;
      config.T = h_T;
      config.encoding = sc.encoding;
      config.head = sc.head;
      config.trace = TraceLevel::full;
      const std::size_t n = sc.limit ? std::min(sc.limit, data.size()) : data.size();
      std::vector<SimTrace> traces;
      for (std::size_t i = 0; i < n; ++i) traces.push_back(sim.run(data.sample(i), config, RngKey{h_seed, i, 0, 0}).trace);
      const auto h = histogram_membrane(traces, h_layer - 1, h_t, h_bins, h_channel);
      with_output(h_out, out, [&](std::ostream& o) { write_histogram_csv(o, h); });
      err << ordered_json{{"theta", h.theta}, {"mean", h.mean}, {"variance", h.variance}, {"total", h.total()}}.dump()
          << '\n';
      return kExitOk;
    }

    if (*exp) {
      log_config(err, ordered_json{{"command", "export-report"}, {"in", exp_in}, {"out", exp_out}});
      std::ifstream in(exp_in, std::ios::binary);
      if (!in) throw Error("cannot open " + exp_in);
      std::stringstream buf;
      buf << in.rdbuf();
      const auto records = parse_csv(buf.str());
      if (records.empty()) throw FormatError(exp_in + " is empty");
      const auto& header = records.front();
      auto column = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
          if (header[i] == name) return i;
        throw FormatError(exp_in + " has no '" + name + "' column");
      };
      ordered_json doc{{"schema_version", kReportSchemaVersion}, {"source", exp_in}};
      ordered_json rows = ordered_json::array();
      const bool anytime = std::find(header.begin(), header.end(), "t") != header.end();
      const bool accuracy = std::find(header.begin(), header.end(), "accuracy") != header.end();
      if (!anytime && !accuracy) throw FormatError(exp_in + " is neither an accuracy nor an anytime sweep");
      doc["kind"] = anytime ? "anytime" : "accuracy";
      const auto mode_i = column("mode"), T_i = column("T");
      std::map<std::pair<std::string, long>, std::vector<double>> groups;
      std::vector<std::pair<std::string, long>> order;
      for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != header.size()) throw FormatError("row " + std::to_string(r) + " has the wrong field count");
        ordered_json row;
        for (std::size_t i = 0; i < header.size(); ++i) {
          const auto& f = rec[i];
          char* end = nullptr;
          const double v = std::strtod(f.c_str(), &end);
          if (!f.empty() && end == f.c_str() + f.size())
            row[header[i]] = v;
          else
            row[header[i]] = f;
        }
        rows.push_back(row);
        if (accuracy) {
          const std::pair<std::string, long> key{rec[mode_i], std::stol(rec[T_i])};
          if (!groups.count(key)) order.push_back(key);
          groups[key].push_back(std::stod(rec[column("accuracy")]));
        }
      }
      doc["rows"] = rows;
      if (accuracy) {
        ordered_json summary = ordered_json::array();
        for (const auto& key : order) {
          const auto [mean, sd] = mean_std(groups[key]);
          summary.push_back(ordered_json{
              {"mode", key.first}, {"T", key.second}, {"seeds", groups[key].size()}, {"mean", mean}, {"std", sd}});
        }
        doc["summary"] = summary;
      }
      with_output(exp_out, out, [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("spikeforge");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace spikeforge
