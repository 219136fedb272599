#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shape4d/shape4d.hpp"

using namespace shape4d;

namespace {

struct Global {
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  bool noTimestamp = false;
  unsigned threads = 0;
};

/// Usage or input errors that map to exit code 2.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 1; i < argc; ++i) s += (i > 1 ? " " : "") + std::string(argv[i]);
  return s;
}

LabeledConstellation resolve_constellation(const std::string& name) {
  for (auto b : kBuiltinNames) {
    if (b == name) return builtin(name);
  }
  if (!std::filesystem::exists(name)) {
    throw UsageError("'" + name + "' is neither a built-in format nor a constellation file");
  }
  return load_constellation(name);
}

/// "START:STOP:STEP" (STOP inclusive), a single value, or "none" for no points.
std::vector<double> parse_range(const std::string& text, const char* what) {
  if (text.empty() || text == "none") return {};
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size() || !std::isfinite(v)) {
      throw UsageError(std::string(what) + ": '" + tok + "' is not a number");
    }
    parts.push_back(v);
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw UsageError(std::string(what) + ": expected START:STOP:STEP");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0.0)) throw UsageError(std::string(what) + ": step must be positive");
  if (stop < start) throw UsageError(std::string(what) + ": stop is below start");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = start + static_cast<double>(i) * step;
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

void emit(const Global& g, const SweepResult& r) {
  const auto text = render(r, parse_output_format(g.format), !g.noTimestamp);
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
  } else {
    atomic_write(g.out, text);
  }
}

SweepResult table(const Global& g, const std::string& command, std::vector<std::string> columns) {
  SweepResult r;
  r.command = command;
  r.rngSeed = g.seed;
  r.columns = std::move(columns);
  return r;
}

// constellation -------------------------------------------------------------

struct ConstellationArgs {
  std::string name;
  bool metrics = false, sed = false, levels = false;
  double coarse = 0.0;
  std::string exportPath;
};

void cmd_constellation(const Global& g, const ConstellationArgs& a, const std::string& cmd) {
  const auto c = resolve_constellation(a.name);
  if (!a.exportPath.empty()) atomic_write(a.exportPath, to_text(c));
  const int chosen = int(a.metrics) + int(a.sed) + int(a.levels);
  if (chosen > 1) throw UsageError("choose one of --metrics, --sed-spectrum, --energy-levels");
  if (a.sed) {
    const auto s = sed_spectrum(c);
    auto r = table(g, cmd, {"sed", "total_pairs", "hd1_pairs"});
    r.metadata = {{"constellation", a.name}, {"mean_energy", std::to_string(c.mean_energy())}};
    const auto bins = a.coarse > 0.0 ? coarse_histogram(s, a.coarse) : s.bins;
    for (const auto& b : bins) {
      r.add_row({b.sed, static_cast<std::int64_t>(b.totalPairs), static_cast<std::int64_t>(b.hd1Pairs)});
    }
    emit(g, r);
  } else if (a.levels) {
    const auto p = energy_profile(c);
    auto r = table(g, cmd, {"energy", "multiplicity"});
    r.metadata = {{"constellation", a.name}};
    for (const auto& l : p.levels) r.add_row({l.energy, static_cast<std::int64_t>(l.multiplicity)});
    emit(g, r);
  } else if (a.metrics || a.exportPath.empty()) {
    const auto p = energy_profile(c);
    const auto s = sed_spectrum(c);
    auto r = table(g, cmd,
                   {"constellation", "dims", "bits", "mean_energy", "papr_db", "energy_variance", "energy_levels",
                    "min_sed", "min_sed_pairs", "orthant_symmetric"});
    r.add_row({a.name, static_cast<std::int64_t>(c.dims()), static_cast<std::int64_t>(c.bits()), p.meanEnergy,
               p.papr_dB, p.variance, static_cast<std::int64_t>(p.levels.size()), s.msed,
               static_cast<std::int64_t>(s.msedPairs), static_cast<std::int64_t>(is_orthant_symmetric(c))});
    emit(g, r);
  }
}

// gmi-sweep -----------------------------------------------------------------

struct GmiSweepArgs {
  std::vector<std::string> names;
  std::string snr = "6:14:0.5";
  std::size_t samples = 100000;
  bool maxlog = false;
};

void cmd_gmi_sweep(const Global& g, const GmiSweepArgs& a, const std::string& cmd) {
  const auto grid = parse_range(a.snr, "--snr");
  if (a.samples == 0) throw UsageError("--samples must be positive");
  const auto method = a.maxlog ? LlrMethod::maxlog : LlrMethod::exact;
  auto r = table(g, cmd,
                 {"constellation", "snr_db", "gmi_bits", "mi_bits", "gmi_stderr", "mi_stderr", "n_samples", "method"});
  for (const auto& name : a.names) {
    const auto c = resolve_constellation(name);
    for (double snr : grid) {
      const auto rep = gmi_mc(c, AwgnSpec::at_snr(snr), a.samples, g.seed, method);
      r.add_row({name, snr, rep.gmi_bits_per_sym, rep.mi_bits_per_sym, rep.gmiStdErr, rep.miStdErr,
                 static_cast<std::int64_t>(rep.nSamples), std::string(to_string(method))});
    }
  }
  emit(g, r);
}

// optimize ------------------------------------------------------------------

struct OptimizeArgs {
  std::string init;
  bool os = false, unconstrained = false, labels = false;
  OptimizerConfig config;
  std::string constellationOut;
};

void cmd_optimize(const Global& g, OptimizeArgs a, const std::string& cmd) {
  if (int(a.os) + int(a.unconstrained) + int(a.labels) != 1) {
    throw UsageError("choose exactly one of --os, --unconstrained, --labels");
  }
  a.config.rngSeed = g.seed;
  const auto c = resolve_constellation(a.init);
  const auto spec = AwgnSpec::at_snr(a.config.targetSnr_dB);
  OptimizationTrace trace;
  std::string method;
  if (a.os) {
    method = "orthant-symmetric";
    const auto ex = extract_first_orthant(c);
    const auto seed = ex.seed ? *ex.seed : first_orthant_points(c);
    if (seed.dims() != c.dims() || seed.size() << seed.dims() != c.size()) {
      throw UsageError("--os: '" + a.init + "' does not give a full first-orthant seed");
    }
    trace = optimize_os(seed, spec, a.config).trace;
  } else if (a.unconstrained) {
    method = "unconstrained";
    trace = optimize_unconstrained(c, spec, a.config).trace;
  } else {
    method = "binary-switching";
    trace = binary_switching(c, spec, a.config).trace;
  }
  auto r = table(g, cmd, {"iter", "gmi_bits", "gmi_stderr", "step", "accepted"});
  r.metadata = {{"method", method},
                {"init", a.init},
                {"snr_db", detail::format_double(a.config.targetSnr_dB)},
                {"initial_gmi_bits", detail::format_double(trace.initialGmi)},
                {"final_gmi_bits", detail::format_double(trace.finalGmi)},
                {"floor_hits", std::to_string(trace.floorHits)}};
  for (const auto& row : trace.rows) {
    r.add_row({static_cast<std::int64_t>(row.iter), row.gmi, row.gmiStdErr, row.step,
               static_cast<std::int64_t>(row.accepted)});
  }
  if (!a.constellationOut.empty()) atomic_write(a.constellationOut, to_text(trace.finalConstellation));
  emit(g, r);
}

// fiber-sweep ---------------------------------------------------------------

struct FiberSweepArgs {
  std::string config;
  std::vector<std::string> names = {"4d-os128"};
  std::string power, spans;
  std::vector<std::string> overrides;
};

LinkSetup load_setup(const FiberSweepArgs& a) {
  nlohmann::json j = nlohmann::json::object();
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw UsageError("cannot open link config '" + a.config + "'");
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("link config '" + a.config + "': " + e.what());
    }
    if (!j.is_object()) throw UsageError("link config: top level must be an object");
  }
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    try {
      j[kv.substr(0, eq)] = nlohmann::json::parse(kv.substr(eq + 1));
    } catch (const nlohmann::json::parse_error&) {
      throw UsageError("--set " + kv + ": value is not a JSON number or literal");
    }
  }
  return link_setup_from_json(j);
}

void cmd_fiber_sweep(const Global& g, const FiberSweepArgs& a, const std::string& cmd) {
  if (!a.power.empty() && !a.spans.empty()) throw UsageError("give --power or --spans, not both");
  auto base = load_setup(a);
  base.link.rngSeed = g.seed;
  std::vector<double> powers = a.power.empty() ? std::vector<double>{base.link.launchPowerPerChannel_dBm}
                                               : parse_range(a.power, "--power");
  std::vector<double> spans = a.spans.empty() ? std::vector<double>{static_cast<double>(base.link.nSpans)}
                                              : parse_range(a.spans, "--spans");
  for (double s : spans) {
    if (s < 0.0 || s != std::floor(s)) throw UsageError("--spans: span counts must be whole numbers");
  }
  auto r = table(g, cmd,
                 {"constellation", "launch_power_per_channel_dbm", "launch_power_total_dbm", "n_spans",
                  "distance_km", "effective_snr_db", "gmi_bits", "gmi_stderr"});
  std::ostringstream meta;
  meta << to_json(base);
  r.metadata = {{"link", meta.str()}};
  for (const auto& name : a.names) {
    const std::vector<LabeledConstellation> fmt{resolve_constellation(name)};
    for (double s : spans) {
      for (double p : powers) {
        auto setup = base;
        setup.link.nSpans = static_cast<std::size_t>(s);
        setup.link.launchPowerPerChannel_dBm = p;
        const auto rx = fiber::run_link(setup.link, setup.fiber, fmt);
        r.add_row({name, p, setup.link.total_launch_power_dBm(), static_cast<std::int64_t>(setup.link.nSpans),
                   s * setup.fiber.spanLength_km, rx.effectiveSnr_dB, rx.gmi, rx.gmiStdErr});
      }
    }
  }
  emit(g, r);
}

// rate-loss -----------------------------------------------------------------

struct RateLossArgs {
  std::optional<double> entropy;
  std::vector<double> distribution;
  std::vector<std::size_t> blocklengths = {32, 64, 128};
  std::optional<double> snr;
  std::size_t samples = 200000;
};

void cmd_rate_loss(const Global& g, const RateLossArgs& a, const std::string& cmd) {
  if (a.entropy.has_value() == !a.distribution.empty()) throw UsageError("give exactly one of --entropy, --distribution");
  if (a.snr && !a.entropy) throw UsageError("--snr needs --entropy (AIR is computed for PS-PM16QAM)");
  std::vector<double> probs = a.distribution;
  std::optional<ShapedConstellation> shaped;
  auto r = table(g, cmd, {"blocklength", "input_bits", "composition", "rate_loss_bits"});
  if (a.entropy) {
    // Four sign bits per 4D symbol; the rest is carried by the four amplitudes.
    const double amp = (*a.entropy - 4.0) / 4.0;
    if (!(amp > 0.0 && amp <= 1.0)) throw UsageError("--entropy must lie in (4, 8] bit/4D for PS-PM16QAM");
    shaped = ps_pm16qam(amp);
    probs = shaped->amplitudeProbabilities;
    r.metadata.emplace_back("entropy_bits_per_4d", detail::format_double(*a.entropy));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw UsageError("--distribution: probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError("--distribution: probabilities must sum to 1");
  r.metadata.emplace_back("amplitude_entropy_bits", detail::format_double(entropy_bits(probs)));
  double gmi = 0.0;
  if (a.snr) {
    const auto rep = gmi_mc(shaped->constellation, AwgnSpec::at_snr(*a.snr, shaped->probabilities), a.samples, g.seed);
    gmi = rep.gmi_bits_per_sym;
    r.columns.insert(r.columns.end(), {"gmi_bits", "gmi_stderr", "air_bits"});
    r.metadata.emplace_back("snr_db", detail::format_double(*a.snr));
    r.metadata.emplace_back("samples", std::to_string(a.samples));
    for (const auto n : a.blocklengths) {
      const auto loss = ccdm_rate_loss(probs, n);
      r.add_row({static_cast<std::int64_t>(n), static_cast<std::int64_t>(loss.inputBits), join(loss.composition),
                 loss.rateLoss, gmi, rep.gmiStdErr, air_n(gmi, 4, loss.rateLoss)});
    }
  } else {
    for (const auto n : a.blocklengths) {
      const auto loss = ccdm_rate_loss(probs, n);
      r.add_row({static_cast<std::int64_t>(n), static_cast<std::int64_t>(loss.inputBits), join(loss.composition),
                 loss.rateLoss});
    }
  }
  emit(g, r);
}

unsigned default_threads() {
  if (const char* env = std::getenv("SHAPE4D_THREADS")) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring SHAPE4D_THREADS='" << env << "'\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Four-dimensional constellation shaping toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Global g;
  g.threads = default_threads();
  app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
  app.add_option("--out", g.out, "Output file (default stdout); written atomically");
  app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_flag("--no-timestamp", g.noTimestamp, "Omit the generation timestamp");
  app.add_option("--threads", g.threads, "Worker threads, 0 = hardware (default from SHAPE4D_THREADS)")
      ->capture_default_str();

  ConstellationArgs ca;
  auto* c_cmd = app.add_subcommand("constellation", "Energy and distance metrics of a constellation");
  c_cmd->add_option("constellation", ca.name, "Built-in name or constellation file")->required();
  c_cmd->add_flag("--metrics", ca.metrics, "PAPR, energy variance, MSED and its multiplicity (default)");
  c_cmd->add_flag("--sed-spectrum", ca.sed, "Squared-distance spectrum: sed,total_pairs,hd1_pairs");
  c_cmd->add_flag("--energy-levels", ca.levels, "Distinct symbol energies: energy,multiplicity");
  c_cmd->add_option("--coarse-bins", ca.coarse, "Histogram width for --sed-spectrum (0 = exact bins)");
  c_cmd->add_option("--export", ca.exportPath, "Write the constellation file here");

  GmiSweepArgs ga;
  auto* g_cmd = app.add_subcommand("gmi-sweep", "Monte-Carlo GMI and MI over an AWGN SNR grid");
  g_cmd->add_option("constellations", ga.names, "Built-in names or constellation files")->required();
  g_cmd->add_option("--snr", ga.snr, "SNR grid START:STOP:STEP in dB (STOP inclusive), one value, or none")
      ->capture_default_str();
  g_cmd->add_option("--samples", ga.samples, "Noise samples per point")->capture_default_str();
  g_cmd->add_flag("--maxlog", ga.maxlog, "Max-log demapper instead of exact LLRs");

  OptimizeArgs oa;
  auto* o_cmd = app.add_subcommand("optimize", "GMI-driven constellation optimization; the trace goes to --out");
  o_cmd->add_option("--init", oa.init, "Starting constellation (name or file)")->required();
  o_cmd->add_flag("--os", oa.os, "Orthant-symmetric: optimize the first-orthant seed and its labels");
  o_cmd->add_flag("--unconstrained", oa.unconstrained, "Move every point, labels fixed");
  o_cmd->add_flag("--labels", oa.labels, "Binary switching of the labels only");
  o_cmd->add_option("--snr", oa.config.targetSnr_dB, "Design SNR in dB")->capture_default_str();
  o_cmd->add_option("--samples", oa.config.mcSamplesPerEval, "Samples per pass")->capture_default_str();
  o_cmd->add_option("--validation-samples", oa.config.validationSamples, "Samples for start/final comparison")
      ->capture_default_str();
  o_cmd->add_option("--iterations", oa.config.maxIterations, "Maximum passes")->capture_default_str();
  o_cmd->add_option("--step", oa.config.initialStep, "Initial step, units of sqrt(Es/N)")->capture_default_str();
  o_cmd->add_option("--step-decay", oa.config.stepDecay, "Step shrink factor")->capture_default_str();
  o_cmd->add_option("--min-step", oa.config.minStep, "Stop when the step falls below this")->capture_default_str();
  o_cmd->add_option("--tol", oa.config.convergenceTol, "Pass gain below which the step shrinks")
      ->capture_default_str();
  o_cmd->add_option("--constellation-out", oa.constellationOut, "Write the optimized constellation here");

  FiberSweepArgs fa;
  auto* f_cmd = app.add_subcommand("fiber-sweep", "Multi-span WDM simulation of the centre channel");
  f_cmd->add_option("--config", fa.config, "Link configuration JSON (absent keys keep defaults)");
  f_cmd->add_option("--constellation", fa.names, "Formats to run (all channels carry the same one)")
      ->capture_default_str();
  f_cmd->add_option("--power", fa.power, "Launch power per channel START:STOP:STEP in dBm");
  f_cmd->add_option("--spans", fa.spans, "Span counts START:STOP:STEP");
  f_cmd->add_option("--set", fa.overrides, "Override a config key, e.g. --set gamma_per_w_km=0");

  RateLossArgs ra;
  auto* r_cmd = app.add_subcommand("rate-loss", "CCDM rate loss and finite-length AIR of PS-PM16QAM");
  r_cmd->add_option("--entropy", ra.entropy, "Target entropy of PS-PM16QAM in bit/4D");
  r_cmd->add_option("--distribution", ra.distribution, "Amplitude probabilities")->delimiter(',');
  r_cmd->add_option("--blocklengths", ra.blocklengths, "CCDM output lengths")->delimiter(',')->capture_default_str();
  r_cmd->add_option("--snr", ra.snr, "Also report GMI and AIR_n at this SNR (needs --entropy)");
  r_cmd->add_option("--samples", ra.samples, "Samples for the GMI estimate")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string cmd = command_line(argc, argv);
  try {
    set_thread_count(g.threads);
    if (*c_cmd) cmd_constellation(g, ca, cmd);
    if (*g_cmd) cmd_gmi_sweep(g, ga, cmd);
    if (*o_cmd) cmd_optimize(g, oa, cmd);
    if (*f_cmd) cmd_fiber_sweep(g, fa, cmd);
    if (*r_cmd) cmd_rate_loss(g, ra, cmd);
  } catch (const ConstellationParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fiber::PropagationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
