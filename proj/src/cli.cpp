#include "sdiq/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdiq/acquisition.hpp"
#include "sdiq/certify.hpp"
#include "sdiq/digest.hpp"
#include "sdiq/extract.hpp"
#include "sdiq/oracle.hpp"
#include "sdiq/parallel.hpp"
#include "sdiq/phase_space.hpp"
#include "sdiq/tracking.hpp"
#include "sdiq/trial_io.hpp"

namespace sdiq::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

// Integer flags also accept scientific notation ("1e6").
const CLI::Validator kUnsigned(
    [](std::string& s) -> std::string {
      if (s.find_first_of("eE.") == std::string::npos) return {};
      double v = 0;
      try {
        std::size_t used = 0;
        v = std::stod(s, &used);
        if (used != s.size()) return "not a number: " + s;
      } catch (const std::exception&) {
        return "not a number: " + s;
      }
      if (!(v >= 0) || v != std::floor(v) || v > 9007199254740992.0) return "not a non-negative integer: " + s;
      s = std::to_string(static_cast<std::uint64_t>(v));
      return {};
    },
    "UINT", "scientific-integer");

// Every flag is registered here so that config files can fill the flags not
// given on the command line and manifests can record the effective values.
struct Param {
  std::string key;
  CLI::Option* opt = nullptr;
  std::function<void(const json&)> load;
  std::function<json()> save;
};

struct Command {
  CLI::App* app = nullptr;
  std::vector<Param> params;

  template <typename T>
  CLI::Option* add(const std::string& key, T& var, const std::string& desc) {
    auto* opt = app->add_option("--" + key, var, desc)->capture_default_str();
    if constexpr (std::is_integral_v<T>) opt->transform(kUnsigned);
    params.push_back({key, opt,
                      [&var](const json& j) {
                        if constexpr (std::is_floating_point_v<T>)
                          if (j.is_null()) return void(var = std::numeric_limits<T>::quiet_NaN());
                        var = j.get<T>();
                      },
                      [&var] { return json(var); }});
    return opt;
  }

  CLI::Option* flag(const std::string& key, bool& var, const std::string& desc) {
    auto* opt = app->add_flag("--" + key, var, desc);
    params.push_back({key, opt, [&var](const json& j) { var = j.get<bool>(); }, [&var] { return json(var); }});
    return opt;
  }

  void apply(const json& section) {
    if (!section.is_object()) return;
    for (auto& p : params)
      if (p.opt->count() == 0 && section.contains(p.key)) {
        try {
          p.load(section.at(p.key));
        } catch (const json::exception& e) {
          throw UsageError("config value for '" + p.key + "': " + e.what());
        }
      }
  }

  json snapshot() const {
    json j = json::object();
    for (const auto& p : params) j[p.key] = p.save();
    return j;
  }
};

struct Global {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string output_dir = ".";
  std::string config;
};

struct SimulateArgs {
  double mu = 0.2;
  double eta = 1.0;
  std::uint64_t rounds = 1'000'000;
  double rep_rate = 1.25e9;
  double drift_deg_s = 32.0;
  double diffusion = 0.0;
  double phi0 = 0.0;
  std::string out;
  std::string csv;
};

struct TrackArgs {
  std::string in;
  std::string out;
  std::uint64_t chunk_size = 1000;
  std::string chunks_csv;
  std::string counts;
  double fixed_axis = std::numeric_limits<double>::quiet_NaN();
};

struct CertifyArgs {
  std::string counts;
  double mu = 0.2;
  double epsilon = 1e-10;
  bool finite_size = false;
  double epsilon_re = 1e-10;
  double mu_inflation = 1.0;
  std::string field = "real";
  std::string out;
};

struct ExtractArgs {
  std::string in;
  std::string certificate;
  std::string seed_file;
  std::string out;
  std::uint64_t block = 0;
};

struct SweepArgs {
  double mu_min = 0.01;
  double mu_max = 0.5;
  double mu_step = 0.005;
  double eta = 0.173;
  double homodyne_eta = 1.0;
  std::vector<double> theta_deg{0, 16, 32, 45, 64, 90};
  double rep_rate = 1.25e9;
  std::string field = "real";
  std::string out;
  std::string max_out;
};

fs::path resolve(const std::string& value, const fs::path& dir, const char* default_name) {
  return value.empty() ? dir / default_name : fs::path(value);
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw FormatError("write failed: " + path.string());
}

Field parse_field(const std::string& s) {
  if (s == "real") return Field::real;
  if (s == "complex") return Field::complex;
  throw UsageError("--field must be 'real' or 'complex'");
}

struct Context {
  Global& global;
  std::ostream& out;
  fs::path dir;

  json manifest(const std::string& name, const Command& cmd, const json& outputs) const {
    json m;
    m["command"] = name;
    m["seed"] = global.seed;
    m["workers"] = global.workers;
    m["output-dir"] = global.output_dir;
    m[name] = cmd.snapshot();
    m["outputs"] = outputs;
    return m;
  }

  void write_manifest(const std::string& name, const json& m) const {
    write_text(dir / (name + ".manifest.json"), m.dump(2) + "\n");
  }
};

json counts_json(const ConditionalCounts& c) {
  const Eigen::Matrix2d p = c.probabilities();
  return {{"n_bx", {{c.n_bx(0, 0), c.n_bx(0, 1)}, {c.n_bx(1, 0), c.n_bx(1, 1)}}},
          {"p_bx", {{p(0, 0), p(0, 1)}, {p(1, 0), p(1, 1)}}}};
}

ConditionalCounts counts_from_json(const json& j) {
  ConditionalCounts c;
  try {
    const auto& n = j.at("n_bx");
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x) c.n_bx(b, x) = n.at(b).at(x).get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("counts file: ") + e.what());
  }
  if (c.n_x(0) == 0 || c.n_x(1) == 0) throw FormatError("counts file: an input value has no classified rounds");
  return c;
}

int cmd_simulate(const Context& ctx, const Command& cmd, const SimulateArgs& a) {
  RunConfig cfg;
  cfg.mu = a.mu;
  cfg.eta = a.eta;
  cfg.n_rounds = a.rounds;
  cfg.rep_rate = a.rep_rate;
  cfg.drift = {a.drift_deg_s * kDeg, a.diffusion, a.phi0};
  cfg.rng_seed = ctx.global.seed;
  cfg.workers = ctx.global.workers;
  cfg.validate();

  const auto records = simulate_run(cfg);
  const fs::path trials = resolve(a.out, ctx.dir, "trials.sdiq");
  write_trials(records, trials);
  json outputs{{"trials", {{"path", trials.string()}, {"sha256", sha256_file(trials)}}}};
  if (!a.csv.empty()) {
    write_trials_csv(records, a.csv);
    outputs["csv"] = {{"path", a.csv}, {"sha256", sha256_file(a.csv)}};
  }
  ctx.write_manifest("simulate", ctx.manifest("simulate", cmd, outputs));
  ctx.out << "simulated " << records.size() << " rounds -> " << trials.string() << "\n";
  return kOk;
}

int cmd_track(const Context& ctx, const Command& cmd, const TrackArgs& a) {
  if (a.chunk_size < 1) throw UsageError("--chunk-size must be >= 1");
  const fs::path in = resolve(a.in, ctx.dir, "trials.sdiq");
  const fs::path classified = resolve(a.out, ctx.dir, "classified.sdiq");
  const fs::path chunks = resolve(a.chunks_csv, ctx.dir, "chunks.csv");
  const fs::path counts_path = resolve(a.counts, ctx.dir, "counts.json");
  if (fs::exists(classified) && fs::exists(in) && fs::equivalent(in, classified))
    throw UsageError("track: input and output paths must differ");

  auto records = read_trials(in);
  json report;
  ConditionalCounts counts;
  if (std::isnan(a.fixed_axis)) {
    const auto r = track(records, {static_cast<std::size_t>(a.chunk_size), ctx.global.workers});
    write_chunk_csv(r.summaries, chunks);
    counts = r.counts;
    report = {{"chunks_total", r.chunks_total},
              {"chunks_unusable", r.chunks_unusable},
              {"records_excluded", r.records_excluded}};
  } else {
    classify_fixed_axis(records, a.fixed_axis);
    counts = accumulate(records);
    report = {{"fixed_axis", a.fixed_axis}};
  }
  if (counts.n_x(0) == 0 || counts.n_x(1) == 0) throw FormatError("track: no usable rounds for some input value");
  write_trials(records, classified);
  json cj = counts_json(counts);
  cj.update(report);
  write_text(counts_path, cj.dump(2) + "\n");

  json outputs{{"classified", {{"path", classified.string()}, {"sha256", sha256_file(classified)}}},
               {"counts", {{"path", counts_path.string()}, {"sha256", sha256_file(counts_path)}}}};
  if (std::isnan(a.fixed_axis)) outputs["chunks"] = {{"path", chunks.string()}, {"sha256", sha256_file(chunks)}};
  json m = ctx.manifest("track", cmd, outputs);
  m["inputs"] = {{"trials", {{"path", in.string()}, {"sha256", sha256_file(in)}}}};
  ctx.write_manifest("track", m);

  const Eigen::Matrix2d p = counts.probabilities();
  ctx.out << std::setprecision(6) << "p(0|0) = " << p(0, 0) << "  p(1|1) = " << p(1, 1) << "  over "
          << counts.total() << " rounds\n";
  return kOk;
}

int cmd_certify(const Context& ctx, const Command& cmd, const CertifyArgs& a) {
  const fs::path counts_path = resolve(a.counts, ctx.dir, "counts.json");
  const fs::path cert_path = resolve(a.out, ctx.dir, "certificate.json");
  const ProbTable pt = ProbTable::from_counts(counts_from_json(read_json(counts_path)));

  CertifyOptions opt;
  opt.epsilon = a.epsilon;
  opt.finite_size = a.finite_size;
  opt.epsilon_re = a.epsilon_re;
  opt.mu_inflation = a.mu_inflation;
  opt.field = parse_field(a.field);
  const Certificate cert = certify(pt, a.mu, opt);
  write_text(cert_path, to_json(cert) + "\n");

  json m = ctx.manifest("certify", cmd, {{"certificate", {{"path", cert_path.string()}, {"sha256", sha256_file(cert_path)}}}});
  m["inputs"] = {{"counts", {{"path", counts_path.string()}, {"sha256", sha256_file(counts_path)}}}};
  ctx.write_manifest("certify", m);
  ctx.out << std::setprecision(8) << "pg <= " << cert.pg_upper << "  hmin = " << cert.hmin_rate << " bits/round"
          << (cert.finite_size ? " (finite size)" : "") << "\n";
  return kOk;
}

int cmd_extract(const Context& ctx, Command& cmd, ExtractArgs& a) {
  const fs::path in = resolve(a.in, ctx.dir, "classified.sdiq");
  const fs::path cert_path = resolve(a.certificate, ctx.dir, "certificate.json");
  const fs::path out = resolve(a.out, ctx.dir, "extracted.bin");

  const auto records = read_trials(in);
  BitString raw;
  for (const auto& r : records)
    if (r.classified()) raw.push_back(r.b == 1);
  if (raw.size() == 0) throw FormatError("extract: no classified rounds in " + in.string());

  std::ifstream cs(cert_path);
  if (!cs) throw FormatError("cannot open " + cert_path.string());
  std::stringstream text;
  text << cs.rdbuf();
  const Certificate cert = certificate_from_json(text.str());

  std::vector<ExtractorParams> plan;
  if (a.block == 0) {
    plan.push_back(make_params(raw.size(), cert.hmin_rate, cert.epsilon_re));
  } else {
    plan = block_plan(raw.size(), a.block, cert.hmin_rate, cert.epsilon_re);
    if (plan.empty()) throw FormatError("extract: blocks too short for any output at this rate and epsilon");
  }
  const std::uint64_t seed_bits = plan_seed_bits(plan);
  BitString seed;
  if (a.seed_file.empty()) {
    seed = entropy_bits(seed_bits);
    const fs::path saved = fs::absolute(ctx.dir / "extractor_seed.bin");
    write_bits(seed, saved);
    a.seed_file = saved.string();
  } else {
    seed = read_bits(a.seed_file, seed_bits);
  }
  const BitString bits = a.block == 0 ? toeplitz_hash(raw, seed, plan.front(), ctx.global.workers)
                                      : extract_blocks(raw, seed, plan, a.block, ctx.global.workers);
  write_bits(bits, out);

  json extraction{{"n_in", raw.size()},
                  {"n_out", bits.size()},
                  {"blocks", plan.size()},
                  {"epsilon_re", cert.epsilon_re},
                  {"certificate_digest", sha256_file(cert_path)},
                  {"seed_digest", sha256_hex(seed.to_bytes())}};
  if (bits.size() >= 10000) {
    const auto s = sanity_tests(bits);
    extraction["sanity"] = {{"monobit_z", s.monobit_z}, {"monobit_p", s.monobit_p}, {"runs", s.runs},
                            {"runs_p", s.runs_p},       {"passed", s.passed()}};
    ctx.out << std::setprecision(4) << "sanity: monobit p = " << s.monobit_p << "  runs p = " << s.runs_p
            << (s.passed() ? "  (pass)" : "  (FAIL)") << "\n";
  }
  json m = ctx.manifest("extract", cmd, {{"bits", {{"path", out.string()}, {"sha256", sha256_file(out)}}}});
  m["inputs"] = {{"classified", {{"path", in.string()}, {"sha256", sha256_file(in)}}},
                 {"certificate", {{"path", cert_path.string()}, {"sha256", sha256_file(cert_path)}}}};
  m["extraction"] = extraction;
  ctx.write_manifest("extract", m);
  ctx.out << "extracted " << bits.size() << " bits from " << raw.size() << " rounds -> " << out.string() << "\n";
  return kOk;
}

// Re-throws a grid-point failure with its coordinates, keeping the error class.
template <typename Fn>
double at_point(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const InfeasibleData& e) {
    throw InfeasibleData(where + ": " + e.what());
  } catch (const AssumptionViolation& e) {
    throw AssumptionViolation(where + ": " + e.what());
  } catch (const SolverFailure& e) {
    throw SolverFailure(where + ": " + e.what());
  }
}

int cmd_sweep(const Context& ctx, const Command& cmd, const SweepArgs& a) {
  if (!(a.mu_step > 0)) throw UsageError("--mu-step must be positive");
  if (!(a.mu_min >= 0 && a.mu_min <= a.mu_max && a.mu_max <= 0.5))
    throw UsageError("mu grid must satisfy 0 <= mu-min <= mu-max <= 0.5");
  if (!(a.eta > 0 && a.eta <= 1) || !(a.homodyne_eta > 0 && a.homodyne_eta <= 1))
    throw UsageError("efficiencies must lie in (0, 1]");
  if (a.theta_deg.empty()) throw UsageError("--theta-deg needs at least one angle");
  CertifyOptions opt;
  opt.field = parse_field(a.field);

  const auto n_mu = static_cast<std::size_t>(std::floor((a.mu_max - a.mu_min) / a.mu_step + 1e-9)) + 1;
  const std::size_t n_theta = a.theta_deg.size();
  const std::size_t cols = 2 + n_theta;
  std::vector<double> mu(n_mu), table(n_mu * cols);
  for (std::size_t i = 0; i < n_mu; ++i) mu[i] = std::min(a.mu_max, a.mu_min + static_cast<double>(i) * a.mu_step);

  parallel_for(n_mu * cols, ctx.global.workers, [&](std::size_t k) {
    const std::size_t i = k / cols, c = k % cols;
    std::ostringstream where;
    where << "mu = " << mu[i];
    ProbTable pt;
    if (c == 0) {
      where << " (ideal heterodyne)";
      pt = ProbTable::from_matrix(prob_heterodyne(std::sqrt(mu[i])));
    } else if (c == 1) {
      where << " (heterodyne, eta = " << a.eta << ")";
      pt = ProbTable::from_matrix(prob_heterodyne(std::sqrt(a.eta * mu[i])));
    } else {
      where << " (homodyne, theta = " << a.theta_deg[c - 2] << " deg)";
      pt = ProbTable::from_matrix(prob_homodyne(std::sqrt(a.homodyne_eta * mu[i]), a.theta_deg[c - 2] * kDeg));
    }
    table[k] = at_point(where.str(), [&] { return hmin_rate(pt, mu[i], opt); });
  });

  const fs::path out = resolve(a.out, ctx.dir, "sweep.csv");
  const fs::path max_out = resolve(a.max_out, ctx.dir, "sweep_max.csv");
  std::ostringstream csv;
  csv << std::setprecision(12) << "mu,hmin_ideal,hmin_eta";
  for (double t : a.theta_deg) csv << ",hmin_homodyne_" << t << "deg";
  csv << "\n";
  for (std::size_t i = 0; i < n_mu; ++i) {
    csv << mu[i];
    for (std::size_t c = 0; c < cols; ++c) csv << "," << table[i * cols + c];
    csv << "\n";
  }
  write_text(out, csv.str());

  std::ostringstream mx;
  mx << std::setprecision(12) << "curve,theta_deg,hmin_max,mu_at_max,rate_mbps\n";
  for (std::size_t c = 0; c < cols; ++c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n_mu; ++i)
      if (table[i * cols + c] > table[best * cols + c]) best = i;
    const double h = table[best * cols + c];
    const char* curve = c == 0 ? "ideal" : c == 1 ? "eta" : "homodyne";
    mx << curve << ",";
    if (c >= 2) mx << a.theta_deg[c - 2];
    mx << "," << h << "," << mu[best] << "," << h * a.rep_rate / 1e6 << "\n";
    if (c < 2)
      ctx.out << std::setprecision(5) << curve << ": max hmin = " << h << " bits at mu = " << mu[best] << " ("
              << h * a.rep_rate / 1e6 << " Mbps)\n";
  }
  write_text(max_out, mx.str());
  ctx.write_manifest("sweep", ctx.manifest("sweep", cmd,
                                           {{"table", {{"path", out.string()}, {"sha256", sha256_file(out)}}},
                                            {"max", {{"path", max_out.string()}, {"sha256", sha256_file(max_out)}}}}));
  return kOk;
}

int cmd_selftest(const Context& ctx) {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok, const std::string& detail = {}) {
    ctx.out << (ok ? "ok    " : "FAIL  ") << name << (detail.empty() ? "" : "  " + detail) << "\n";
    failures += ok ? 0 : 1;
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
  };

  check("erf(1)", std::abs(std::erf(1.0) - 0.8427007929497149) <= 1e-12);

  const ExtractorParams small{3, 2, 1e-10};
  const auto worked = toeplitz_hash(BitString::from_string("110"), BitString::from_string("1011"), small);
  check("toeplitz 3x2 example", worked == BitString::from_string("10"));

  const ExtractorParams mid{300, 70, 1e-10};
  const auto raw = seeded_bits(mid.n_in, ctx.global.seed);
  const auto seed = seeded_bits(mid.seed_bits(), ctx.global.seed + 1);
  check("toeplitz packed == naive", toeplitz_hash(raw, seed, mid) == toeplitz_hash_naive(raw, seed, mid));

  const auto pt = ProbTable::from_matrix(prob_heterodyne(std::sqrt(0.2)));
  const auto cert = certify(pt, 0.2);
  check("ideal bound at mu = 0.2", std::abs(cert.pg_upper - 0.9408861571082039) <= 1e-6, num(cert.pg_upper));
  const auto oracle = oracle_pg(pt, OverlapConstraint::from_mu(0.2));
  check("oracle <= dual", oracle && *oracle <= cert.pg_upper + 1e-6, oracle ? num(*oracle) : "no strategy");
  check("confidence half width", std::abs(confidence_halfwidth(1e-10, 1e6) - 4.0755e-3) <= 1e-7);

  RunConfig cfg;
  cfg.mu = 1.0;
  cfg.n_rounds = 20000;
  cfg.drift.rate = kReferenceDriftRate;
  cfg.rng_seed = ctx.global.seed;
  auto records = simulate_run(cfg);
  const fs::path tmp = ctx.dir / "selftest_trials.sdiq";
  write_trials(records, tmp);
  check("trial file round trip", read_trials(tmp) == records);
  fs::remove(tmp);
  const auto report = track(records);
  const double p00 = report.counts.probabilities()(0, 0);
  const double expected = 0.5 * (1.0 + std::erf(1.0));
  const double se = std::sqrt(expected * (1 - expected) / static_cast<double>(report.counts.n_x(0)));
  check("tracked p(0|0) at mu = 1", std::abs(p00 - expected) <= 5 * se, num(p00));

  ctx.out << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? kOk : kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-device-independent heterodyne QRNG simulator", "sdiqrng"};
  app.require_subcommand(1);
  app.fallthrough();

  Global global;
  Command root{&app, {}};
  root.add("seed", global.seed, "Run seed");
  root.add("workers", global.workers, "Worker threads (0 = all cores)");
  root.add("output-dir", global.output_dir, "Directory for outputs and manifests");
  app.add_option("--config", global.config, "JSON config or manifest; flags take precedence");

  SimulateArgs sim;
  Command simulate{app.add_subcommand("simulate", "Simulate a trial stream"), {}};
  simulate.add("mu", sim.mu, "Mean photon number");
  simulate.add("eta", sim.eta, "Detector efficiency");
  simulate.add("rounds", sim.rounds, "Number of rounds");
  simulate.add("rep-rate", sim.rep_rate, "Rounds per second");
  simulate.add("drift-deg-s", sim.drift_deg_s, "Linear phase drift (deg/s)");
  simulate.add("diffusion", sim.diffusion, "Phase diffusion (rad/sqrt(s))");
  simulate.add("phi0", sim.phi0, "Initial phase (rad)");
  simulate.add("out", sim.out, "Trial file (default <output-dir>/trials.sdiq)");
  simulate.add("csv", sim.csv, "Optional CSV export");

  TrackArgs trk;
  Command tracking{app.add_subcommand("track", "Track phase, classify and count"), {}};
  tracking.add("in", trk.in, "Trial file (default <output-dir>/trials.sdiq)");
  tracking.add("out", trk.out, "Classified trial file (default <output-dir>/classified.sdiq)");
  tracking.add("chunk-size", trk.chunk_size, "Rounds per chunk");
  tracking.add("chunks-csv", trk.chunks_csv, "Chunk summary CSV (default <output-dir>/chunks.csv)");
  tracking.add("counts", trk.counts, "Counts JSON (default <output-dir>/counts.json)");
  tracking.add("fixed-axis", trk.fixed_axis, "Classify by the sign of a fixed quadrature axis (rad), no tracking");

  CertifyArgs crt;
  Command certifying{app.add_subcommand("certify", "Bound the guessing probability"), {}};
  certifying.add("counts", crt.counts, "Counts JSON (default <output-dir>/counts.json)");
  certifying.add("mu", crt.mu, "Declared energy bound");
  certifying.add("epsilon", crt.epsilon, "Confidence parameter of the estimates");
  certifying.flag("finite-size", crt.finite_size, "Apply the finite-size correction");
  certifying.add("epsilon-re", crt.epsilon_re, "Extractor security parameter");
  certifying.add("mu-inflation", crt.mu_inflation, "Factor >= 1 applied to mu");
  certifying.add("field", crt.field, "real or complex");
  certifying.add("out", crt.out, "Certificate (default <output-dir>/certificate.json)");

  ExtractArgs ext;
  Command extracting{app.add_subcommand("extract", "Toeplitz-hash the outcomes"), {}};
  extracting.add("in", ext.in, "Classified trial file (default <output-dir>/classified.sdiq)");
  extracting.add("certificate", ext.certificate, "Certificate (default <output-dir>/certificate.json)");
  extracting.add("seed-file", ext.seed_file, "Packed seed bits; drawn from the platform entropy source if absent");
  extracting.add("out", ext.out, "Output bits (default <output-dir>/extracted.bin)");
  extracting.add("block", ext.block, "Hash consecutive blocks of this many rounds (0 = one matrix)");

  SweepArgs swp;
  Command sweeping{app.add_subcommand("sweep", "Min-entropy versus mu"), {}};
  sweeping.add("mu-min", swp.mu_min, "Smallest mu");
  sweeping.add("mu-max", swp.mu_max, "Largest mu");
  sweeping.add("mu-step", swp.mu_step, "Grid step");
  sweeping.add("eta", swp.eta, "Efficiency of the lossy heterodyne column");
  sweeping.add("homodyne-eta", swp.homodyne_eta, "Efficiency of the homodyne columns");
  sweeping.add("theta-deg", swp.theta_deg, "Homodyne angles (deg)")->delimiter(',');
  sweeping.add("rep-rate", swp.rep_rate, "Rounds per second for the rate column");
  sweeping.add("field", swp.field, "real or complex");
  sweeping.add("out", swp.out, "Table CSV (default <output-dir>/sweep.csv)");
  sweeping.add("max-out", swp.max_out, "Max-over-mu CSV (default <output-dir>/sweep_max.csv)");

  Command selftest{app.add_subcommand("selftest", "Quick internal consistency checks"), {}};

  std::vector<std::string> argv_store{"sdiqrng"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kOk : kUsage;
    }

    std::vector<std::pair<std::string, Command*>> commands{{"simulate", &simulate}, {"track", &tracking},
                                                           {"certify", &certifying}, {"extract", &extracting},
                                                           {"sweep", &sweeping},     {"selftest", &selftest}};
    if (!global.config.empty()) {
      const json cfg = read_json(global.config);
      if (!cfg.is_object()) throw FormatError("config must be a JSON object");
      root.apply(cfg);
      for (auto& [name, cmd] : commands)
        if (cfg.contains(name)) cmd->apply(cfg.at(name));
    }

    const fs::path dir = global.output_dir;
    fs::create_directories(dir);
    const Context ctx{global, out, dir};

    if (app.got_subcommand("simulate")) return cmd_simulate(ctx, simulate, sim);
    if (app.got_subcommand("track")) return cmd_track(ctx, tracking, trk);
    if (app.got_subcommand("certify")) return cmd_certify(ctx, certifying, crt);
    if (app.got_subcommand("extract")) return cmd_extract(ctx, extracting, ext);
    if (app.got_subcommand("sweep")) return cmd_sweep(ctx, sweeping, swp);
    return cmd_selftest(ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const AssumptionViolation& e) {
    err << "assumption violated: " << e.what() << "\n";
    return kAssumption;
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sdiq::cli
