#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "certikit/adversary.hpp"
#include "certikit/certify.hpp"
#include "certikit/config.hpp"
#include "certikit/io.hpp"
#include "certikit/sampling.hpp"
#include "certikit/stars.hpp"

namespace certikit::cli {

inline constexpr const char* kVersion = "1.0.0";

using json = nlohmann::ordered_json;

/// singletons:N, halfspaces:D (or halfspace:d=D), affine:D (or
/// affine-halfspace:d=D), prop53:D:K, finite:PATH. Numeric arguments may
/// carry a "name=" prefix.
inline HypothesisFamily parse_family(const std::string& spec) {
  const auto parts = io::split(spec, ':');
  const auto& kind = parts[0];
  auto arg = [&](std::size_t i) {
    if (i >= parts.size()) throw InputError("class spec '" + spec + "' is missing an argument");
    std::string a = parts[i];
    if (const auto eq = a.find('='); eq != std::string::npos) a = a.substr(eq + 1);
    return io::parse_uint(a);
  };
  if (kind == "singletons") return Singletons(arg(1));
  if (kind == "halfspaces" || kind == "halfspace") return Halfspaces::homogeneous(arg(1));
  if (kind == "affine" || kind == "affine-halfspace") return Halfspaces::affine(arg(1));
  if (kind == "prop53") return prop53_family(arg(1), arg(2));
  if (kind == "finite") {
    if (parts.size() < 2) throw InputError("class spec 'finite' needs a file path");
    return io::read_finite_family(spec.substr(spec.find(':') + 1));
  }
  throw InputError("unknown class spec '" + spec + "'");
}

inline bool expects_vectors(const HypothesisFamily& f) { return std::holds_alternative<Halfspaces>(f); }

inline Hypothesis parse_target(const HypothesisFamily& family, const std::string& text) {
  Hypothesis h;
  if (expects_vectors(family)) {
    std::vector<double> w;
    for (const auto& p : io::split(text, ',')) w.push_back(io::parse_double(p));
    h = std::move(w);
  } else {
    h = static_cast<std::size_t>(io::parse_uint(text));
  }
  validate_hypothesis(family, h);
  return h;
}

inline Distribution parse_distribution(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw InputError("distribution spec needs a kind prefix: '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "uniform") {
    std::vector<Point> pts;
    for (const auto& p : io::split(rest, ',')) pts.push_back(Point::discrete(io::parse_uint(p)));
    return Distribution::uniform_over(std::move(pts));
  }
  if (kind == "table") {
    std::vector<Point> pts;
    std::vector<double> pr;
    for (const auto& e : io::split(rest, ',')) {
      const auto kv = io::split(e, '=');
      if (kv.size() != 2) throw InputError("table entry must be ID=P, got '" + e + "'");
      pts.push_back(Point::discrete(io::parse_uint(kv[0])));
      pr.push_back(io::parse_double(kv[1]));
    }
    return Distribution::finite_support(std::move(pts), std::move(pr));
  }
  if (kind == "ball") {
    const auto c2 = rest.find(':');
    if (c2 == std::string::npos) throw InputError("ball spec is ball:R:C1,...,Cd");
    std::vector<double> center;
    for (const auto& p : io::split(rest.substr(c2 + 1), ',')) center.push_back(io::parse_double(p));
    return Distribution::uniform_ball(std::move(center), io::parse_double(rest.substr(0, c2)));
  }
  throw InputError("unknown distribution kind '" + kind + "'");
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& p : io::split(text, ',')) out.push_back(static_cast<std::size_t>(io::parse_uint(p)));
  return out;
}

struct Context {
  const Config& cfg;
  std::filesystem::path dir;
  std::ostream& out;
  OracleOptions oracle;
  unsigned threads = 1;
};

inline Point test_point(const Context& c, const HypothesisFamily& f) {
  return io::parse_point(c.cfg.str("test"), expects_vectors(f));
}

inline Hypothesis target_of(const Context& c, const HypothesisFamily& f) {
  if (!c.cfg.has("target") && c.cfg.str("class").rfind("prop53", 0) == 0) {
    const auto& fam = std::get<FiniteFamily>(f);
    return fam.hypothesis_count() - 1;
  }
  return parse_target(f, c.cfg.str("target"));
}

inline void cmd_star(Context& c) {
  const auto family = parse_family(c.cfg.str("class"));
  const auto b = c.cfg.uint("b");
  StarSearchOptions opt;
  opt.multiplicity_cap = c.cfg.uint("multiplicity_cap");
  opt.size_cap = c.cfg.uint("star_size_cap");
  opt.guard = c.cfg.uint("star_guard");
  const auto s = robust_star_number(family, b, opt);
  json j;
  j["b"] = b;
  j["s_b"] = s.value;
  j["complete"] = s.complete;
  j["heavy_index"] = s.witness.heavy_index;
  auto& el = j["witness"] = json::array();
  for (const auto& e : s.witness.elements) el.push_back({{"point", io::point_json(e.point)}, {"label", to_int(e.label)}});
  write_json(c.dir / "star.json", j);
  c.out << "s_b: " << s.value << (s.complete ? "" : " (lower bound, search guard reached)") << "\n";
}

inline void cmd_certify(Context& c) {
  const auto family = parse_family(c.cfg.str("class"));
  const auto b = c.cfg.uint("b");
  const Label label = io::parse_label(c.cfg.str("label"));
  const Point test = test_point(c, family);
  const std::string method = c.cfg.str("method");
  Certificate cert;
  json extra;
  if (method == "greedy") {
    const auto order = c.cfg.str("order");
    if (order != "descending" && order != "ascending") throw InputError("order must be descending or ascending");
    cert = minimal_certificate(family, io::read_dataset(c.cfg.str("data")), b, test, label, c.oracle,
                               order == "descending" ? DeletionOrder::descending : DeletionOrder::ascending);
  } else if (method == "exact") {
    cert = minimum_certificate(family, io::read_dataset(c.cfg.str("data")), b, test, label, c.cfg.uint("size_cap"),
                               c.oracle);
  } else if (method == "caratheodory") {
    const auto* hs = std::get_if<Halfspaces>(&family);
    if (!hs) throw InputError("caratheodory method needs a halfspace class");
    if (b != 0) throw InputError("caratheodory method needs b = 0");
    cert = caratheodory_certificate(*hs, io::read_dataset(c.cfg.str("data")), test, label, c.oracle);
  } else if (method == "chunked") {
    const auto dist = parse_distribution(c.cfg.str("dist"));
    const auto target = target_of(c, family);
    Rng rng(derive_seed(c.cfg.uint("seed"), 0));
    ExampleStream stream = [&] {
      Point p = dist.sample(rng);
      const Label y = predict(family, target, p);
      return LabeledExample{std::move(p), y};
    };
    ChunkOptions copt;
    copt.chunk_size = c.cfg.uint("chunk_size");
    copt.chunks_needed = c.cfg.uint("chunks_needed");
    copt.max_chunks = c.cfg.uint("max_chunks");
    auto res = chunked_certificate(family, stream, b, test, label, copt, c.oracle);
    extra["chunk_size"] = res.chunk_size;
    extra["chunks_scanned"] = res.chunks_scanned;
    extra["retained_chunks"] = res.retained_chunks;
    cert = std::move(res.certificate);
  } else {
    throw InputError("unknown certify method '" + method + "'");
  }
  auto j = io::certificate_json(cert);
  j["method"] = method;
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_json(c.dir / "certificate.json", j);
  c.out << "certificate size: " << cert.size() << (cert.minimal ? " (minimal)" : "") << "\nindices:";
  for (auto i : cert.indices) c.out << ' ' << i;
  c.out << "\n";
}

inline void cmd_agree(Context& c) {
  const auto family = parse_family(c.cfg.str("class"));
  const auto b = c.cfg.uint("b");
  const auto data = io::read_dataset(c.cfg.str("data"));
  const Point test = test_point(c, family);
  const Label label = io::parse_label(c.cfg.str("label"));
  const bool realizable = is_robustly_realizable(family, data, b, c.oracle).realizable;
  const auto h = agreement_counterexample(family, data, b, test, label, c.oracle);
  json j;
  j["b"] = b;
  j["realizable"] = realizable;
  j["in_agreement"] = !h.has_value();
  if (h) {
    if (const auto* id = std::get_if<std::size_t>(&*h)) j["counterexample"] = *id;
    else j["counterexample"] = std::get<std::vector<double>>(*h);
  }
  write_json(c.dir / "agree.json", j);
  c.out << "realizable: " << (realizable ? "yes" : "no") << "\nin agreement region: " << (h ? "no" : "yes") << "\n";
}

inline void cmd_coeff(Context& c) {
  const auto family = parse_family(c.cfg.str("class"));
  const auto dist = parse_distribution(c.cfg.str("dist"));
  const auto target = target_of(c, family);
  const Point test = test_point(c, family);
  json j;
  if (const auto* hs = std::get_if<Halfspaces>(&family)) {
    const auto est = certificate_coefficient_mc(*hs, dist, std::get<std::vector<double>>(target), test,
                                                c.cfg.uint("mc_samples"), c.cfg.uint("seed"));
    j["eps"] = est.estimate;
    j["half_width"] = est.half_width;
    j["method"] = "monte-carlo";
    c.out << "eps_x: " << io::format_double(est.estimate) << " +- " << io::format_double(est.half_width) << "\n";
  } else {
    const double eps = certificate_coefficient(family, dist, target, test);
    if (std::isinf(eps)) j["eps"] = "inf";
    else j["eps"] = eps;
    j["method"] = "exact";
    c.out << "eps_x: " << (std::isinf(eps) ? std::string("inf") : io::format_double(eps)) << "\n";
  }
  write_json(c.dir / "coeff.json", j);
}

inline void cmd_curve(Context& c) {
  const auto family = parse_family(c.cfg.str("class"));
  const auto dist = parse_distribution(c.cfg.str("dist"));
  const auto target = target_of(c, family);
  const Point test = test_point(c, family);
  const auto b = c.cfg.uint("b");
  std::vector<std::size_t> grid;
  if (c.cfg.has("eps")) {
    grid.push_back(sample_size_bound(b, vc_dimension(family), c.cfg.real("eps"), c.cfg.real("delta"), c.cfg.real("C")));
  } else {
    grid = parse_list(c.cfg.str("m_grid"));
  }
  CurveOptions copt;
  copt.oracle = c.oracle;
  copt.threads = c.threads;
  const auto curve = agreement_probability_curve(family, dist, target, test, b, grid, c.cfg.uint("trials"),
                                                 c.cfg.uint("seed"), copt);
  std::string csv = "m,prob,ci_low,ci_high\n";
  json j;
  j["b"] = b;
  auto& pts = j["points"] = json::array();
  for (const auto& p : curve.points) {
    csv += std::to_string(p.m) + "," + io::format_double(p.prob) + "," + io::format_double(p.ci.low) + "," +
           io::format_double(p.ci.high) + "\n";
    pts.push_back({{"m", p.m}, {"trials", p.trials}, {"successes", p.successes}, {"capacity", p.capacity}});
    c.out << "m=" << p.m << " prob=" << io::format_double(p.prob) << (p.capacity ? " (capacity hits)" : "") << "\n";
  }
  write_text(c.dir / "curve.csv", csv);
  write_json(c.dir / "curve.json", j);
}

inline void cmd_tightness(Context& c) {
  const std::string t = c.cfg.str("term");
  TightnessTerm term;
  if (t == "b") term = TightnessTerm::b;
  else if (t == "dlog") term = TightnessTerm::dlog;
  else if (t == "delta") term = TightnessTerm::delta;
  else throw InputError("term must be b, dlog or delta");
  TightnessParams p;
  p.b = c.cfg.has("b") ? c.cfg.uint("b") : p.b;
  p.n = c.cfg.uint("n");
  p.d = c.cfg.has("d") ? c.cfg.uint("d") : 2;
  p.k = c.cfg.uint("k");
  p.delta = c.cfg.real("delta");
  if (c.cfg.has("m_grid")) p.m_values = parse_list(c.cfg.str("m_grid"));
  p.threads = c.threads;
  const auto rep = tightness_experiments(term, p, c.cfg.uint("trials"), c.cfg.uint("seed"), c.oracle);
  std::string csv = "m,trials,failures,failure_freq,event_freq,event_prob,event_ci_low,event_ci_high\n";
  for (const auto& r : rep.rows) {
    csv += std::to_string(r.m) + "," + std::to_string(r.trials) + "," + std::to_string(r.failures) + "," +
           io::format_double(r.failure_freq) + "," + io::format_double(r.event_freq) + "," +
           io::format_double(r.event_prob) + "," + io::format_double(r.event_ci.low) + "," +
           io::format_double(r.event_ci.high) + "\n";
    c.out << "m=" << r.m << " failure=" << io::format_double(r.failure_freq)
          << " event=" << io::format_double(r.event_freq) << " exact=" << io::format_double(r.event_prob) << "\n";
  }
  write_text(c.dir / "tightness.csv", csv);
  json j;
  j["term"] = t;
  j["eps"] = rep.eps;
  j["delta"] = p.delta;
  write_json(c.dir / "tightness.json", j);
}

inline void cmd_reweight(Context& c) {
  const std::size_t d = c.cfg.has("d") ? c.cfg.uint("d") : 6;
  if (d < 1) throw InputError("d must be >= 1");
  const auto b = c.cfg.uint("b");
  const double delta = c.cfg.real("delta");
  const Halfspaces family = Halfspaces::affine(d);
  std::vector<double> target(d + 1, 0.0);
  target[d] = 1;
  std::vector<double> t(d, 0.0);
  t[0] = 0.5;
  const Point test = Point::vector(t);
  const auto dist = Distribution::uniform_ball(std::vector<double>(d, 0.0), 1.0);
  const auto scheme = ReweightingScheme::ball_indicator(t, c.cfg.real("radius"));
  ReweightOptions ro;
  ro.C = c.cfg.real("reweight_C");
  ro.safety = c.cfg.real("safety");
  ro.mc_samples = c.cfg.uint("mc_samples");
  ro.attempt_cap = c.cfg.uint("attempt_cap");
  ro.shrink = c.cfg.flag("shrink");
  ro.oracle = c.oracle;
  const auto seed = c.cfg.uint("seed");
  const auto res = reweighted_certificate(family, dist, scheme, target, b, test, delta, seed, ro);
  const auto direct = certificate_coefficient_mc(family, dist, target, test, ro.mc_samples, derive_seed(seed, 9));
  json j;
  j["d"] = d;
  j["b"] = b;
  j["normalizer"] = res.normalizer;
  j["eps_direct_estimate"] = direct.estimate;
  j["eps_w_estimate"] = res.eps_w_estimate;
  j["eps_w_used"] = res.eps_w;
  j["m_w"] = res.m_w;
  j["raw_draws"] = res.raw_draws;
  j["draws_per_accept"] = static_cast<double>(res.raw_draws) / static_cast<double>(std::max<std::uint64_t>(res.m_w, 1));
  j["in_agreement"] = res.in_agreement;
  j["certificate_size"] = res.certificate ? res.certificate->size() : 0;
  write_json(c.dir / "reweight.json", j);
  if (res.certificate) write_json(c.dir / "certificate.json", io::certificate_json(*res.certificate));
  c.out << "eps_x(D) ~ " << io::format_double(direct.estimate) << "\neps_x(D_w) ~ " << io::format_double(res.eps_w_estimate)
        << "\naccepted: " << res.m_w << "\nraw draws: " << res.raw_draws << "\n";
  if (!res.in_agreement) throw NotCertifiableError("reweighted sample does not certify the test point (trial failure)");
  c.out << "certificate size: " << res.certificate->size() << "\n";
}

inline void cmd_attack(Context& c) {
  const auto family = parse_family(c.cfg.str("class"));
  const auto data = io::read_dataset(c.cfg.str("data"));
  const auto b = c.cfg.uint("b");
  const auto mode = c.cfg.str("mode");
  json j;
  j["mode"] = mode;
  j["b"] = b;
  Corruption corr;
  if (mode == "random") {
    corr = corrupt_random(data, b, c.cfg.uint("seed"));
  } else if (mode == "worst") {
    WorstCaseOptions w;
    w.guard = c.cfg.uint("flip_guard");
    w.oracle = c.oracle;
    const auto wc = corrupt_worst_case(family, data, b, test_point(c, family), io::parse_label(c.cfg.str("label")), w);
    j["success"] = wc.success;
    j["score"] = wc.score;
    j["flip_sets_examined"] = wc.flip_sets_examined;
    corr = wc.corruption;
    c.out << "attack " << (wc.success ? "succeeded" : "failed") << "\n";
  } else {
    throw InputError("attack mode must be random or worst");
  }
  j["flipped"] = corr.flipped;
  std::ostringstream csv;
  io::write_dataset(csv, corr.data);
  write_text(c.dir / "corrupted.csv", csv.str());
  write_json(c.dir / "attack.json", j);
  c.out << "flipped:";
  for (auto i : corr.flipped) c.out << ' ' << i;
  c.out << "\n";
}

inline void cmd_conic(Context& c) {
  const auto data = io::read_dataset(c.cfg.str("data"));
  const Label label = io::parse_label(c.cfg.str("label"));
  ConicInstance inst;
  for (const auto& e : data.examples()) {
    Vec z(e.point.coords().begin(), e.point.coords().end());
    if (e.label == Label::negative) for (double& v : z) v = -v;
    inst.generators.push_back(std::move(z));
  }
  const Point test = io::parse_point(c.cfg.str("test"), true);
  inst.target.assign(test.coords().begin(), test.coords().end());
  if (label == Label::negative) for (double& v : inst.target) v = -v;
  const double tol = c.oracle.tol;
  auto sol = conic_membership(inst, tol);
  if (sol.feasible) sol = caratheodory_reduce(inst, sol.coefficients, tol);
  json j;
  j["feasible"] = sol.feasible;
  j["coefficients"] = sol.coefficients;
  j["support"] = sol.support;
  j["separator"] = sol.separator;
  j["residual"] = sol.residual;
  write_json(c.dir / "conic.json", j);
  if (c.cfg.flag("dump")) c.out << j.dump(2) << "\n";
  c.out << "in cone: " << (sol.feasible ? "yes" : "no") << "\n";
  if (sol.feasible) {
    c.out << "support:";
    for (auto i : sol.support) c.out << ' ' << i;
    c.out << "\n";
  }
}

/// Runs the configured command, writing artifacts and a manifest into
/// output_dir. Returns the process exit code.
inline int execute(const Config& cfg, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  std::filesystem::path dir;
  std::string command;
  try {
    command = cfg.str("command");
    dir = cfg.str("output_dir");
    std::filesystem::create_directories(dir);
    OracleOptions oracle;
    oracle.deletion_guard = cfg.uint("deletion_guard");
    oracle.tol = cfg.real("tol");
    Context c{cfg, dir, out, oracle, thread_count(static_cast<unsigned>(cfg.uint("threads")))};
    if (command == "star") cmd_star(c);
    else if (command == "certify") cmd_certify(c);
    else if (command == "agree") cmd_agree(c);
    else if (command == "coeff") cmd_coeff(c);
    else if (command == "curve") cmd_curve(c);
    else if (command == "tightness") cmd_tightness(c);
    else if (command == "reweight-demo") cmd_reweight(c);
    else if (command == "attack") cmd_attack(c);
    else if (command == "conic") cmd_conic(c);
    else throw InputError("unknown command '" + command + "'");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    code = static_cast<int>(e.exit_code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    code = static_cast<int>(ExitCode::config_error);
  }
  if (!dir.empty() && std::filesystem::is_directory(dir)) {
    json m;
    m["command"] = command;
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(cfg.canonical());
    m["config_hash"] = hash.str();
    m["seed"] = cfg.raw("seed").value_or("");
    m["version"] = kVersion;
    m["exit_code"] = code;
    m["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
    m["config"] = cfg.values();
    try {
      write_json(dir / "manifest.json", m);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
    }
  }
  return code;
}

/// Command-line entry point. Every config key is also a flag (underscores
/// become dashes); flags override values from --config.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"certikit: robust certificates for test-time predictions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  const char* commands[] = {"certify", "agree", "star", "coeff", "curve", "tightness", "reweight-demo", "attack", "conic"};
  const auto& keys = config_keys();
  std::vector<std::vector<std::string>> values(std::size(commands), std::vector<std::string>(keys.size()));
  std::vector<std::string> config_files(std::size(commands));
  std::vector<CLI::App*> subs;
  for (std::size_t s = 0; s < std::size(commands); ++s) {
    auto* sub = app.add_subcommand(commands[s]);
    sub->add_option("--config", config_files[s], "key = value config file");
    for (std::size_t k = 0; k < keys.size(); ++k) {
      std::string name = keys[k].name;
      if (name == "command") continue;
      std::replace(name.begin(), name.end(), '_', '-');
      std::string help = keys[k].help;
      if (*keys[k].fallback) help += " (default " + std::string(keys[k].fallback) + ")";
      sub->add_option("--" + name, values[s][k], help);
    }
    subs.push_back(sub);
  }
  std::string run_file;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", run_file, "key = value config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config_error);
  }

  try {
    if (run->parsed()) return execute(Config::load(run_file), out, err);
    for (std::size_t s = 0; s < subs.size(); ++s) {
      if (!subs[s]->parsed()) continue;
      Config cfg = config_files[s].empty() ? Config{} : Config::load(config_files[s]);
      cfg.set("command", commands[s]);
      for (std::size_t k = 0; k < keys.size(); ++k) {
        std::string name = keys[k].name;
        std::replace(name.begin(), name.end(), '_', '-');
        if (name != "command" && subs[s]->count("--" + name) > 0) cfg.set(keys[k].name, values[s][k]);
      }
      return execute(cfg, out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  }
  return static_cast<int>(ExitCode::config_error);
}

}  // namespace certikit::cli
