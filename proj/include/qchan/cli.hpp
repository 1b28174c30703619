#pragma once

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qchan/io.hpp"
#include "qchan/random.hpp"

namespace qchan::cli {

using io::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitUsage = 64;

inline const std::vector<std::string> kCommands{"construct", "verify-causal", "extract", "classify", "bell", "demo"};
inline const std::vector<std::string> kDemos{"pr-box", "singlet", "pq-steering-pr", "pq-steering-alpha", "ghjw", "buscemi-bell",
                                              "teleportation"};

inline std::string usage() {
  return "usage: qchan [--tol X] [--max-iter N] [--json] <command> ...\n"
         "commands:\n"
         "  construct <name> [--alpha X] [--compiled] [-o file]\n"
         "  verify-causal <file>\n"
         "  extract {correlations|assemblage|measurement|teleportage} <file> [--trusted-input k] [-o file]\n"
         "  classify {lhv|lhs|almost-quantum|witness} <file>\n"
         "  bell chsh <file> [--outcome-map 0,0,1,1]\n"
         "  demo {pr-box|singlet|pq-steering-pr|pq-steering-alpha|ghjw|buscemi-bell|teleportation} [--alpha X]\n";
}

struct Settings {
  double tol = kCausalTol;
  std::size_t max_iter = 20000;
  bool json_out = false;
  std::ostream* out = &std::cout;

  SolverOptions solver() const {
    SolverOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return o;
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_output(const Settings& s, const std::string& path, const std::string& text) {
  if (path.empty()) {
    *s.out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << text;
}

inline std::string fmt(double v, int prec = 9) {
  std::ostringstream ss;
  ss << std::setprecision(prec) << v;
  return ss.str();
}

// Emits either JSON or "name: value" lines.
inline void emit(const Settings& s, const std::string& kind, const json& payload, const std::string& text) {
  if (s.json_out)
    *s.out << io::serialize(io::document(kind, payload));
  else
    *s.out << text;
}

// ---------------------------------------------------------------------------
// Object loading

inline std::optional<ComplexMatrix> trusted_state(long k, const Channel& ch) {
  if (k < 0) return std::nullopt;
  const auto parties = ch.parties();
  require(!parties.empty() && parties.back().trusted, "--trusted-input given but the channel has no trusted party");
  require(std::size_t(k) < parties.back().d_in, "--trusted-input out of range");
  return basis_projector(parties.back().d_in, std::size_t(k));
}

inline Correlation load_correlation(const io::Document& doc) {
  if (doc.kind == "correlation") return io::correlation_from_json(doc.payload);
  if (doc.kind == "assemblage") return trace_assemblage(io::assemblage_from_json(doc.payload));
  return correlations_from_channel(io::channel_from_document(doc));
}

inline Assemblage load_assemblage(const io::Document& doc) {
  if (doc.kind == "assemblage") return io::assemblage_from_json(doc.payload);
  if (doc.kind == "correlation") return assemblage_from_correlation(io::correlation_from_json(doc.payload));
  return assemblage_from_channel(io::channel_from_document(doc));
}

inline std::vector<std::size_t> parse_map(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw ValidationError("--outcome-map: '" + item + "' is not a non-negative integer");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

inline json causality_json(const CausalityReport& rep, const std::vector<Party>& parties) {
  json bips = json::array();
  double worst = 0;
  for (const auto& b : rep.bipartitions) {
    json from = json::array(), to = json::array();
    for (auto k : b.blocked_from) from.push_back(parties[k].in_label);
    for (auto k : b.to) to.push_back(parties[k].in_label);
    bips.push_back({{"from", from}, {"to", to}, {"residual", b.residual}, {"semicausal", b.semicausal}});
    worst = std::max(worst, b.residual);
  }
  return {{"verdict", rep.causal ? "causal" : "not-causal"}, {"tol", rep.tol}, {"max_residual", worst}, {"bipartitions", bips}};
}

inline int cmd_verify(const Settings& s, const std::string& file) {
  const Channel ch = io::channel_from_document(io::parse_document(read_file(file)));
  const auto rep = is_causal(ch, s.tol);
  const json j = causality_json(rep, ch.parties());
  std::ostringstream t;
  t << "verdict: " << j["verdict"].get<std::string>() << "\n";
  for (const auto& b : j["bipartitions"])
    t << "  " << b["from"].dump() << " -/-> " << b["to"].dump() << "  residual " << fmt(b["residual"].get<double>(), 3) << "  "
      << (b["semicausal"].get<bool>() ? "ok" : "SIGNALLING") << "\n";
  emit(s, "report", j, t.str());
  return kExitOk;
}

inline int cmd_extract(const Settings& s, const std::string& what, const std::string& file, long trusted, const std::string& out) {
  const Channel ch = io::channel_from_document(io::parse_document(read_file(file)));
  const auto tin = trusted_state(trusted, ch);
  std::string text;
  if (what == "correlations")
    text = io::serialize(io::document("correlation", io::to_json(correlations_from_channel(ch, {}, {}, tin))));
  else if (what == "assemblage")
    text = io::serialize(io::document("assemblage", io::to_json(assemblage_from_channel(ch, {}, {}, tin))));
  else if (what == "measurement")
    text = io::serialize(io::document("distributed-measurement", io::to_json(distributed_measurement_from_channel(ch))));
  else if (what == "teleportage")
    text = io::serialize(io::document("teleportage", io::to_json(teleportage_from_channel(ch, {}, tin))));
  else
    throw ValidationError("extract: unknown object '" + what + "'");
  write_output(s, out, text);
  return kExitOk;
}

inline int cmd_classify(const Settings& s, const std::string& what, const std::string& file) {
  const io::Document doc = io::parse_document(read_file(file));
  json j;
  std::ostringstream t;
  if (what == "witness") {
    const auto w = tsirelson_witness(load_correlation(doc));
    j = {{"chsh", w.value}, {"verdict", witness_name(w.verdict)}};
    t << "CHSH " << fmt(w.value) << "  verdict " << witness_name(w.verdict) << "\n";
  } else {
    FeasibilityReport r;
    if (what == "lhv")
      r = lhv_membership(load_correlation(doc));
    else if (what == "lhs")
      r = lhs_membership(load_assemblage(doc), s.solver());
    else if (what == "almost-quantum")
      r = almost_quantum_membership(load_assemblage(doc), s.solver());
    else
      throw ValidationError("classify: unknown test '" + what + "'");
    j = io::to_json(r);
    j["test"] = what;
    t << what << ": " << verdict_name(r.status) << "  residual " << fmt(r.residual, 3) << "  iterations " << r.iterations << "\n";
  }
  emit(s, "report", j, t.str());
  return kExitOk;
}

inline int cmd_bell(const Settings& s, const std::string& which, const std::string& file, const std::string& map) {
  require(which == "chsh", "bell: only 'chsh' is available");
  Correlation c = load_correlation(io::parse_document(read_file(file)));
  if (!map.empty()) {
    const auto mp = parse_map(map);
    std::size_t nd = 0;
    for (auto v : mp) nd = std::max(nd, v + 1);
    c = coarse_grain_outputs(c, mp, nd);
  }
  const double v = chsh_value(c), b = chsh_best(c);
  emit(s, "report", {{"chsh", v}, {"chsh_best", b}}, "CHSH " + fmt(v) + "  (best relabelling " + fmt(b) + ")\n");
  return kExitOk;
}

inline int cmd_construct(const Settings& s, const std::string& name, double alpha, bool compiled, const std::string& out) {
  const CircuitChannel c = circuit_by_name(name, alpha);
  const std::string text = compiled ? io::serialize(io::document("channel", io::to_json(compile_circuit(c))))
                                    : io::serialize(io::document("circuit", io::to_json(c)));
  write_output(s, out, text);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Demos

struct DemoLine {
  std::string name;
  json value;
  json target;
};

inline int finish_demo(const Settings& s, const std::string& name, const std::vector<DemoLine>& lines) {
  json q = json::array();
  std::ostringstream t;
  t << "demo " << name << "\n";
  for (const auto& l : lines) {
    q.push_back({{"name", l.name}, {"value", l.value}, {"target", l.target}});
    auto show = [](const json& v) { return v.is_number_float() ? fmt(v.get<double>()) : (v.is_string() ? v.get<std::string>() : v.dump()); };
    t << "  " << std::left << std::setw(38) << l.name << std::setw(26) << show(l.value) << "target " << show(l.target) << "\n";
  }
  emit(s, "report", {{"demo", name}, {"quantities", q}}, t.str());
  return kExitOk;
}

inline double max_causal_residual(const CausalityReport& r) {
  double w = 0;
  for (const auto& b : r.bipartitions) w = std::max(w, b.residual);
  return w;
}

inline int demo_pr_box(const Settings& s) {
  const Channel ch = compile_circuit(pr_box_channel());
  const Correlation c = correlations_from_channel(ch);
  double err = 0;
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) err = std::max(err, std::abs(c.p({a, b}, {x, y}) - (((a ^ b) == (x & y)) ? 0.5 : 0.0)));
  const auto rep = is_causal(ch, s.tol);
  return finish_demo(s, "pr-box",
                     {{"max |p - PR|", err, 0.0},
                      {"CHSH", chsh_value(c), 4.0},
                      {"channel", rep.causal ? "causal" : "not-causal", "causal"},
                      {"causality residual", max_causal_residual(rep), 0.0}});
}

inline int demo_singlet(const Settings& s) {
  const Channel ch = compile_circuit(singlet_tsirelson_channel());
  const Correlation c = correlations_from_channel(ch);
  const auto rep = is_causal(ch, s.tol);
  return finish_demo(s, "singlet",
                     {{"CHSH (best relabelling)", chsh_best(c), 2.0 * std::sqrt(2.0)},
                      {"channel", rep.causal ? "causal" : "not-causal", "causal"}});
}

inline int demo_pq_pr(const Settings& s) {
  const Channel ch = compile_circuit(pq_steering_pr_channel());
  const Assemblage as = assemblage_from_channel(ch);
  double err = 0;
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t a = 0; a < 4; ++a) {
      const double p = (((a / 2) ^ (a % 2)) == ((x / 2) & (x % 2))) ? 0.5 : 0.0;
      err = std::max(err, max_abs(as.at(a, x) - p * identity(2) / 2.0));
    }
  const auto lhs = lhs_membership(as, s.solver());
  const auto w = tsirelson_witness(trace_assemblage(as));
  const auto rep = is_causal(ch, s.tol);
  return finish_demo(s, "pq-steering-pr",
                     {{"max |sigma - p_PR 1/2|", err, 0.0},
                      {"non-signalling", is_nonsignalling_assemblage(as, 1e-9).ok, true},
                      {"LHS", verdict_name(lhs.status), "numerically-infeasible"},
                      {"witness CHSH", w.value, 4.0},
                      {"witness verdict", witness_name(w.verdict), "not-almost-quantum"},
                      {"channel", rep.causal ? "causal" : "not-causal", "causal"}});
}

inline int demo_pq_alpha(const Settings& s, double alpha) {
  const Channel ch = compile_circuit(pq_steering_alpha_channel(alpha));
  const Correlation c = coarse_grain_outputs(correlations_from_channel(ch), alpha_outcome_map(), 2);
  const auto rep = is_causal(ch, s.tol);
  const auto w = tsirelson_witness(c);
  return finish_demo(s, "pq-steering-alpha",
                     {{"alpha", alpha, alpha},
                      {"CHSH (Charlie traced)", chsh_value(c), 4.0 - 6.0 * alpha},
                      {"witness verdict", witness_name(w.verdict),
                       4.0 - 6.0 * alpha > 2.0 * std::sqrt(2.0) + 1e-6 ? "not-almost-quantum"
                       : 4.0 - 6.0 * alpha > 2.0 + 1e-6                 ? "not-local"
                                                                        : "inconclusive"},
                      {"channel", rep.causal ? "causal" : "not-causal", "causal"}});
}

inline int demo_ghjw(const Settings& s) {
  std::vector<std::vector<std::vector<ComplexMatrix>>> local{{basis_projectors(identity(2)), basis_projectors(gates::hadamard())}};
  const Assemblage zx = assemblage_from_commuting_projectors(tensor_product_realization(bell_phi_plus(), {2}, 2, local));
  // seeded random non-signalling assemblage: sqrt(rho) M_{a|x} sqrt(rho)
  Rng rng(7);
  const ComplexMatrix rho = rng.density(3), root = psd_sqrt(rho);
  Assemblage rnd(1, 3, 2, 3);
  for (std::size_t x = 0; x < 3; ++x) {
    const auto povm = rng.povm(3, 2);
    for (std::size_t a = 0; a < 2; ++a) rnd.at(a, x) = root * povm[a] * root;
  }
  const Teleportage t = teleportage_from_channel(compile_circuit(teleportation_channel()));
  return finish_demo(s, "ghjw",
                     {{"Z/X steering assemblage residual", ghjw_realize_assemblage(zx).residual, 0.0},
                      {"random assemblage residual", ghjw_realize_assemblage(rnd).residual, 0.0},
                      {"teleportation teleportage residual", ghjw_realize_teleportage(t).residual, 0.0}});
}

inline int demo_buscemi(const Settings& s) {
  const DistributedMeasurement dm = distributed_measurement_from_channel(compile_circuit(pr_box_channel()));
  // basis preparations on the quantum inputs turn the measurement into a Bell table
  Correlation c(2, 2, 2);
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t a = 0; a < 4; ++a) c.at(a, x) = dm.elements[a](Eigen::Index(x), Eigen::Index(x)).real();
  const DistributedMeasurement bell = distributed_measurement_from_channel(compile_circuit(bell_measurement_channel()));
  return finish_demo(s, "buscemi-bell",
                     {{"PR measurement non-signalling", is_nonsignalling_distributed_measurement(dm, 1e-9).ok, true},
                      {"CHSH on basis preparations", chsh_value(c), 4.0},
                      {"Bell measurement non-signalling", is_nonsignalling_distributed_measurement(bell, 1e-9).ok, false}});
}

inline int demo_teleportation(const Settings& s) {
  const Teleportage t = teleportage_from_channel(compile_circuit(teleportation_channel()));
  double err = 0;
  for (const auto& v : tomographic_states(2)) {
    const ComplexMatrix rho = projector(v);
    for (std::size_t a = 0; a < 4; ++a) {
      const ComplexMatrix p = teleportation_byproduct(a);
      err = std::max(err, max_abs(t.apply(a, rho) - 0.25 * p * rho * p.adjoint()));
    }
  }
  const auto g = ghjw_realize_teleportage(t);
  return finish_demo(s, "teleportation",
                     {{"max |T_a(rho) - P rho P/4|", err, 0.0},
                      {"non-signalling", is_nonsignalling_teleportage(t, 1e-9).ok, true},
                      {"GHJW residual", g.residual, 0.0}});
}

inline int cmd_demo(const Settings& s, const std::string& name, double alpha) {
  if (name == "pr-box") return demo_pr_box(s);
  if (name == "singlet") return demo_singlet(s);
  if (name == "pq-steering-pr") return demo_pq_pr(s);
  if (name == "pq-steering-alpha") return demo_pq_alpha(s, alpha);
  if (name == "ghjw") return demo_ghjw(s);
  if (name == "buscemi-bell") return demo_buscemi(s);
  if (name == "teleportation") return demo_teleportation(s);
  throw ValidationError("demo: unknown demo '" + name + "'");
}

// ---------------------------------------------------------------------------

inline double default_tol() {
  if (const char* env = std::getenv("WORKBENCH_TOL")) {
    try {
      return std::stod(env);
    } catch (const std::exception&) {
      throw ValidationError(std::string("WORKBENCH_TOL: cannot parse '") + env + "'");
    }
  }
  return kCausalTol;
}

inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  // first non-option token must be a command
  bool found = false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--tol" || a == "--max-iter") {
      ++i;
      continue;
    }
    if (!a.empty() && a[0] == '-') continue;
    if (std::find(kCommands.begin(), kCommands.end(), a) == kCommands.end()) {
      err << "unknown command '" << a << "'\n" << usage();
      return kExitUsage;
    }
    found = true;
    break;
  }
  if (!found && std::find(args.begin(), args.end(), "--help") == args.end() && std::find(args.begin(), args.end(), "-h") == args.end()) {
    err << usage();
    return kExitUsage;
  }

  Settings s;
  s.out = &out;
  CLI::App app{"Multipartite quantum channel workbench", "qchan"};
  app.require_subcommand(1);
  std::optional<double> tol;
  app.add_option("--tol", tol, "numerical tolerance (default 1e-7, env WORKBENCH_TOL)");
  app.add_option("--max-iter", s.max_iter, "solver iteration cap");
  app.add_flag("--json", s.json_out, "machine-readable output");

  std::string name, file, what, outfile, map;
  double alpha = 1.0 / 6.0;
  bool compiled = false;
  long trusted = -1;

  auto* construct = app.add_subcommand("construct", "emit a gallery circuit");
  construct->add_option("name", name)->required();
  construct->add_option("--alpha", alpha);
  construct->add_flag("--compiled", compiled, "emit the compiled channel instead of the circuit");
  construct->add_option("-o,--output", outfile);

  auto* verify = app.add_subcommand("verify-causal", "check every bipartition for signalling");
  verify->add_option("file", file)->required();

  auto* extract = app.add_subcommand("extract", "extract a scenario object from a channel");
  extract->add_option("object", what)->required()->check(CLI::IsMember({"correlations", "assemblage", "measurement", "teleportage"}));
  extract->add_option("file", file)->required();
  extract->add_option("--trusted-input", trusted, "basis state fed to the trusted input");
  extract->add_option("-o,--output", outfile);

  auto* classify = app.add_subcommand("classify", "membership tests");
  classify->add_option("test", what)->required()->check(CLI::IsMember({"lhv", "lhs", "almost-quantum", "witness"}));
  classify->add_option("file", file)->required();

  auto* bell = app.add_subcommand("bell", "Bell functionals");
  bell->add_option("functional", what)->required()->check(CLI::IsMember({"chsh"}));
  bell->add_option("file", file)->required();
  bell->add_option("--outcome-map", map, "coarse-graining of outcomes, e.g. 0,0,1,1");

  auto* demo = app.add_subcommand("demo", "reproduce a worked example");
  demo->add_option("name", name)->required()->check(CLI::IsMember(kDemos));
  demo->add_option("--alpha", alpha);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << usage();
    return kExitValidation;
  }

  try {
    s.tol = tol ? *tol : default_tol();
    require(s.tol > 0, "--tol must be positive");
    if (*construct) return cmd_construct(s, name, alpha, compiled, outfile);
    if (*verify) return cmd_verify(s, file);
    if (*extract) return cmd_extract(s, what, file, trusted, outfile);
    if (*classify) return cmd_classify(s, what, file);
    if (*bell) return cmd_bell(s, what, file, map);
    if (*demo) return cmd_demo(s, name, alpha);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace qchan::cli
