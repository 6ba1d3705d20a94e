// netident: decides global network identifiability of parameterized linear
// dynamic network model sets, simulates networks, and produces
// non-identifiability witnesses.
//
// Exit codes: 0 success, 2 parse/validation failure, 3 NOT_IDENTIFIABLE
// under check --strict.

#include "netident/dot_export.hpp"
#include "netident/report.hpp"
#include "netident/simulate.hpp"
#include "netident/specdoc.hpp"
#include "netident/version.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace netident;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNotIdentifiable = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SpecDocument load_spec(const std::string& path) { return parse_spec(slurp(path)); }

NetworkModel model_from(const SpecDocument& doc, const std::string& path) {
  if (!doc.theta)
    throw SpecParseError(path + ": document has no theta block for a concrete model");
  return instantiate(doc.structure, *doc.theta);
}

struct CheckArgs {
  std::string spec_path;
  bool at_model = false;
  bool generic = false;
  bool strict = false;
  int trials = 8;
  uint64_t seed = 1;
  double rank_tol = kRankTol;
  std::string json_path;
};

int run_check(const CheckArgs& args) {
  SpecDocument doc = load_spec(args.spec_path);
  AnalyzeOptions opts;
  opts.trials = args.trials;
  opts.seed = args.seed;
  opts.rank_tol = args.rank_tol;

  IdentifiabilityReport rep;
  if (args.at_model && !args.generic) {
    NetworkModel m = model_from(doc, args.spec_path);
    rep = analyze(doc.structure, &m, Mode::AtModel, opts);
  } else {
    rep = analyze(doc.structure, nullptr, Mode::Generic, opts);
  }

  std::cout << report_to_text(rep);
  if (!args.json_path.empty()) {
    std::ofstream out(args.json_path, std::ios::binary);
    if (!out) throw SpecParseError("cannot write '" + args.json_path + "'");
    out << report_to_json(rep).dump(2) << "\n";
  }
  if (args.strict && rep.overall == Verdict::NotIdentifiable) return kExitNotIdentifiable;
  return kExitOk;
}

struct SimulateArgs {
  std::string spec_path;
  int samples = 256;
  uint64_t seed = 1;
  int burn_in = 0;
  std::string r_kind = "impulse";
  std::string out_path;
};

int run_simulate(const SimulateArgs& args) {
  SpecDocument doc = load_spec(args.spec_path);
  NetworkModel m = model_from(doc, args.spec_path);
  const int N = args.samples + args.burn_in;

  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m.K, N);
  Rng rng(args.seed ^ 0x5851f42d4c957f2dull);
  for (int k = 0; k < m.K; ++k)
    for (int t = 0; t < N; ++t) {
      if (args.r_kind == "impulse")
        r(k, t) = t == 0 ? 1.0 : 0.0;
      else if (args.r_kind == "step")
        r(k, t) = 1.0;
      else if (args.r_kind == "noise")
        r(k, t) = rng.gaussian();
      else if (args.r_kind == "zero")
        r(k, t) = 0.0;
    }
  Eigen::MatrixXd e = gaussian_noise(m.Lambda, N, args.seed);
  SignalRecord rec = simulate(m, r, e, args.burn_in);

  if (args.out_path.empty()) {
    write_csv(std::cout, rec);
  } else {
    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw SpecParseError("cannot write '" + args.out_path + "'");
    write_csv(out, rec);
  }
  return kExitOk;
}

struct WitnessArgs {
  std::string spec_path;
  int samples = 512;
  uint64_t seed = 1;
};

int run_witness(const WitnessArgs& args) {
  SpecDocument doc = load_spec(args.spec_path);
  NetworkModel m = model_from(doc, args.spec_path);
  if (!witness_family_applies(m)) {
    std::cerr << "the model does not admit the transfer-equivalent family construction\n";
    return kExitInput;
  }
  const Rat B = m.G.at(1, 2);
  std::vector<Rat> probes = {B, Rat::zero(), Coeff(1, 2) * B, Coeff(3, 2) * B, Coeff(2) * B};

  const int N = args.samples;
  Rng rng(args.seed);
  Eigen::MatrixXd r(m.K, N);
  for (int k = 0; k < m.K; ++k)
    for (int t = 0; t < N; ++t) r(k, t) = rng.gaussian();
  Eigen::MatrixXd e = gaussian_noise(m.Lambda, N, args.seed + 1);
  SignalRecord base = simulate(m, r, e);

  bool all_ok = true;
  for (size_t i = 0; i < probes.size(); ++i) {
    WitnessMember member = witness_family_member(m, probes[i]);
    std::cout << "member " << i + 1 << ": module 3->2 = " << probes[i].to_string()
              << ", module 1->2 = " << member.model.G.at(1, 0).to_string();
    if (!member.violations.empty()) {
      std::cout << "  [invalid:";
      for (const auto& v : member.violations) std::cout << " " << v.code;
      std::cout << "]\n";
      continue;
    }
    bool same_transfer = network_transfer(member.model) == network_transfer(m);
    SignalRecord rec = simulate(member.model, r, e);
    double dev = (rec.w - base.w).cwiseAbs().maxCoeff();
    std::cout << "  transfer " << (same_transfer ? "identical" : "DIFFERS")
              << ", max simulation deviation " << dev << "\n";
    if (!same_transfer || dev > 1e-9) all_ok = false;
  }
  std::cout << (all_ok ? "all valid members are indistinguishable from the data\n"
                       : "family check FAILED\n");
  return all_ok ? kExitOk : 1;
}

int run_export_dot(const std::string& spec_path, const std::string& out_path) {
  SpecDocument doc = load_spec(spec_path);
  if (out_path.empty()) {
    export_dot(std::cout, doc.structure);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw SpecParseError("cannot write '" + out_path + "'");
    export_dot(out, doc.structure);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"network identifiability analysis for linear dynamic networks"};
  app.set_version_flag("--version", std::string(netident::kToolVersion));
  app.require_subcommand(1);

  CheckArgs check;
  auto* c = app.add_subcommand("check", "analyze identifiability of a model set");
  c->add_option("spec", check.spec_path, "model set document")->required();
  c->add_flag("--at-model", check.at_model, "decide at the document's theta block");
  c->add_flag("--generic", check.generic, "force generic-mode analysis");
  c->add_flag("--strict", check.strict, "exit 3 when the verdict is NOT_IDENTIFIABLE");
  c->add_option("--trials", check.trials, "sampling trials")->default_val(8);
  c->add_option("--seed", check.seed, "RNG seed")->default_val(1);
  c->add_option("--rank-tol", check.rank_tol, "relative rank threshold")->default_val(kRankTol);
  c->add_option("--json", check.json_path, "write the machine-readable report here");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "simulate the document's concrete model");
  s->add_option("spec", sim.spec_path, "model set document with a theta block")->required();
  s->add_option("-N,--samples", sim.samples, "samples to keep")->default_val(256);
  s->add_option("--seed", sim.seed, "noise seed")->default_val(1);
  s->add_option("--burn-in", sim.burn_in, "samples to discard up front")->default_val(0);
  s->add_option("--r", sim.r_kind, "excitation kind: impulse, step, noise, zero")
      ->default_val("impulse")
      ->check(CLI::IsMember({"impulse", "step", "noise", "zero"}));
  s->add_option("-o,--output", sim.out_path, "CSV output path (default stdout)");

  WitnessArgs wit;
  auto* w = app.add_subcommand("witness", "build and verify transfer-equivalent models");
  w->add_option("spec", wit.spec_path, "model set document with a theta block")->required();
  w->add_option("-N,--samples", wit.samples, "simulation length")->default_val(512);
  w->add_option("--seed", wit.seed, "probe signal seed")->default_val(1);

  std::string dot_spec, dot_out;
  auto* d = app.add_subcommand("export-dot", "write the module graph in DOT format");
  d->add_option("spec", dot_spec, "model set document")->required();
  d->add_option("-o,--output", dot_out, "output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c) return run_check(check);
    if (*s) return run_simulate(sim);
    if (*w) return run_witness(wit);
    if (*d) return run_export_dot(dot_spec, dot_out);
  } catch (const netident::SpecParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const netident::InstantiationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
