// Copyright 2026 The qetkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qetkd command-line harness: ground-state summaries, protocol sweeps, noise
// threshold scans, key sessions and attack simulations.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qetkd/adversary.hpp"
#include "qetkd/io.hpp"
#include "qetkd/qkd.hpp"

namespace {

using namespace qetkd;

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kDegenerate = 3, kAbort = 4 };

struct ModelOpts {
  std::string model = "chain3";
  double k = 1.0;
  double h = 1.0;
  std::optional<double> J;
  int N = 2;
  std::string partition = "standard";
};

void add_model_flags(CLI::App* sub, ModelOpts& o) {
  sub->add_option("--model", o.model, "two-site | star | chain3")
      ->check(CLI::IsMember({"two-site", "star", "chain3"}))
      ->capture_default_str();
  sub->add_option("--k", o.k, "two-site coupling")->capture_default_str();
  sub->add_option("--h", o.h, "two-site field")->capture_default_str();
  sub->add_option("--J", o.J, "star / chain coupling");
  sub->add_option("--N", o.N, "star: number of receiving parties")->capture_default_str();
  sub->add_option("--partition", o.partition, "two-site partition")
      ->check(CLI::IsMember({"standard", "alternative"}))
      ->capture_default_str();
}

ModelParams to_params(const ModelOpts& o, double coupling) {
  ModelParams p;
  p.kind = model_kind_from_string(o.model);
  p.k = o.k;
  p.h = o.h;
  p.J = coupling;
  p.N = o.N;
  p.alternative_partition = o.partition == "alternative";
  return p;
}

/// Every option of the subcommand, in declaration order, as manifest parameters.
RunManifest manifest_for(const CLI::App* sub, std::uint64_t seed, const std::string& out) {
  RunManifest m;
  m.subcommand = sub->get_name();
  m.seed = seed;
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "out" || name == "seed") continue;  // seed has its own line
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = opt->get_default_str();
    }
    m.parameters.emplace_back(name, value);
  }
  if (!out.empty()) m.outputs.push_back(out);
  return m;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open output file " + path);
  f << text;
}

int resolve_site(const QetSystem& sys, const std::string& s) {
  if (sys.model().partition.contains(s)) return sys.site_of(s);
  const double v = parse_double(s, "site");
  if (v != std::floor(v)) throw InvalidArgument("site must be a label or an integer");
  return static_cast<int>(v);
}

// ---- ground ----------------------------------------------------------------

struct GroundOpts {
  ModelOpts model;
  std::string sweep;
  std::string terms;
  std::string out;
};

int cmd_ground(const CLI::App* sub, const GroundOpts& o) {
  if (!o.sweep.empty()) {
    if (o.model.model == "two-site") throw InvalidArgument("--sweep-J needs the star or chain3 model");
    const auto grid = parse_sweep(o.sweep);
    const auto gaps = parallel_map(grid, [&](double j) {
      return energy_gap(to_params(o.model, j).build().spec);
    });
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) rows.push_back({format_g12(grid[i]), format_g12(gaps[i])});
    emit(o.out, write_csv(manifest_for(sub, 0, o.out), {"J", "gap"}, rows));
    return kOk;
  }
  HamiltonianSpec spec;
  if (!o.terms.empty()) {
    std::ifstream f(o.terms);
    if (!f) throw InvalidArgument("cannot read term list " + o.terms);
    std::stringstream ss;
    ss << f.rdbuf();
    spec = parse_term_list(ss.str());
    if (spec.name.empty()) spec.name = o.terms;
  } else {
    spec = to_params(o.model, o.model.J.value_or(1.0)).build().spec;
  }
  const auto g = ground_state(spec);
  emit(o.out, fmt::format("model={}\nn_sites={}\nground_energy={:.6f}\ngap={:.6f}\n", spec.name,
                          spec.n_sites, g.energy, g.gap));
  return kOk;
}

// ---- qet -------------------------------------------------------------------

struct QetOpts {
  ModelOpts model;
  std::string basis = "random";
  std::string rule = "identity";
  std::string receiver;
  std::string sweep;
  std::string out;
};

QetOutcome qet_point(const QetOpts& o, double coupling) {
  const QetSystem sys(to_params(o.model, coupling).build());
  const std::string rx = o.receiver.empty() ? sys.model().receivers.front() : o.receiver;
  const BitMap map = o.rule == "flip" ? BitMap::flip : BitMap::identity;
  const int a = sys.site_of(sys.model().sender);
  if (o.basis == "random") return run_ensemble_random_basis(sys, two_basis_set(sys, rx, map));
  if (o.basis == "optimal") return run_ensemble(sys, optimal_protocol(sys, MeasurementBasis::along(Axis::X, a), rx, map));
  const auto basis = MeasurementBasis::along(o.basis == "x" ? Axis::X : Axis::Y, a);
  return run_ensemble(sys, make_protocol(sys, basis, paired_bob_axis(basis), rx, map));
}

int cmd_qet(const CLI::App* sub, const QetOpts& o) {
  std::vector<double> grid;
  if (!o.sweep.empty()) {
    grid = parse_sweep(o.sweep);
  } else {
    grid = {o.model.model == "two-site" ? o.model.k : o.model.J.value_or(1.0)};
  }
  const auto res = parallel_map(grid, [&](double j) { return qet_point(o, j); });
  std::vector<std::vector<std::string>> rows;
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rows.push_back({format_g12(grid[i]), format_g12(res[i].alice_energy), format_g12(res[i].bob_energy)});
    lo = std::min(lo, res[i].bob_energy);
    hi = std::max(hi, res[i].bob_energy);
  }
  emit(o.out, write_csv(manifest_for(sub, 0, o.out), {"J", "E_A", "E_B"}, rows));
  std::cerr << fmt::format("min_E_B={:.12g}\nmax_E_B={:.12g}\n", lo, hi);
  return kOk;
}

// ---- noise -----------------------------------------------------------------

struct NoiseOpts {
  ModelOpts model;
  std::string family = "classical";
  std::string site;
  std::string channel = "dephasing";
  double alpha = 0.0;
  std::string grid = "0:1:101";
  std::string basis = "fixed";
  std::string out;
};

std::vector<Operator> kraus_channel(const std::string& name, double p, int site, int n) {
  if (name == "dephasing") {
    return {std::sqrt(1 - p) * Operator::identity(n), std::sqrt(p) * pauli_on_site(Axis::Z, site, n)};
  }
  if (name == "bitflip") {
    return {std::sqrt(1 - p) * Operator::identity(n), std::sqrt(p) * pauli_on_site(Axis::X, site, n)};
  }
  Eigen::Matrix2cd k0, k1;
  k0 << 1, 0, 0, std::sqrt(1 - p);
  k1 << 0, std::sqrt(p), 0, 0;
  return {embed_on_site(k0, site, n), embed_on_site(k1, site, n)};
}

int cmd_noise(const CLI::App* sub, const NoiseOpts& o) {
  const NoiseKind kind = noise_kind_from_string(o.family);
  double coupling = 1.0;
  if (o.model.J) {
    coupling = *o.model.J;
  } else if (o.model.model == "chain3") {
    coupling = optimal_chain3_coupling().coupling;
  }
  const auto policy = o.basis == "two-basis" ? BasisPolicy::two_basis : BasisPolicy::fixed;
  const auto ctx = RunContext::make(to_params(o.model, coupling).build(), policy);
  const int n = ctx.system.n_sites();

  NoiseSpec spec;
  spec.kind = kind;
  if (!o.site.empty()) spec.site = resolve_site(ctx.system, o.site);
  spec.alpha = o.alpha;
  const auto grid = parse_sweep(o.grid);

  ThresholdReport report;
  std::optional<KrausReport> kraus_check;
  if (kind == NoiseKind::local_kraus) {
    if (!spec.site) throw InvalidArgument("kraus family needs --site");
    const int site = *spec.site;
    report = threshold_scan_with(to_string(kind), grid, [&](double p) {
      return local_kraus_run(ctx, site, kraus_channel(o.channel, p, site, n)).outcome;
    });
    kraus_check = local_kraus_run(ctx, site, kraus_channel(o.channel, 0.5, site, n));
  } else {
    report = threshold_scan(ctx, spec, grid);
  }

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    rows.push_back({report.family, format_g12(coupling), format_g12(report.grid[i]),
                    format_g12(report.alice_energy[i]), format_g12(report.bob_energy[i])});
  }
  emit(o.out, write_csv(manifest_for(sub, 0, o.out), {"family", "J", "p", "E_A", "E_B"}, rows));

  std::string text = fmt::format("family={}\nJ={:.12g}\n", report.family, coupling);
  if (report.p_star()) {
    text += fmt::format("p_star={:.6f}\n", *report.p_star());
    for (double c : report.crossings) text += fmt::format("crossing={:.6f}\n", c);
  } else {
    text += "p_star=NoCrossing\n";
  }
  if (kind == NoiseKind::depolarize) {
    const auto e0 = noiseless_run(ctx);
    double worst = 0.0;
    for (std::size_t i = 0; i < report.grid.size(); ++i) {
      const double scale = 1.0 - report.grid[i];
      worst = std::max({worst, std::abs(report.bob_energy[i] - scale * e0.bob_energy),
                        std::abs(report.alice_energy[i] - scale * e0.alice_energy)});
    }
    text += fmt::format("scaling_check={}\nscaling_max_error={:.3g}\n", worst <= 1e-10 ? "pass" : "fail", worst);
  }
  if (kraus_check) {
    text += fmt::format("preconditions={}\ncommutator_norm={:.6g}\n",
                        kraus_check->preconditions_hold ? "hold" : "violated", kraus_check->commutator_norm);
  }
  std::cerr << text;
  return kOk;
}

// ---- session ---------------------------------------------------------------

struct SessionOpts {
  ModelOpts model;
  int rounds = 256;
  std::string policy = "fixed";
  std::optional<double> epsilon;
  int verification_bits = 64;
  std::string noise_family;
  double noise_p = 0.0;
  std::string noise_site;
  std::string readout = "exact";
  std::vector<std::string> cheat;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_session(const CLI::App* sub, const SessionOpts& o) {
  SessionConfig cfg;
  cfg.model = to_params(o.model, o.model.J.value_or(1.0));
  cfg.rounds = o.rounds;
  cfg.policy = session_policy_from_string(o.policy);
  cfg.epsilon = o.epsilon;
  cfg.verification_bits = o.verification_bits;
  cfg.seed = o.seed;
  cfg.readout = o.readout == "shot" ? EnergyReadout::shot : EnergyReadout::expectation;
  if (!o.noise_family.empty()) {
    NoiseSpec spec;
    spec.kind = noise_kind_from_string(o.noise_family);
    spec.p = o.noise_p;
    if (spec.kind == NoiseKind::local_kraus) throw InvalidArgument("kraus noise is not available in sessions");
    if (!o.noise_site.empty()) spec.site = resolve_site(QetSystem(cfg.model.build()), o.noise_site);
    cfg.noise = spec;
  }
  const std::set<std::string> cheat(o.cheat.begin(), o.cheat.end());

  SessionResult res;
  std::optional<CheatVerdict> verdict;
  if (cfg.model.kind == ModelKind::star && cfg.model.N >= 2) {
    auto m = run_multiparty(cfg, cheat);
    res = std::move(m.session);
    verdict = m.verdict;
  } else {
    res = run_session(cfg, cheat);
  }
  emit(o.out, manifest_for(sub, o.seed, o.out).render() + res.transcript());

  std::string text;
  for (const auto& p : res.parties) {
    text += fmt::format("match_rate.{}={:.6f}\nerasures.{}={}\n", p.label, p.match_rate, p.label, p.erasures);
  }
  text += fmt::format("verification={}\nverification_bits={}\nverification_mismatches={}\n",
                      res.verification.passed ? "pass" : "fail", res.verification.bits_compared,
                      res.verification.mismatches);
  if (verdict) {
    text += fmt::format("sign_agreement={:.6f}\ncheat_detected={}\nsuspect={}\n", verdict->agreement_rate,
                        verdict->inconsistent ? "yes" : "no", verdict->suspect.value_or("none"));
  }
  std::cerr << text;
  if (!res.verification.passed) {
    std::cerr << "abort: key verification failed\n";
    return kAbort;
  }
  return kOk;
}

// ---- attack ----------------------------------------------------------------

struct AttackOpts {
  ModelOpts model;
  std::string scenario = "independent";
  std::string sub_case = "eve-waits";
  std::string eve_basis;
  int rounds = 10000;
  int verification_bits = 64;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_attack(const CLI::App* sub, const AttackOpts& o) {
  const QetSystem sys(to_params(o.model, o.model.J.value_or(1.0)).build());
  const std::string rx = sys.model().receivers.front();
  const auto alice = MeasurementBasis::along(Axis::X, sys.site_of(sys.model().sender));
  const Protocol proto = make_protocol(sys, alice, paired_bob_axis(alice), rx);

  AttackReport r;
  if (o.scenario == "postselect") {
    r = eve_postselect(sys, proto);
  } else if (o.scenario == "independent") {
    std::optional<MeasurementBasis> eb;
    if (!o.eve_basis.empty()) eb = MeasurementBasis::along(axis_from_char(static_cast<char>(std::toupper(o.eve_basis[0]))), alice.site);
    r = eve_independent(sys, proto, eb, o.rounds, o.seed);
  } else {
    r = split_attack(sys, proto, split_case_from_string(o.sub_case), o.rounds, o.seed, o.verification_bits);
  }
  emit(o.out, manifest_for(sub, o.seed, o.out).render() + r.serialize());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qetkd: energy-teleportation key distribution simulator"};
  app.set_version_flag("--version", std::string(QETKD_VERSION));
  app.set_help_flag("--help", "print help");  // -h would clash with the --h field option
  app.require_subcommand(1);

  GroundOpts g;
  auto* ground = app.add_subcommand("ground", "ground energy and gap");
  add_model_flags(ground, g.model);
  ground->add_option("--sweep-J", g.sweep, "start:stop:count, emits J,gap CSV");
  ground->add_option("--terms", g.terms, "read the Hamiltonian from a term-list file");
  ground->add_option("--out", g.out, "output path (default stdout)");

  QetOpts q;
  auto* qet = app.add_subcommand("qet", "ensemble protocol energies");
  add_model_flags(qet, q.model);
  qet->add_option("--basis", q.basis, "x | y | random | optimal")
      ->check(CLI::IsMember({"x", "y", "random", "optimal"}))
      ->capture_default_str();
  qet->add_option("--rule", q.rule, "identity | flip")
      ->check(CLI::IsMember({"identity", "flip"}))
      ->capture_default_str();
  qet->add_option("--receiver", q.receiver, "receiving party label");
  qet->add_option("--sweep-J", q.sweep, "start:stop:count");
  qet->add_option("--out", q.out, "output path (default stdout)");

  NoiseOpts nz;
  auto* noise = app.add_subcommand("noise", "noise curves and sign-change thresholds");
  add_model_flags(noise, nz.model);
  noise->add_option("--family", nz.family,
                    "classical | depolarize | bitflip | phaseflip | mixture | superposition | kraus")
      ->capture_default_str();
  noise->add_option("--site", nz.site, "site label (alice, bob, buffer, partyK) or index");
  noise->add_option("--channel", nz.channel, "kraus channel: dephasing | bitflip | amplitude")
      ->check(CLI::IsMember({"dephasing", "bitflip", "amplitude"}))
      ->capture_default_str();
  noise->add_option("--alpha", nz.alpha, "superposition phase")->capture_default_str();
  noise->add_option("--grid", nz.grid, "p grid start:stop:count")->capture_default_str();
  noise->add_option("--basis", nz.basis, "fixed | two-basis")
      ->check(CLI::IsMember({"fixed", "two-basis"}))
      ->capture_default_str();
  noise->add_option("--out", nz.out, "output path (default stdout)");

  SessionOpts s;
  auto* session = app.add_subcommand("session", "key distribution session");
  add_model_flags(session, s.model);
  session->add_option("--rounds", s.rounds)->capture_default_str();
  session->add_option("--policy", s.policy, "fixed | two-basis | haar")
      ->check(CLI::IsMember({"fixed", "two-basis", "haar"}))
      ->capture_default_str();
  session->add_option("--epsilon", s.epsilon, "decode threshold (default |E_B|/10)");
  session->add_option("--verification-bits", s.verification_bits)->capture_default_str();
  session->add_option("--noise-family", s.noise_family);
  session->add_option("--noise-p", s.noise_p)->capture_default_str();
  session->add_option("--noise-site", s.noise_site);
  session->add_option("--readout", s.readout, "exact | shot")
      ->check(CLI::IsMember({"exact", "shot"}))
      ->capture_default_str();
  session->add_option("--cheat", s.cheat, "party sent the complemented bit (repeatable)");
  session->add_option("--seed", s.seed)->capture_default_str();
  session->add_option("--out", s.out, "transcript path (default stdout)");

  AttackOpts at;
  auto* attack = app.add_subcommand("attack", "eavesdropper simulations");
  add_model_flags(attack, at.model);
  attack->add_option("--scenario", at.scenario, "independent | postselect | split")
      ->check(CLI::IsMember({"independent", "postselect", "split"}))
      ->capture_default_str();
  attack->add_option("--sub", at.sub_case,
                     "eve-waits | eve-measures-first-silent | eve-measures-first-sends")
      ->capture_default_str();
  attack->add_option("--eve-basis", at.eve_basis, "x | y | z (independent scenario)")
      ->check(CLI::IsMember({"x", "y", "z"}));
  attack->add_option("--rounds", at.rounds)->capture_default_str();
  attack->add_option("--verification-bits", at.verification_bits)->capture_default_str();
  attack->add_option("--seed", at.seed)->capture_default_str();
  attack->add_option("--out", at.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (ground->parsed()) return cmd_ground(ground, g);
    if (qet->parsed()) return cmd_qet(qet, q);
    if (noise->parsed()) return cmd_noise(noise, nz);
    if (session->parsed()) return cmd_session(session, s);
    if (attack->parsed()) return cmd_attack(attack, at);
  } catch (const DegenerateGround& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const DegenerateObjective& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const ProtocolAbort& e) {
    std::cerr << "abort: " << e.what() << '\n';
    return kAbort;
  } catch (const PartitionViolation& e) {
    std::cerr << "abort: " << e.what() << '\n';
    return kAbort;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const CompletenessViolation& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const SupportViolation& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
