/*
 * symco_cli.cc
 *
 * Command-line front end: abstraction building, certification, composition,
 * safety synthesis, closed-loop simulation, and the road-traffic pipeline.
 *
 * Exit codes: 0 success, 2 configuration error, 3 build/model error,
 * 4 a mathematical gate failed (small gain, sampled verification, empty
 * winning set, unsafe trajectory).
 */

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "symco/composition.hh"
#include "symco/config.hh"
#include "symco/errors.hh"
#include "symco/sampling.hh"
#include "symco/traffic.hh"

namespace fs = std::filesystem;
using namespace symco;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBuild = 3;
constexpr int kExitGate = 4;

struct Options {
  std::string spec_path;
  std::string out_dir;
  std::string controllers_dir;
  double eta = 0.1;
  double varpi = 0.0;
  double epsilon = 2.0;
  int kd = 0; /* 0: per-subsystem dwell time from the spec */
  std::vector<double> theta{0.66, 0.335, 0.005};
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
  int steps = 600;
  bool materialize = false;
  bool dot = false;
  int scale_links = 3;
  bool symmetry = false;
  double radius = -1.0; /* synthesize/simulate quantizer radius; <0: eta/2 */
  std::vector<double> x0;
};

Splitters theta_of(const Options& opt) {
  if (opt.theta.size() != 3)
    throw ConfigError("--theta expects three weights");
  return Splitters{opt.theta[0], opt.theta[1], opt.theta[2]};
}

void ensure_out_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--out directory is required for this command");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir);
}

/* internal input set for one subsystem: coupled point lists when the spec
 * wires it, quantization by --varpi otherwise */
InternalInputSet inputs_for(const NetworkSpec& net, const SwitchedSubsystem& sub,
                            const std::vector<UniformGrid>& grids, double varpi) {
  if (sub.internal_dim() == 0) return InternalInputSet::none();
  if (!sub.internal_blocks().empty() && !net.edges.empty())
    return coupled_inputs(net, sub.id(), grids);
  if (varpi <= 0.0)
    throw ConfigError("subsystem " + std::to_string(sub.id()) +
                      " has internal inputs; give --varpi or couple it in the spec");
  UniformGrid wgrid(sub.internal_domain(), varpi);
  return InternalInputSet::from_grid(wgrid);
}

int cmd_abstract(const Options& opt) {
  auto doc = load_network_document(opt.spec_path);
  ensure_out_dir(opt.out_dir);

  std::vector<UniformGrid> grids;
  for (const auto& sub : doc.network.subsystems)
    grids.emplace_back(sub.state_domain(), opt.eta);

  std::cout << "abstract: seed = " << opt.seed << ", eta = " << opt.eta << "\n";
  for (const auto& sub : doc.network.subsystems) {
    const auto t0 = std::chrono::steady_clock::now();
    auto fts = build_finite_ts(sub, opt.eta,
                               inputs_for(doc.network, sub, grids, opt.varpi),
                               /*materialize=*/true, SinkPolicy::absorbing,
                               opt.workers);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    const std::string path =
        (fs::path(opt.out_dir) / ("subsystem_" + std::to_string(sub.id()) + ".fts"))
            .string();
    fts.dump_file(path);
    std::cout << "  subsystem " << sub.id() << ": cells = " << fts.cell_count()
              << ", aug states = " << fts.aug_count()
              << ", transitions = " << fts.transition_count(opt.workers)
              << ", build = " << dt.count() << "s -> " << path << "\n";
    if (opt.dot) {
      std::ofstream dot_os(fs::path(opt.out_dir) /
                           ("subsystem_" + std::to_string(sub.id()) + ".dot"));
      dot_os << fts.to_dot();
    }
  }
  return kExitOk;
}

std::vector<DeltaIssCert> certify_all(const NetworkDocument& doc) {
  std::vector<DeltaIssCert> certs;
  for (std::size_t i = 0; i < doc.network.subsystems.size(); ++i) {
    const auto& sub = doc.network.subsystems[i];
    const auto& weights = doc.extras[i].weights;
    certs.push_back(
        certify_delta_iss_affine(sub, weights ? *weights : identity_weights(sub)));
  }
  return certs;
}

int cmd_certify(const Options& opt) {
  auto doc = load_network_document(opt.spec_path);
  auto certs = certify_all(doc);

  std::ostringstream report;
  report << "certification report (seed = " << opt.seed << ")\n";
  bool ok = true;
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const auto& sub = doc.network.subsystems[i];
    const auto& c = certs[i];
    report << "subsystem " << sub.id() << ": kappa =";
    for (double k : c.kappa) report << " " << k;
    report << ", rho slopes =";
    for (double r : c.rho_slope) report << " " << r;
    report << ", mu = " << c.mu << ", gamma slopes =";
    for (double g : c.gamma_slope) report << " " << g;
    report << ", common V = " << (c.common ? "yes" : "no") << "\n";
    auto check = check_cert_sampled(sub, c, opt.samples, opt.seed + i);
    report << "  sampled check: " << check.samples
           << " samples, violations = " << check.violations.size() << "\n";
    for (const auto& v : check.violations) {
      report << "    " << v.kind << ": lhs = " << v.lhs << " rhs = " << v.rhs << " at "
             << v.witness << "\n";
    }
    ok = ok && check.ok();
  }
  std::cout << report.str();
  if (!opt.out_dir.empty()) {
    ensure_out_dir(opt.out_dir);
    std::ofstream os(fs::path(opt.out_dir) / "certify.txt");
    os << report.str();
  }
  return ok ? kExitOk : kExitGate;
}

int cmd_compose(const Options& opt) {
  auto doc = load_network_document(opt.spec_path);
  auto certs = certify_all(doc);
  const Splitters theta = theta_of(opt);

  std::vector<AltSimCert> ascs;
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const auto& sub = doc.network.subsystems[i];
    const int kd = opt.kd > 0 ? opt.kd : sub.dwell_time();
    ascs.push_back(build_alt_sim(sub, certs[i], opt.eta, opt.epsilon, kd, theta));
  }

  GainMatrix gm = gain_matrix(ascs, doc.network.edges);
  auto sg = check_small_gain(gm);

  std::ostringstream report;
  report << "composition report (seed = " << opt.seed << ")\n";
  report << "theta = (" << theta.t1 << ", " << theta.t2 << ", " << theta.t3
         << "), epsilon = " << opt.epsilon << ", eta = " << opt.eta << "\n";
  for (std::size_t i = 0; i < ascs.size(); ++i) {
    report << "subsystem " << doc.network.subsystems[i].id() << ": sigma = "
           << ascs[i].sigma << ", rho-hat slope = " << ascs[i].rho_hat_slope
           << ", eps~ = " << ascs[i].eps_tilde
           << ", eps^ = " << relation_radius(ascs[i], ascs[i].alpha) << "\n";
  }
  report << "small gain: " << (sg.pass ? "pass" : "FAIL") << " over "
         << sg.cycles.size() << " simple cycles";
  if (sg.max_cycle_mean) report << ", max cycle mean = " << *sg.max_cycle_mean;
  if (sg.used_spectral_fallback) report << " (spectral fallback)";
  report << "\n";
  for (const auto& cyc : sg.cycles) {
    if (cyc.ok) continue;
    report << "  violated cycle:";
    for (int v : cyc.nodes) report << " " << v;
    if (cyc.slope_product) report << "  slope product = " << *cyc.slope_product;
    if (cyc.witness) report << "  witness s = " << *cyc.witness;
    report << "\n";
  }

  if (sg.pass) {
    auto deltas = compute_deltas(gm);
    auto nasc = composed_alt_sim(ascs, deltas);
    report << "deltas: theta = " << deltas.theta << ", lambda =";
    for (double l : deltas.lambda) report << " " << l;
    report << "\ncomposed: sigma~ = " << nasc.sigma_tilde << ", eps~ = "
           << nasc.eps_tilde << ", eps^ = " << nasc.radius() << "\n";
  }

  std::cout << report.str();
  if (!opt.out_dir.empty()) {
    ensure_out_dir(opt.out_dir);
    std::ofstream os(fs::path(opt.out_dir) / "compose.txt");
    os << report.str();
    if (opt.dot) {
      std::ofstream dot_os(fs::path(opt.out_dir) / "gains.dot");
      dot_os << gm.to_dot();
    }
  }
  return sg.pass ? kExitOk : kExitGate;
}

int cmd_synthesize(const Options& opt) {
  auto doc = load_network_document(opt.spec_path);
  ensure_out_dir(opt.out_dir);

  std::vector<UniformGrid> grids;
  for (const auto& sub : doc.network.subsystems)
    grids.emplace_back(sub.state_domain(), opt.eta);

  bool all_nonempty = true;
  std::cout << "synthesize: seed = " << opt.seed << ", eta = " << opt.eta << "\n";
  for (std::size_t i = 0; i < doc.network.subsystems.size(); ++i) {
    const auto& sub = doc.network.subsystems[i];
    if (!doc.extras[i].safe_output)
      throw ConfigError("subsystem " + std::to_string(sub.id()) +
                        " has no safe box in the spec document");
    auto fts = build_finite_ts(sub, opt.eta,
                               inputs_for(doc.network, sub, grids, opt.varpi),
                               opt.materialize, SinkPolicy::absorbing, opt.workers);
    Box assumption = doc.extras[i].assumption
                         ? *doc.extras[i].assumption
                         : (sub.internal_dim() > 0 ? sub.internal_domain().front()
                                                   : Box(Vec::Zero(1), Vec::Ones(1)));
    SynthesisOptions sopt;
    sopt.workers = opt.workers;
    SynthesisStats stats;
    auto ctrl = std::make_shared<SafetyController>(
        solve_safety(fts, SafetySpec{*doc.extras[i].safe_output, opt.steps},
                     assumption, sopt, &stats));
    std::cout << "  subsystem " << sub.id() << ": winning " << ctrl->winning_count()
              << "/" << fts.aug_count() << " aug states in " << stats.iterations
              << " sweeps\n";
    if (ctrl->empty()) {
      std::cout << "  subsystem " << sub.id() << ": EMPTY winning set\n";
      all_nonempty = false;
      continue;
    }
    const double radius = opt.radius >= 0.0 ? opt.radius : opt.eta / 2.0;
    RefinedController refined = refine_controller(ctrl, fts, radius);
    refined.dump_file(
        (fs::path(opt.out_dir) / ("subsystem_" + std::to_string(sub.id()) + ".ctl"))
            .string());
  }
  return all_nonempty ? kExitOk : kExitGate;
}

int cmd_simulate(const Options& opt) {
  auto doc = load_network_document(opt.spec_path);
  ensure_out_dir(opt.out_dir);
  if (opt.controllers_dir.empty())
    throw ConfigError("--controllers directory is required");

  std::vector<RefinedController> controllers;
  std::vector<Box> verdict;
  for (std::size_t i = 0; i < doc.network.subsystems.size(); ++i) {
    const auto& sub = doc.network.subsystems[i];
    controllers.push_back(RefinedController::load_file(
        (fs::path(opt.controllers_dir) / ("subsystem_" + std::to_string(sub.id()) + ".ctl"))
            .string()));
    verdict.push_back(doc.extras[i].safe_output ? *doc.extras[i].safe_output
                                                : controllers.back().controller().safe_output());
  }

  /* initial state: --x0 flat list, or seeded uniform inside the safe boxes */
  Rng rng(opt.seed);
  std::vector<Vec> x0;
  std::size_t consumed = 0;
  for (std::size_t i = 0; i < doc.network.subsystems.size(); ++i) {
    const int n = doc.network.subsystems[i].state_dim();
    Vec x(n);
    if (!opt.x0.empty()) {
      if (consumed + n > opt.x0.size())
        throw ConfigError("--x0 has too few entries");
      for (int r = 0; r < n; ++r) x[r] = opt.x0[consumed + r];
      consumed += n;
    } else {
      for (int r = 0; r < n; ++r) {
        std::uniform_real_distribution<double> u(verdict[i].lower()[std::min(r, verdict[i].dim() - 1)],
                                                 verdict[i].upper()[std::min(r, verdict[i].dim() - 1)]);
        x[r] = u(rng);
      }
    }
    x0.push_back(x);
  }

  auto result = simulate_closed_loop(doc.network, controllers, x0, opt.steps, verdict);
  const std::string csv_path = (fs::path(opt.out_dir) / "trajectory.csv").string();
  std::ofstream csv(csv_path);
  write_trajectory_csv(csv, result, doc.network);
  std::cout << "simulate: seed = " << opt.seed << ", steps = " << opt.steps
            << ", safe = " << (result.safe ? "yes" : "no");
  if (result.failure_step)
    std::cout << ", failure at step " << *result.failure_step;
  std::cout << " -> " << csv_path << "\n";
  return result.safe ? kExitOk : kExitGate;
}

int cmd_traffic(const Options& opt) {
  TrafficParams params;
  params.link_count = opt.scale_links;
  params.eta = opt.eta;

  PipelineConfig config;
  config.theta = theta_of(opt);
  config.epsilon = opt.epsilon;
  config.cert_samples = opt.samples;
  config.altsim_samples = opt.samples;
  config.composed_samples = std::max<std::size_t>(1, opt.samples / 10);
  config.steps = opt.steps;
  config.seed = opt.seed;
  config.workers = opt.workers;
  config.symmetry = opt.symmetry;
  config.materialize = opt.materialize;

  auto report = run_traffic_pipeline(params, config);
  std::cout << report.text();
  if (!opt.out_dir.empty()) {
    ensure_out_dir(opt.out_dir);
    std::ofstream os(fs::path(opt.out_dir) / "traffic_report.txt");
    os << report.text();
    std::ofstream csv(fs::path(opt.out_dir) / "trajectory.csv");
    write_trajectory_csv(csv, report.closed_loop,
                         build_traffic_network(params));
  }
  return report.pass ? kExitOk : kExitGate;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compositional finite abstractions and safety synthesis for "
               "switched systems"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* cmd, bool needs_spec) {
    auto* spec = cmd->add_option("--spec", opt.spec_path, "network document (JSON)");
    if (needs_spec) spec->required();
    cmd->add_option("--eta", opt.eta, "state quantization parameter");
    cmd->add_option("--varpi", opt.varpi, "internal-input quantization parameter");
    cmd->add_option("--epsilon", opt.epsilon, "dwell exponent (> 1)");
    cmd->add_option("--kd", opt.kd, "dwell time override");
    cmd->add_option("--theta", opt.theta, "splitter weights t1 t2 t3")->expected(3);
    cmd->add_option("--samples", opt.samples, "sample count for the checks");
    cmd->add_option("--seed", opt.seed, "random seed (recorded in reports)");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--workers", opt.workers, "worker threads");
    cmd->add_option("--steps", opt.steps, "closed-loop horizon");
    cmd->add_flag("--materialize", opt.materialize, "materialize transition tables");
    cmd->add_flag("--dot", opt.dot, "export DOT graphs (small instances)");
    cmd->add_flag("--symmetry", opt.symmetry, "exploit ring symmetry");
  };

  auto* c_abstract = app.add_subcommand("abstract", "build and dump finite abstractions");
  add_common(c_abstract, true);
  auto* c_certify = app.add_subcommand("certify", "delta-ISS certification + sampled check");
  add_common(c_certify, true);
  auto* c_compose = app.add_subcommand("compose", "gains, small-gain check, composed certificate");
  add_common(c_compose, true);
  auto* c_synth = app.add_subcommand("synthesize", "safety controller synthesis");
  add_common(c_synth, true);
  c_synth->add_option("--radius", opt.radius, "refinement radius (default eta/2)");
  auto* c_sim = app.add_subcommand("simulate", "closed-loop simulation with dumped controllers");
  add_common(c_sim, true);
  c_sim->add_option("--controllers", opt.controllers_dir, "controller dump directory")->required();
  c_sim->add_option("--x0", opt.x0, "flat initial state (all subsystems)");
  auto* c_traffic = app.add_subcommand("traffic", "road-traffic pipeline end to end");
  add_common(c_traffic, false);
  c_traffic->add_option("--scale-links", opt.scale_links, "number of links");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_abstract->parsed()) return cmd_abstract(opt);
    if (c_certify->parsed()) return cmd_certify(opt);
    if (c_compose->parsed()) return cmd_compose(opt);
    if (c_synth->parsed()) return cmd_synthesize(opt);
    if (c_sim->parsed()) return cmd_simulate(opt);
    if (c_traffic->parsed()) return cmd_traffic(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NotContractive& e) {
    std::cerr << "gate failed: " << e.what() << "\n";
    return kExitGate;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBuild;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBuild;
  }
  return kExitConfig;
}
