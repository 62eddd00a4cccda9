#include "symco/traffic.hh"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "symco/errors.hh"
#include "symco/sampling.hh"

namespace symco {

namespace {

class StageClock {
public:
  explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}
  template <typename F>
  auto run(const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record(name, t0);
    } else {
      auto result = fn();
      record(name, t0);
      return result;
    }
  }

private:
  void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    sink_.push_back({name, dt.count()});
  }
  std::vector<StageTiming>& sink_;
};

}  // namespace

void TrafficParams::validate() const {
  /* a one-link ring would couple a link to itself, which the partitioned
   * input-output structure excludes */
  if (link_count < 2) throw ConfigError("traffic: the ring needs at least two links");
  if (!(tau > 0.0) || !(v > 0.0) || !(d > 0.0) || !(entry_flow > 0.0) ||
      !(eta > 0.0) || !(safe_density > 0.0))
    throw ConfigError("traffic: parameters must be positive");
  if (!(flow_ratio() < std::min(exit_keep_odd, exit_keep_even)))
    throw ConfigError("traffic: tau*v/d must stay below the keep fractions");
}

NetworkSpec build_traffic_network(const TrafficParams& params) {
  params.validate();
  const int N = params.link_count;
  const double r = params.flow_ratio();

  Mat A(2, 2);
  A << params.exit_keep_odd - r, 0.0, r, params.exit_keep_even - r;
  Mat D(2, 1);
  D << r, 0.0;
  Vec b1 = Vec::Zero(2);
  Vec b2(2);
  b2 << params.entry_flow, 0.0;

  const Box state_box(Vec::Zero(2), Vec::Constant(2, params.safe_density));
  const Box internal_box(Vec::Zero(1), Vec::Constant(1, params.safe_density));

  NetworkSpec net;
  for (int i = 1; i <= N; ++i) {
    const int prev = i == 1 ? N : i - 1;
    const int next = i == N ? 1 : i + 1;
    std::vector<ModeDynamics> modes{{A, D, b1}, {A, D, b2}};
    Mat C_self = Mat::Identity(2, 2);
    Mat C_next(1, 2);
    C_next << 0.0, 1.0;
    std::vector<OutputBlock> outputs{{i, C_self}, {next, C_next}};
    std::vector<InternalBlock> internals{{prev, 1}};
    net.subsystems.emplace_back(i, std::move(modes), BoxList{state_box},
                                BoxList{internal_box}, std::move(internals),
                                std::move(outputs), /*dwell_time=*/1,
                                KinfFn::identity());
  }
  for (int i = 1; i <= N; ++i) net.edges.push_back({i, i == N ? 1 : i + 1});
  return net;
}

TrafficPipelineReport run_traffic_pipeline(const TrafficParams& params,
                                           const PipelineConfig& config) {
  TrafficPipelineReport report;
  report.params = params;
  report.config = config;
  StageClock clock(report.timings);
  Rng rng(config.seed);

  const NetworkSpec net = clock.run("build", [&] { return build_traffic_network(params); });
  const int N = params.link_count;

  auto validation = validate_network(net);
  if (!validation.pass) {
    report.failed_stage = "validate";
    return report;
  }

  /* certification; the ring is symmetric, so every link must certify
   * identically */
  std::vector<DeltaIssCert> certs = clock.run("certify", [&] {
    std::vector<DeltaIssCert> cs;
    for (const auto& sub : net.subsystems)
      cs.push_back(certify_delta_iss_affine(sub, identity_weights(sub)));
    return cs;
  });
  report.kappa = certs[0].max_kappa();
  report.rho_slope = certs[0].max_rho_slope();
  report.mu = certs[0].mu;
  report.cert_common = certs[0].common;
  for (const auto& c : certs) {
    if (c.max_kappa() != report.kappa || c.max_rho_slope() != report.rho_slope) {
      report.failed_stage = "certify-symmetry";
      return report;
    }
  }

  auto cert_check = clock.run("certify-check", [&] {
    return check_cert_sampled(net.subsystems[0], certs[0], config.cert_samples,
                              config.seed);
  });
  report.cert_violations = cert_check.violations.size();
  if (!cert_check.ok()) {
    report.failed_stage = "certify-check";
    return report;
  }

  /* abstractions with the coupled internal point lists */
  std::vector<UniformGrid> grids;
  for (const auto& sub : net.subsystems) grids.emplace_back(sub.state_domain(), params.eta);
  std::vector<FiniteTransitionSystem> ftss = clock.run("abstract", [&] {
    std::vector<FiniteTransitionSystem> out;
    for (const auto& sub : net.subsystems) {
      out.push_back(build_finite_ts(sub, params.eta, coupled_inputs(net, sub.id(), grids),
                                    config.materialize, SinkPolicy::absorbing,
                                    config.workers));
    }
    return out;
  });

  std::vector<AltSimCert> ascs = clock.run("alt-sim", [&] {
    std::vector<AltSimCert> out;
    for (int i = 0; i < N; ++i) {
      out.push_back(build_alt_sim(net.subsystems[static_cast<std::size_t>(i)],
                                  certs[static_cast<std::size_t>(i)], params.eta,
                                  config.epsilon, /*dwell_time=*/1, config.theta));
    }
    return out;
  });
  report.sigma = ascs[0].sigma;
  report.rho_hat = ascs[0].rho_hat_slope;
  report.eps_tilde = ascs[0].eps_tilde;
  for (const auto& a : ascs) {
    if (a.eps_tilde != report.eps_tilde) {
      report.failed_stage = "alt-sim-symmetry";
      return report;
    }
  }

  report.altsim_violations = 0;
  const int verify_links = config.symmetry ? 1 : N;
  for (int i = 0; i < verify_links; ++i) {
    auto check = clock.run("alt-sim-check", [&] {
      return verify_alt_sim_sampled(net.subsystems[static_cast<std::size_t>(i)],
                                    ftss[static_cast<std::size_t>(i)],
                                    ascs[static_cast<std::size_t>(i)],
                                    config.altsim_samples, config.seed + i);
    });
    report.altsim_violations += check.violations.size();
  }
  if (report.altsim_violations != 0) {
    report.failed_stage = "alt-sim-check";
    return report;
  }

  /* small gain and composition */
  GainMatrix gm = gain_matrix(ascs, net.edges);
  report.gains_below_identity = true;
  for (int i = 1; i <= N; ++i) {
    for (int j = 1; j <= N; ++j) {
      const auto& e = gm.at(i, j);
      if (e && !e->lt_identity().holds) report.gains_below_identity = false;
    }
  }
  auto sg = clock.run("small-gain", [&] { return check_small_gain(gm); });
  report.small_gain_pass = sg.pass;
  report.cycle_count = sg.cycles.size();
  report.max_cycle_mean = sg.max_cycle_mean.value_or(0.0);
  if (!sg.pass) {
    report.failed_stage = "small-gain";
    return report;
  }

  auto deltas = clock.run("deltas", [&] { return compute_deltas(gm); });
  report.lambda = deltas.lambda;
  report.theta_contraction = deltas.theta;

  NetworkAltSimCert nasc = composed_alt_sim(ascs, deltas);
  report.sigma_tilde = nasc.sigma_tilde;
  report.eps_tilde_net = nasc.eps_tilde;
  report.eps_hat = nasc.radius();

  auto nts = clock.run("interconnect", [&] {
    return interconnect_finite(net, std::move(ftss));
  });
  auto composed_check = clock.run("composed-check", [&] {
    return verify_composed_sampled(net, nts, nasc, config.composed_samples, config.seed);
  });
  report.composed_violations = composed_check.violations.size();
  if (!composed_check.ok()) {
    report.failed_stage = "composed-check";
    return report;
  }

  /* local safety synthesis under the assume-guarantee box */
  const double safe_hi = params.safe_density - params.eta;
  const Box safe_box(Vec::Zero(2), Vec::Constant(2, safe_hi));
  const Box assumption(Vec::Zero(1), Vec::Constant(1, safe_hi));
  const auto& comps = nts.components();
  report.aug_count_per_link = comps[0].aug_count();

  std::vector<RefinedController> controllers;
  SynthesisStats stats;
  clock.run("synthesize", [&] {
    const int synth_links = config.symmetry ? 1 : N;
    std::vector<std::shared_ptr<const SafetyController>> ctrls;
    for (int i = 0; i < synth_links; ++i) {
      SynthesisStats s;
      SynthesisOptions opt;
      opt.monotone_w = config.monotone_w;
      opt.workers = config.workers;
      auto ctrl = std::make_shared<SafetyController>(solve_safety(
          comps[static_cast<std::size_t>(i)], SafetySpec{safe_box, config.steps},
          assumption, opt, &s));
      report.winning_sizes.push_back(ctrl->winning_count());
      if (i == 0) stats = s;
      ctrls.push_back(std::move(ctrl));
    }
    for (int i = 0; i < N; ++i) {
      const auto& ctrl = ctrls[static_cast<std::size_t>(config.symmetry ? 0 : i)];
      controllers.push_back(refine_controller(ctrl, comps[static_cast<std::size_t>(i)],
                                              relation_radius(ascs[static_cast<std::size_t>(i)],
                                                              ascs[static_cast<std::size_t>(i)].alpha)));
    }
  });
  report.synthesis_iterations = stats.iterations;
  for (std::size_t s : report.winning_sizes) {
    if (s == 0) {
      report.failed_stage = "synthesize-empty";
      return report;
    }
  }

  /* randomized initial densities inside the safe box */
  std::vector<Vec> x0;
  for (int i = 0; i < N; ++i) {
    Vec x(2);
    for (int r = 0; r < 2; ++r)
      x[r] = std::uniform_real_distribution<double>(0.0, safe_hi)(rng);
    x0.push_back(x);
  }

  std::vector<Box> verdict(static_cast<std::size_t>(N),
                           Box(Vec::Zero(2), Vec::Constant(2, params.safe_density)));
  auto loop = clock.run("simulate", [&] {
    return simulate_closed_loop(net, controllers, x0, config.steps, verdict);
  });
  report.trajectory_safe = loop.safe;
  report.max_density = 0.0;
  for (const auto& step : loop.trajectory) {
    for (const auto& x : step.x) report.max_density = std::max(report.max_density, x.maxCoeff());
  }
  if (config.keep_trajectory) report.closed_loop = std::move(loop);
  if (!report.trajectory_safe) {
    report.failed_stage = "simulate";
    return report;
  }

  report.pass = true;
  return report;
}

std::string TrafficPipelineReport::text() const {
  std::ostringstream os;
  os << "traffic pipeline report\n";
  os << "=======================\n";
  os << "seed = " << config.seed << "\n";
  os << "links = " << params.link_count << "  eta = " << params.eta
     << "  epsilon = " << config.epsilon << "  dwell = 1\n";
  os << "theta = (" << config.theta.t1 << ", " << config.theta.t2 << ", "
     << config.theta.t3 << ")\n\n";

  os << "[certify]     kappa = " << kappa << "  rho slope = " << rho_slope
     << "  mu = " << mu << "  common V = " << (cert_common ? "yes" : "no") << "\n";
  os << "[cert check]  samples = " << config.cert_samples
     << "  violations = " << cert_violations << "\n";
  os << "[alt-sim]     sigma = " << sigma << "  rho-hat slope = " << rho_hat
     << "  eps~ = " << eps_tilde << "\n";
  os << "[alt check]   samples = " << config.altsim_samples
     << "  violations = " << altsim_violations << "\n";
  os << "[gains]       all gamma_ij < Id = " << (gains_below_identity ? "yes" : "no")
     << "\n";
  os << "[small gain]  pass = " << (small_gain_pass ? "yes" : "no")
     << "  cycles = " << cycle_count << "  max cycle mean = " << max_cycle_mean
     << "\n";
  os << "[deltas]      theta = " << theta_contraction << "  lambda =";
  for (double l : lambda) os << " " << l;
  os << "\n";
  os << "[composed]    sigma~ = " << sigma_tilde << "  eps~ = " << eps_tilde_net
     << "  eps^ = " << eps_hat << "  violations = " << composed_violations << "\n";
  os << "[synthesis]   aug states per link = " << aug_count_per_link
     << "  winning =";
  for (std::size_t w : winning_sizes) os << " " << w;
  os << "  iterations = " << synthesis_iterations << "\n";
  os << "[loop]        steps = " << config.steps << "  safe = "
     << (trajectory_safe ? "yes" : "no") << "  max density = " << max_density << "\n";
  os << "[times]      ";
  char buf[64];
  for (const auto& t : timings) {
    std::snprintf(buf, sizeof buf, " %s=%.3fs", t.stage.c_str(), t.seconds);
    os << buf;
  }
  os << "\n";
  os << "verdict: " << (pass ? "PASS" : ("FAIL (" + failed_stage + ")")) << "\n";
  return os.str();
}

}  // namespace symco
