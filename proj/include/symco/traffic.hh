/*
 * traffic.hh
 *
 * Road-traffic case study: a circular highway of identical two-cell links,
 * each with a signal-controlled entry, coupled in a ring.  Builds the
 * network and runs the full compositional pipeline: certify, abstract,
 * small gain, compose, synthesize, refine, simulate.
 */

#ifndef SYMCO_TRAFFIC_HH_
#define SYMCO_TRAFFIC_HH_

#include <cstdint>
#include <string>
#include <vector>

#include "symco/composition.hh"
#include "symco/synthesis.hh"
#include "symco/system.hh"

namespace symco {

struct TrafficParams {
  int link_count = 25;
  double tau = 10.0 / 3600.0; /* sampling period, hours */
  double v = 120.0;           /* flow speed, km/h */
  double d = 1.0;             /* cell length, km */
  double entry_flow = 12.0;   /* vehicles per green period */
  double exit_keep_odd = 0.9; /* fraction kept by cells with an entry */
  double exit_keep_even = 0.65;
  double eta = 0.03;
  double safe_density = 30.0; /* vehicles per cell, open upper bound */

  double flow_ratio() const { return tau * v / d; }
  void validate() const;
};

/* ring of two-cell links: x' = A x + D w + B_p, y = x, neighbor output is
 * the second cell's density */
NetworkSpec build_traffic_network(const TrafficParams& params);

struct PipelineConfig {
  Splitters theta{0.66, 0.335, 0.005};
  double epsilon = 2.0;
  std::size_t cert_samples = 10000;
  std::size_t altsim_samples = 10000;
  std::size_t composed_samples = 1000;
  int steps = 600;
  std::uint64_t seed = 1;
  int workers = 1;
  bool monotone_w = true;     /* the coupling enters with D >= 0 */
  bool symmetry = false;      /* certify/verify one link, replicate by symmetry */
  bool materialize = false;
  bool keep_trajectory = true;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct TrafficPipelineReport {
  TrafficParams params;
  PipelineConfig config;

  bool pass = false;
  std::string failed_stage; /* empty when every gate passed */

  /* certification */
  double kappa = 0.0;
  double rho_slope = 0.0;
  double mu = 1.0;
  bool cert_common = false;
  std::size_t cert_violations = 0;

  /* alternating simulation */
  double sigma = 0.0;
  double rho_hat = 0.0;
  double eps_tilde = 0.0;
  std::size_t altsim_violations = 0;

  /* composition */
  bool gains_below_identity = false;
  bool small_gain_pass = false;
  std::size_t cycle_count = 0;
  double max_cycle_mean = 0.0;
  std::vector<double> lambda;
  double theta_contraction = 0.0;
  double sigma_tilde = 0.0;
  double eps_tilde_net = 0.0;
  double eps_hat = 0.0;
  std::size_t composed_violations = 0;

  /* synthesis */
  std::size_t aug_count_per_link = 0;
  std::vector<std::size_t> winning_sizes;
  std::size_t synthesis_iterations = 0;

  /* closed loop */
  bool trajectory_safe = false;
  double max_density = 0.0;
  ClosedLoopResult closed_loop;

  std::vector<StageTiming> timings;

  std::string text() const;
};

TrafficPipelineReport run_traffic_pipeline(const TrafficParams& params,
                                           const PipelineConfig& config);

}  // namespace symco

#endif /* SYMCO_TRAFFIC_HH_ */
