/* shared fixtures for the test suites */

#ifndef SYMCO_TESTS_HELPERS_HH_
#define SYMCO_TESTS_HELPERS_HH_

#include "symco/system.hh"
#include "symco/traffic.hh"

namespace symco::testing {

/* one road-traffic link (first link of a two-link ring); as a standalone
 * subsystem its internal input ranges over the [0,30] box */
inline SwitchedSubsystem traffic_link() {
  TrafficParams params;
  params.link_count = 2;
  NetworkSpec net = build_traffic_network(params);
  return net.subsystems.front();
}

/* a 1-D two-mode system with genuinely different weighted certificates:
 * weights (1) and (2), so mu = 2 */
inline SwitchedSubsystem multi_v_system() {
  Mat A1(1, 1), A2(1, 1), D1(1, 1), D2(1, 1);
  A1 << 0.5;
  A2 << 0.4;
  D1 << 0.3;
  D2 << 0.2;
  std::vector<ModeDynamics> modes{{A1, D1, Vec::Zero(1)}, {A2, D2, Vec::Zero(1)}};
  const Box state(Vec::Zero(1), Vec::Constant(1, 2.0));
  const Box input(Vec::Zero(1), Vec::Constant(1, 1.0));
  std::vector<OutputBlock> outputs{{1, Mat::Identity(1, 1)}};
  std::vector<InternalBlock> internals{{2, 1}};
  return SwitchedSubsystem(1, std::move(modes), BoxList{state}, BoxList{input},
                           std::move(internals), std::move(outputs), /*dwell=*/3,
                           KinfFn::identity());
}

}  // namespace symco::testing

#endif
