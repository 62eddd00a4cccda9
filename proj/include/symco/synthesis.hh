/*
 * synthesis.hh
 *
 * Safety controller synthesis on finite abstractions: the maximal
 * controlled invariant subset of the safe states, computed as a greatest
 * fixed point with Jacobi sweeps.  The controller's action is the successor
 * mode; actions that switch are available only when the dwell counter has
 * saturated, so synthesized switching signals respect the dwell time by
 * construction.  Internal inputs are adversarial within an assumption box
 * (the neighbors' guaranteed safe outputs).
 */

#ifndef SYMCO_SYNTHESIS_HH_
#define SYMCO_SYNTHESIS_HH_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "symco/abstraction.hh"
#include "symco/system.hh"

namespace symco {

struct SafetySpec {
  Box safe_output;  /* external-output constraint */
  int horizon = 600; /* closed-loop check length */
};

class SafetyController {
public:
  SafetyController(Box safe_output, int mode_count, int dwell_time,
                   std::vector<std::uint32_t> allowed);

  const Box& safe_output() const { return safe_output_; }
  int mode_count() const { return mode_count_; }
  int dwell_time() const { return dwell_time_; }
  std::size_t aug_count() const { return allowed_.size(); }

  bool winning(std::size_t aug) const { return allowed_[aug] != 0; }
  /* bitmask of allowed successor modes, bit (p-1) */
  std::uint32_t allowed_modes(std::size_t aug) const { return allowed_[aug]; }
  std::size_t winning_count() const;
  bool empty() const { return winning_count() == 0; }

private:
  Box safe_output_;
  int mode_count_;
  int dwell_time_;
  std::vector<std::uint32_t> allowed_;
};

struct SynthesisOptions {
  /* check only the extreme admissible internal points; valid for dynamics
   * monotone in w, cross-checked against full quantification in tests */
  bool monotone_w = false;
  int workers = 1;
};

struct SynthesisStats {
  std::size_t iterations = 0;
  std::vector<std::size_t> sizes; /* winning-set size after each sweep */
  std::size_t admissible_inputs = 0;
};

/* greatest fixed point of W -> { s in W ∩ Safe : exists action, for all
 * admissible inputs every successor stays in W and none is the sink };
 * an empty winning set is a reported outcome, not an exception */
SafetyController solve_safety(const FiniteTransitionSystem& fts, const SafetySpec& spec,
                              const Box& internal_assumption,
                              const SynthesisOptions& options = {},
                              SynthesisStats* stats = nullptr);

/* concrete-side controller: quantize onto the nearest winning grid point
 * within the relation radius, pick the lowest allowed successor mode */
class RefinedController {
public:
  RefinedController(std::shared_ptr<const SafetyController> controller,
                    UniformGrid grid, double epsilon_hat);

  struct Decision {
    std::size_t cell;  /* matched winning grid point */
    int next_mode;     /* lowest-index allowed successor mode */
  };

  /* nullopt when no winning grid point lies within the radius */
  std::optional<Decision> act(const Vec& x, int p, int l) const;

  /* lowest mode p with a winning match at dwell counter 0 */
  std::optional<int> initial_mode(const Vec& x) const;

  const SafetyController& controller() const { return *controller_; }
  const UniformGrid& grid() const { return grid_; }
  double epsilon_hat() const { return epsilon_hat_; }

  void dump(std::ostream& os) const;
  static RefinedController load(std::istream& is);
  void dump_file(const std::string& path) const;
  static RefinedController load_file(const std::string& path);

private:
  std::size_t aug_index(std::size_t cell, int p, int l) const;
  std::shared_ptr<const SafetyController> controller_;
  UniformGrid grid_;
  double epsilon_hat_;
};

RefinedController refine_controller(std::shared_ptr<const SafetyController> ctrl,
                                    const FiniteTransitionSystem& fts,
                                    double epsilon_hat);

struct TrajectoryStep {
  std::vector<Vec> x;     /* per subsystem */
  std::vector<int> mode;  /* mode applied at this step */
};

struct ClosedLoopResult {
  bool safe = true;
  std::optional<std::size_t> failure_step;     /* first unsafe/abandoned step */
  std::optional<int> failed_subsystem;         /* id, when known */
  bool controller_failure = false;             /* quantizer left the winning set */
  std::vector<TrajectoryStep> trajectory;      /* states 0..K-1 */
};

/* synchronous closed loop of the concrete network, internal inputs wired
 * as w_ij = y_ji, per-subsystem modes chosen by the refined controllers;
 * the verdict tests the external outputs against verdict_boxes (strict
 * upper bound, matching open "density below the limit" specs) */
ClosedLoopResult simulate_closed_loop(const NetworkSpec& net,
                                      const std::vector<RefinedController>& controllers,
                                      const std::vector<Vec>& x0, int steps,
                                      const std::vector<Box>& verdict_boxes);

/* step,subsystem,x...,mode rows */
void write_trajectory_csv(std::ostream& os, const ClosedLoopResult& result,
                          const NetworkSpec& net);

}  // namespace symco

#endif /* SYMCO_SYNTHESIS_HH_ */
