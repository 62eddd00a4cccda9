/*
 * system.hh
 *
 * Discrete-time switched subsystems with mode-indexed affine dynamics
 *
 *   x(k+1) = A_p x(k) + D_p w(k) + b_p,     y(k) = [C_1 x; C_2 x; ...]
 *
 * and networks of such subsystems coupled through their partitioned
 * internal inputs and outputs.
 */

#ifndef SYMCO_SYSTEM_HH_
#define SYMCO_SYSTEM_HH_

#include <optional>
#include <string>
#include <vector>

#include "symco/box.hh"
#include "symco/kinf.hh"

namespace symco {

/* one mode of the affine dynamics x' = A x + D w + b */
struct ModeDynamics {
  Mat A; /* n x n */
  Mat D; /* n x q (q may be 0) */
  Vec b; /* n */
};

/* the block of the internal input fed by neighbor `source` */
struct InternalBlock {
  int source; /* subsystem id */
  int dim;
};

/* the block of the output map aimed at subsystem `target`; the self block
 * (target == own id) is the external output */
struct OutputBlock {
  int target;
  Mat C; /* rows x n */
};

class SwitchedSubsystem {
public:
  SwitchedSubsystem(int id, std::vector<ModeDynamics> modes, BoxList state_domain,
                    BoxList internal_domain, std::vector<InternalBlock> internal_blocks,
                    std::vector<OutputBlock> output_blocks, int dwell_time,
                    KinfFn output_lipschitz);

  int id() const { return id_; }
  int state_dim() const { return n_; }
  int internal_dim() const { return q_; }
  int mode_count() const { return static_cast<int>(modes_.size()); }
  int dwell_time() const { return dwell_time_; }

  /* modes are numbered 1..m */
  const ModeDynamics& dynamics(int p) const;

  const BoxList& state_domain() const { return state_domain_; }
  const BoxList& internal_domain() const { return internal_domain_; }
  const std::vector<InternalBlock>& internal_blocks() const { return internal_blocks_; }
  const std::vector<OutputBlock>& output_blocks() const { return output_blocks_; }
  const KinfFn& output_lipschitz() const { return lipschitz_; }

  /* offset of neighbor j's block inside the internal input vector */
  int internal_block_offset(int source) const;

  /* output matrix aimed at `target`, nullptr when h_{i,target} == 0 */
  const Mat* output_matrix(int target) const;

  /* full stacked output [h_{block_1}; h_{block_2}; ...] */
  Vec output(const Vec& x) const;
  int output_dim() const { return output_dim_; }

  /* external output block C_ii x (identity when no self block is given) */
  Vec external_output(const Vec& x) const;
  int external_output_dim() const;

  /* the unique successor A_p x + D_p w + b_p; domain violations throw */
  Vec step(int p, const Vec& x, const Vec& w) const;

  /* same map without domain checks, for callers that iterate grids */
  void step_unchecked(int p, const double* x, const double* w, double* out) const;

private:
  int id_;
  int n_, q_;
  std::vector<ModeDynamics> modes_;
  BoxList state_domain_, internal_domain_;
  std::vector<InternalBlock> internal_blocks_;
  std::vector<OutputBlock> output_blocks_;
  int dwell_time_;
  KinfFn lipschitz_;
  int output_dim_;
};

/* directed coupling: w_{to,from} = y_{from,to} */
struct Edge {
  int from, to;
};

struct NetworkSpec {
  std::vector<SwitchedSubsystem> subsystems;
  std::vector<Edge> edges;

  const SwitchedSubsystem& by_id(int id) const;
  int index_of(int id) const;
};

/* per-edge containment verdict for Y_ji subset-of W_ij */
struct EdgeCheck {
  Edge edge;
  Vec image_lo, image_hi; /* exact interval image of C_ji over X_j */
  Vec block_lo, block_hi; /* the w_ij block of subsystem i's internal domain */
  bool contained;
};

struct NetworkValidation {
  bool pass = true;
  std::vector<EdgeCheck> edge_checks;
};

/* checks the interconnection constraint on every edge; exact interval
 * arithmetic over the affine output maps */
NetworkValidation validate_network(const NetworkSpec& net);

}  // namespace symco

#endif /* SYMCO_SYSTEM_HH_ */
