/*
 * abstraction.hh
 *
 * The dwell-time transition system of a switched subsystem and its finite
 * abstraction over a uniform grid.
 *
 * States are triples (x, p, l): point/cell, active mode, dwell counter.
 * A transition under external input u exists only for u = p; the successor
 * mode p' may change only when the counter has reached dwell_time - 1.
 * Abstract successors of (xh, p, l) under wh are all grid points within
 * infinity-distance eta of the affine image, one per dwell scenario.
 */

#ifndef SYMCO_ABSTRACTION_HH_
#define SYMCO_ABSTRACTION_HH_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "symco/grid.hh"
#include "symco/system.hh"

namespace symco {

inline constexpr std::size_t kSinkCell = static_cast<std::size_t>(-1);

/* abstract augmented state; cell == kSinkCell marks the absorbing
 * out-of-domain pseudo-state */
struct AugState {
  std::size_t cell;
  int mode;  /* 1..m */
  int dwell; /* 0..k_d-1 */

  bool is_sink() const { return cell == kSinkCell; }
  friend bool operator==(const AugState& a, const AugState& b) {
    return a.cell == b.cell && a.mode == b.mode && a.dwell == b.dwell;
  }
};

/* concrete augmented state of T(Sigma) */
struct ConcreteAug {
  Vec x;
  int mode;
  int dwell;
};

/* admissible (p', l') pairs from (p, l); the three dwell scenarios */
std::vector<std::pair<int, int>> dwell_scenarios(int mode_count, int dwell_time,
                                                 int p, int l);

/* successors of T(Sigma); empty when u != p */
std::vector<ConcreteAug> concrete_successors(const SwitchedSubsystem& sub,
                                             const ConcreteAug& s, int u,
                                             const Vec& w);

/* out-of-domain images: absorb into the sink state, or refuse to build */
enum class SinkPolicy { absorbing, forbid };

/* finite internal input set: a product of per-neighbor point lists
 * (Remark-style explicit sets) or the quantization of the input domain */
class InternalInputSet {
public:
  struct Block {
    int source = -1; /* feeding subsystem id, -1 when not coupled */
    int dim = 0;
    std::vector<double> flat; /* count * dim coordinates */
    std::size_t count() const { return dim == 0 ? 0 : flat.size() / dim; }
  };

  /* q = 0: exactly one empty point */
  static InternalInputSet none();
  /* [W]_varpi as a single block */
  static InternalInputSet from_grid(const UniformGrid& g, int source = -1);
  static InternalInputSet from_blocks(std::vector<Block> blocks);

  std::size_t size() const { return size_; }
  int dim() const { return dim_; }
  void point(std::size_t widx, double* out) const;
  Vec point(std::size_t widx) const;
  const std::vector<Block>& blocks() const { return blocks_; }

private:
  std::vector<Block> blocks_;
  int dim_ = 0;
  std::size_t size_ = 1;
};

class FiniteTransitionSystem {
public:
  const UniformGrid& grid() const { return *grid_; }
  const InternalInputSet& inputs() const { return inputs_; }
  const SwitchedSubsystem& subsystem() const;
  bool has_subsystem() const { return sub_.has_value(); }

  double eta() const { return grid_->eta(); }
  int mode_count() const { return mode_count_; }
  int dwell_time() const { return dwell_time_; }
  SinkPolicy sink_policy() const { return sink_policy_; }
  bool materialized() const { return materialized_; }

  std::size_t cell_count() const { return grid_->size(); }
  std::size_t aug_count() const {
    return cell_count() * static_cast<std::size_t>(mode_count_) *
           static_cast<std::size_t>(dwell_time_);
  }

  std::size_t aug_index(const AugState& s) const;
  AugState aug_state(std::size_t idx) const;

  /* successor cells of (cell, p) under wh; empty result = sink image */
  void successor_cells(std::size_t cell, int p, std::size_t widx,
                       std::vector<std::size_t>& out) const;
  std::size_t successor_cell_count(std::size_t cell, int p, std::size_t widx) const;

  /* full successor set in the augmented space, incl. dwell
   * scenarios and the sink policy; empty when u != p */
  std::vector<AugState> successors(const AugState& s, int u, std::size_t widx) const;

  /* total number of (cell, mode, input) -> cell transitions; this is the
   * whole abstraction enumerated once (parallel over cells) */
  std::uint64_t transition_count(int workers = 1) const;

  /* binary persistence; materialized tables round-trip, lazy systems dump
   * their structure and reload as query-only relations when materialized */
  void dump(std::ostream& os) const;
  static FiniteTransitionSystem load(std::istream& is);
  void dump_file(const std::string& path) const;
  static FiniteTransitionSystem load_file(const std::string& path);

  /* DOT rendering, guarded to small instances */
  std::string to_dot(std::size_t max_states = 5000) const;

  friend FiniteTransitionSystem build_finite_ts(const SwitchedSubsystem& sub,
                                                double eta, double varpi,
                                                bool materialize, SinkPolicy policy,
                                                int workers);
  friend FiniteTransitionSystem build_finite_ts(const SwitchedSubsystem& sub,
                                                double eta, InternalInputSet inputs,
                                                bool materialize, SinkPolicy policy,
                                                int workers);

private:
  FiniteTransitionSystem() = default;
  void materialize_table(int workers);
  std::size_t row_index(std::size_t cell, int p, std::size_t widx) const;
  void lazy_successor_cells(std::size_t cell, int p, std::size_t widx,
                            std::vector<std::size_t>& out) const;

  std::optional<SwitchedSubsystem> sub_;
  std::optional<UniformGrid> grid_;
  InternalInputSet inputs_;
  int mode_count_ = 0;
  int dwell_time_ = 1;
  SinkPolicy sink_policy_ = SinkPolicy::absorbing;
  bool materialized_ = false;
  /* CSR over rows (cell, mode, widx) */
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> targets_;
};

/* quantize the internal input domain with varpi (> 0; explicit point lists
 * are required when no quantization is wanted) */
FiniteTransitionSystem build_finite_ts(const SwitchedSubsystem& sub, double eta,
                                       double varpi, bool materialize = false,
                                       SinkPolicy policy = SinkPolicy::absorbing,
                                       int workers = 1);
FiniteTransitionSystem build_finite_ts(const SwitchedSubsystem& sub, double eta,
                                       InternalInputSet inputs,
                                       bool materialize = false,
                                       SinkPolicy policy = SinkPolicy::absorbing,
                                       int workers = 1);

/* abstract successor set, free-standing reference path */
std::vector<AugState> abstract_successors(const SwitchedSubsystem& sub,
                                          const UniformGrid& grid, const AugState& s,
                                          int u, const Vec& wh, double eta,
                                          SinkPolicy policy = SinkPolicy::absorbing);

/* output runs of the switched system and of its transition system coincide
 * for every admissible switching sequence; checked bit-for-bit over K steps.
 * The sequence must respect the dwell time counted from a fresh start
 * (l_0 = 0), otherwise DwellViolation is thrown. */
bool run_equivalence_check(const SwitchedSubsystem& sub, const Vec& x0,
                           const std::vector<int>& switching,
                           const std::vector<Vec>& internal_inputs, int horizon);

}  // namespace symco

#endif /* SYMCO_ABSTRACTION_HH_ */
