/*
 * composition.hh
 *
 * Small-gain machinery for networks of abstractions: the gain matrix
 * gamma_ij built from per-subsystem alternating simulation functions, the
 * cycle condition, the scaling functions delta_i, the composed network
 * certificate, and the interconnection of finite abstractions.
 */

#ifndef SYMCO_COMPOSITION_HH_
#define SYMCO_COMPOSITION_HH_

#include <optional>
#include <vector>

#include "symco/abstraction.hh"
#include "symco/certification.hh"
#include "symco/system.hh"

namespace symco {

class GainMatrix {
public:
  explicit GainMatrix(int n);

  int size() const { return n_; }
  void set(int i, int j, KinfFn g); /* 1-based subsystem positions */
  const std::optional<KinfFn>& at(int i, int j) const;
  bool all_linear() const;
  /* slope matrix with 0 for absent entries; NonLinearGains otherwise */
  std::vector<std::vector<double>> slopes() const;

  std::string to_dot() const;

private:
  int n_;
  std::vector<std::optional<KinfFn>> entries_;
};

/* gamma_ii = sigma_i * Id; gamma_ij = rho_hat_i o alpha_j^{-1} on edges */
GainMatrix gain_matrix(const std::vector<AltSimCert>& ascs,
                       const std::vector<Edge>& edges);

struct CycleVerdict {
  std::vector<int> nodes; /* 1-based, in arc order */
  bool ok = false;
  std::optional<double> slope_product; /* set for all-linear cycles */
  std::optional<double> witness;       /* violating s when !ok */
};

struct SmallGainReport {
  bool pass = false;
  std::vector<CycleVerdict> cycles;
  bool used_spectral_fallback = false;
  /* max geometric cycle mean of the slope matrix (linear gains) */
  std::optional<double> max_cycle_mean;
};

/* enumerates the simple cycles of the gain digraph and tests each composed
 * gain below the identity; beyond the enumeration budget an exact
 * log-domain spectral test takes over (linear gains only, CycleExplosion
 * otherwise) */
SmallGainReport check_small_gain(const GainMatrix& gm,
                                 std::size_t cycle_budget = 1000000);

/* scalars lambda_i > 0 with max_j slope(gamma_ij) lambda_j <= theta lambda_i
 * for some theta < 1; max-algebra fixed-point iteration with a path-closure
 * fallback; the returned pair always satisfies the inequality */
struct DeltaResult {
  std::vector<double> lambda;
  double theta = 0.0;
};
DeltaResult compute_deltas(const GainMatrix& gm);

/* network-level certificate: max_i (1/lambda_i) S_i */
struct NetworkAltSimCert {
  std::vector<AltSimCert> parts;
  std::vector<double> lambda;
  double sigma_tilde = 0.0;
  double eps_tilde = 0.0;

  double evaluate(const std::vector<Vec>& x, const std::vector<Vec>& xh,
                  const std::vector<int>& p, const std::vector<int>& l) const;
  /* network output lower bound: min_i (1/lambda_i) alpha_i, and its inverse */
  double alpha_eval(double s) const;
  double alpha_inverse(double t) const;
  double radius() const { return eps_tilde == 0.0 ? 0.0 : alpha_inverse(eps_tilde); }
};

NetworkAltSimCert composed_alt_sim(const std::vector<AltSimCert>& ascs,
                                   const DeltaResult& deltas);

/* Remark-style internal input set of subsystem `id`: one block per feeding
 * neighbor, holding the image of the neighbor's state grid under its
 * output block, indexed exactly like the neighbor's grid */
InternalInputSet coupled_inputs(const NetworkSpec& net, int id,
                                const std::vector<UniformGrid>& grids);

/* network of finite abstractions with internal inputs resolved through the
 * coupling wh_ij = yh_ji evaluated at the current product state */
class NetworkTransitionSystem {
public:
  NetworkTransitionSystem(const NetworkSpec& net,
                          std::vector<FiniteTransitionSystem> components);

  const NetworkSpec& network() const { return *net_; }
  const std::vector<FiniteTransitionSystem>& components() const { return components_; }

  /* internal-input index of component ci induced by the product cells */
  std::size_t coupled_widx(int ci, const std::vector<std::size_t>& cells) const;

  /* per-component successor sets under external input u (the product set is
   * their cartesian product) */
  std::vector<std::vector<AugState>> component_successors(
      const std::vector<AugState>& state, const std::vector<int>& u) const;

private:
  const NetworkSpec* net_;
  std::vector<FiniteTransitionSystem> components_;
  /* per component, per internal block: where the feeding value comes from
   * and how its position in the sorted block list enters the mixed-radix
   * input index */
  struct BlockRef {
    int source_ci;
    Mat output; /* C_ji of the source aimed at this component */
    std::size_t stride;
  };
  std::vector<std::vector<BlockRef>> block_refs_;
};

/* validates the Remark-style point lists against the neighbor output-grid
 * images (CouplingMismatch) and assembles the network */
NetworkTransitionSystem interconnect_finite(const NetworkSpec& net,
                                            std::vector<FiniteTransitionSystem> ftss);

/* sampled check of both internal-input-free displays on the interconnected
 * pair, minimizing over product successors */
FalsificationReport verify_composed_sampled(const NetworkSpec& net,
                                            const NetworkTransitionSystem& nts,
                                            const NetworkAltSimCert& nasc,
                                            std::size_t count, std::uint64_t seed);

}  // namespace symco

#endif /* SYMCO_COMPOSITION_HH_ */
