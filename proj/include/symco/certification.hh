/*
 * certification.hh
 *
 * Incremental input-to-state stability certificates for affine switched
 * subsystems, and the alternating simulation function they induce between
 * a subsystem and its finite abstraction.
 *
 * Certificates use weighted max-norms V_p(x, xh) = max_i M_p[i]|x_i - xh_i|
 * with diagonal weights.  For affine modes the contraction constant is the
 * weighted induced infinity norm of A_p, which makes every certified bound
 * an exact matrix-algebra identity rather than a numerical estimate.
 */

#ifndef SYMCO_CERTIFICATION_HH_
#define SYMCO_CERTIFICATION_HH_

#include <cstdint>
#include <string>
#include <vector>

#include "symco/abstraction.hh"
#include "symco/kinf.hh"
#include "symco/system.hh"

namespace symco {

struct DeltaIssCert {
  /* per-mode diagonal weights of V_p */
  std::vector<Vec> weights;
  /* per-mode contraction constants, strictly inside (0,1) */
  std::vector<double> kappa;
  /* per-mode linear input-gain slopes (0 when the mode ignores w) */
  std::vector<double> rho_slope;
  /* mode-switch amplification: V_p <= mu V_p' for all pairs */
  double mu = 1.0;
  /* per-mode triangle-inequality gain slopes */
  std::vector<double> gamma_slope;
  /* all V_p coincide */
  bool common = false;

  int mode_count() const { return static_cast<int>(weights.size()); }
  double V(int p, const Vec& x, const Vec& xh) const;

  /* comparison-function views of the slope data */
  KinfFn alpha_lo(int p) const; /* min weight * Id */
  KinfFn alpha_hi(int p) const; /* max weight * Id */
  KinfFn gamma_tri(int p) const;
  KinfFn rho(int p) const; /* throws DomainViolation when the slope is 0 */

  double max_kappa() const;
  double max_rho_slope() const;
  double max_gamma_slope() const;
};

/* weighted-max-norm certificate for affine dynamics; throws
 * NotContractive(p, kappa_p) when some mode is not a weighted contraction */
DeltaIssCert certify_delta_iss_affine(const SwitchedSubsystem& sub,
                                      const std::vector<Vec>& weights);
std::vector<Vec> identity_weights(const SwitchedSubsystem& sub);

/* one falsified inequality, with a printable witness */
struct Violation {
  std::string kind;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string witness;
};

struct FalsificationReport {
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/* samples both certificate displays, the mode-switch bound, and the
 * triangle bound; violations are report content, never exceptions */
FalsificationReport check_cert_sampled(const SwitchedSubsystem& sub,
                                       const DeltaIssCert& cert, std::size_t count,
                                       std::uint64_t seed);

/* smallest integer dwell time admitted by the certificate at exponent
 * epsilon > 1 (BadEpsilon otherwise) */
int min_dwell_time(const DeltaIssCert& cert, double epsilon);

/* weights splitting the additive certificate bound into a max bound */
struct Splitters {
  double t1 = 0.7;
  double t2 = 0.15;
  double t3 = 0.15;
};

/* alternating simulation function from the finite abstraction to the
 * subsystem, with its derived contraction/gain/floor parameters */
struct AltSimCert {
  DeltaIssCert cert;
  double eta = 0.0;
  double epsilon = 2.0; /* dwell exponent, > 1 */
  int dwell_time = 1;
  Splitters theta;

  double sigma = 0.0;        /* contraction on the simulation function */
  double rho_hat_slope = 0;  /* linear internal-input gain */
  double eps_tilde = 0.0;    /* irreducible quantization floor */
  KinfFn alpha;              /* lower bound on the output mismatch */

  /* kappa_p^(-l/epsilon) V_p(x, xh), or V(x, xh) in the common case */
  double evaluate(const Vec& x, const Vec& xh, int p, int l) const;

  KinfFn rho_hat() const; /* throws when the slope is 0 */
};

/* candidate parameters from the splitter decomposition; must be followed by
 * verify_alt_sim_sampled before the certificate is trusted */
AltSimCert build_alt_sim(const SwitchedSubsystem& sub, const DeltaIssCert& cert,
                         double eta, double epsilon, int dwell_time,
                         const Splitters& theta);

/* samples both alternating-simulation displays against the abstraction,
 * resolving the existential by minimizing over abstract successors */
FalsificationReport verify_alt_sim_sampled(const SwitchedSubsystem& sub,
                                           const FiniteTransitionSystem& fts,
                                           const AltSimCert& asc, std::size_t count,
                                           std::uint64_t seed);

/* radius of the induced approximate alternating simulation relation */
double relation_radius(const AltSimCert& asc, const KinfFn& alpha_tilde);

}  // namespace symco

#endif /* SYMCO_CERTIFICATION_HH_ */
