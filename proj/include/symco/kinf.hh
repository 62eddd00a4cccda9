/*
 * kinf.hh
 *
 * Symbolic class-K-infinity comparison functions.
 *
 * The toolkit manipulates contraction rates and gains as a closed symbolic
 * algebra (linear maps, power maps, composition, pointwise max) instead of
 * opaque callables, so that inverses and below-identity tests are exact.
 */

#ifndef SYMCO_KINF_HH_
#define SYMCO_KINF_HH_

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace symco {

/* log-spaced evaluation grid used by sampled monotonicity/identity checks */
struct SampleSpec {
  double lo = 1e-9;
  double hi = 1e9;
  int count = 200;
};

struct LtIdentityResult {
  bool holds = false;
  /* a concrete s > 0 with f(s) >= s, when holds == false */
  std::optional<double> witness;
};

class KinfFn {
public:
  /* c * s^e with c > 0, e > 0; every node reduces to a max of these */
  struct Monomial {
    double coeff;
    double exponent;
  };

  static KinfFn linear(double slope);
  static KinfFn power(double coeff, double exponent);
  static KinfFn compose(const KinfFn& outer, const KinfFn& inner);
  static KinfFn max_of(std::vector<KinfFn> parts);
  static KinfFn identity() { return linear(1.0); }

  /* evaluation; exact for Linear/Power, recursive for Compose/Max */
  double operator()(double s) const;

  /* symbolic inverse; throws NotInvertibleRepresentation on Max nodes */
  KinfFn inverse() const;

  /* exact reduction of the node tree to max_i coeff_i * s^exponent_i */
  std::vector<Monomial> monomials() const;

  /* true iff the function reduces to a single monomial with exponent 1 */
  bool is_linear() const;
  double linear_slope() const;

  /* f < Id on all of (0, inf)?  Decided analytically on the monomial
   * reduction and cross-checked on the sample grid. */
  LtIdentityResult lt_identity(const SampleSpec& samples = {}) const;

  std::string str() const;

  struct Node; /* opaque representation node */

private:
  explicit KinfFn(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace symco

#endif /* SYMCO_KINF_HH_ */
