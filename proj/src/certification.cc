#include "symco/certification.hh"

#include <cmath>
#include <sstream>

#include "symco/errors.hh"
#include "symco/sampling.hh"

namespace symco {

namespace {

double weighted_max_norm(const Vec& w, const Vec& d) {
  double m = 0.0;
  for (int i = 0; i < d.size(); ++i) m = std::max(m, w[i] * std::abs(d[i]));
  return m;
}

double inf_norm(const Vec& d) { return d.size() == 0 ? 0.0 : d.cwiseAbs().maxCoeff(); }

std::string vec_str(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  os << ")";
  return os.str();
}

void validate_splitters(const Splitters& th) {
  if (!(th.t1 > 0.0) || !(th.t2 > 0.0) || !(th.t3 > 0.0) ||
      std::abs(th.t1 + th.t2 + th.t3 - 1.0) > 1e-9)
    throw BadSplitters("splitters must be positive and sum to 1");
}

}  // namespace

double DeltaIssCert::V(int p, const Vec& x, const Vec& xh) const {
  return weighted_max_norm(weights[static_cast<std::size_t>(p - 1)], x - xh);
}

KinfFn DeltaIssCert::alpha_lo(int p) const {
  return KinfFn::linear(weights[static_cast<std::size_t>(p - 1)].minCoeff());
}
KinfFn DeltaIssCert::alpha_hi(int p) const {
  return KinfFn::linear(weights[static_cast<std::size_t>(p - 1)].maxCoeff());
}
KinfFn DeltaIssCert::gamma_tri(int p) const {
  return KinfFn::linear(gamma_slope[static_cast<std::size_t>(p - 1)]);
}
KinfFn DeltaIssCert::rho(int p) const {
  const double s = rho_slope[static_cast<std::size_t>(p - 1)];
  if (!(s > 0.0))
    throw DomainViolation("certificate: mode has zero input gain, no K-infinity view");
  return KinfFn::linear(s);
}

double DeltaIssCert::max_kappa() const {
  double m = 0.0;
  for (double k : kappa) m = std::max(m, k);
  return m;
}
double DeltaIssCert::max_rho_slope() const {
  double m = 0.0;
  for (double r : rho_slope) m = std::max(m, r);
  return m;
}
double DeltaIssCert::max_gamma_slope() const {
  double m = 0.0;
  for (double g : gamma_slope) m = std::max(m, g);
  return m;
}

std::vector<Vec> identity_weights(const SwitchedSubsystem& sub) {
  return std::vector<Vec>(static_cast<std::size_t>(sub.mode_count()),
                          Vec::Ones(sub.state_dim()));
}

DeltaIssCert certify_delta_iss_affine(const SwitchedSubsystem& sub,
                                      const std::vector<Vec>& weights) {
  const int m = sub.mode_count();
  const int n = sub.state_dim();
  if (static_cast<int>(weights.size()) != m)
    throw DimensionMismatch("certify: one weight vector per mode required");
  for (const auto& w : weights) {
    if (w.size() != n) throw DimensionMismatch("certify: weight dimension mismatch");
    if (!(w.minCoeff() > 0.0)) throw DomainViolation("certify: weights must be positive");
  }

  DeltaIssCert cert;
  cert.weights = weights;
  cert.kappa.resize(static_cast<std::size_t>(m));
  cert.rho_slope.resize(static_cast<std::size_t>(m));
  cert.gamma_slope.resize(static_cast<std::size_t>(m));

  for (int p = 1; p <= m; ++p) {
    const ModeDynamics& dyn = sub.dynamics(p);
    const Vec& w = weights[static_cast<std::size_t>(p - 1)];
    /* kappa_p = || M_p A_p M_p^{-1} ||_inf, exact row-sum arithmetic */
    double kappa = 0.0;
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j) row += std::abs(w[i] * dyn.A(i, j) / w[j]);
      kappa = std::max(kappa, row);
    }
    if (kappa >= 1.0)
      throw NotContractive(p, kappa,
                           "certify: mode " + std::to_string(p) +
                               " has weighted induced norm " + std::to_string(kappa));
    /* rho_p = || M_p D_p ||_inf (internal inputs are unweighted) */
    double rho = 0.0;
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int k = 0; k < sub.internal_dim(); ++k) row += std::abs(w[i] * dyn.D(i, k));
      rho = std::max(rho, row);
    }
    cert.kappa[static_cast<std::size_t>(p - 1)] = kappa;
    cert.rho_slope[static_cast<std::size_t>(p - 1)] = rho;
    cert.gamma_slope[static_cast<std::size_t>(p - 1)] = w.maxCoeff();
  }

  /* mu = max over mode pairs and axes of weight ratios */
  cert.mu = 1.0;
  for (int p = 0; p < m; ++p) {
    for (int q = 0; q < m; ++q) {
      for (int i = 0; i < n; ++i)
        cert.mu = std::max(cert.mu, weights[static_cast<std::size_t>(p)][i] /
                                        weights[static_cast<std::size_t>(q)][i]);
    }
  }

  cert.common = true;
  for (int p = 1; p < m; ++p) {
    if (weights[static_cast<std::size_t>(p)] != weights[0]) cert.common = false;
  }
  return cert;
}

FalsificationReport check_cert_sampled(const SwitchedSubsystem& sub,
                                       const DeltaIssCert& cert, std::size_t count,
                                       std::uint64_t seed) {
  FalsificationReport report;
  report.seed = seed;
  Rng rng(seed);
  std::uniform_int_distribution<int> mode_dist(1, sub.mode_count());
  const bool has_w = sub.internal_dim() > 0;

  for (std::size_t it = 0; it < count; ++it) {
    const int p = mode_dist(rng);
    const int p2 = mode_dist(rng);
    const Vec x = sample_box(sub.state_domain(), rng);
    const Vec xh = sample_box(sub.state_domain(), rng);
    const Vec z = sample_box(sub.state_domain(), rng);
    const Vec w = has_w ? sample_box(sub.internal_domain(), rng) : Vec(0);
    const Vec wh = has_w ? sample_box(sub.internal_domain(), rng) : Vec(0);
    ++report.samples;

    const double v = cert.V(p, x, xh);
    const double dx = inf_norm(x - xh);
    auto tol = [](double rhs) { return 1e-9 * (1.0 + std::abs(rhs)); };

    const double lo = cert.alpha_lo(p)(dx);
    const double hi = cert.alpha_hi(p)(dx);
    if (lo > v + tol(v) || v > hi + tol(hi)) {
      report.violations.push_back({"bounds", lo, v,
                                   "p=" + std::to_string(p) + " x=" + vec_str(x) +
                                       " xh=" + vec_str(xh)});
    }

    const Vec fx = sub.step(p, x, w);
    const Vec fxh = sub.step(p, xh, wh);
    const double lhs = cert.V(p, fx, fxh);
    const double rhs =
        cert.kappa[static_cast<std::size_t>(p - 1)] * v +
        cert.rho_slope[static_cast<std::size_t>(p - 1)] * inf_norm(w - wh);
    if (lhs > rhs + tol(rhs)) {
      report.violations.push_back({"contraction", lhs, rhs,
                                   "p=" + std::to_string(p) + " x=" + vec_str(x) +
                                       " xh=" + vec_str(xh) + " w=" + vec_str(w) +
                                       " wh=" + vec_str(wh)});
    }

    const double vp2 = cert.V(p2, x, xh);
    if (v > cert.mu * vp2 + tol(cert.mu * vp2)) {
      report.violations.push_back({"mode-switch", v, cert.mu * vp2,
                                   "p=" + std::to_string(p) + " p'=" + std::to_string(p2) +
                                       " x=" + vec_str(x) + " xh=" + vec_str(xh)});
    }

    const double tri_lhs = cert.V(p, x, xh);
    const double tri_rhs =
        cert.V(p, x, z) +
        cert.gamma_slope[static_cast<std::size_t>(p - 1)] * inf_norm(xh - z);
    if (tri_lhs > tri_rhs + tol(tri_rhs)) {
      report.violations.push_back({"triangle", tri_lhs, tri_rhs,
                                   "p=" + std::to_string(p) + " x=" + vec_str(x) +
                                       " y=" + vec_str(xh) + " z=" + vec_str(z)});
    }
  }
  return report;
}

int min_dwell_time(const DeltaIssCert& cert, double epsilon) {
  if (!(epsilon > 1.0)) throw BadEpsilon("min dwell time: epsilon must exceed 1");
  double worst = 0.0;
  for (double k : cert.kappa)
    worst = std::max(worst, epsilon * std::log(cert.mu) / std::log(1.0 / k));
  const double v = worst + 1.0;
  return std::max(1, static_cast<int>(std::ceil(v - 1e-9)));
}

double AltSimCert::evaluate(const Vec& x, const Vec& xh, int p, int l) const {
  const double v = cert.V(p, x, xh);
  if (cert.common) return v;
  return std::pow(cert.kappa[static_cast<std::size_t>(p - 1)], -double(l) / epsilon) * v;
}

KinfFn AltSimCert::rho_hat() const {
  if (!(rho_hat_slope > 0.0))
    throw DomainViolation("alt-sim certificate: zero internal gain, no K-infinity view");
  return KinfFn::linear(rho_hat_slope);
}

AltSimCert build_alt_sim(const SwitchedSubsystem& sub, const DeltaIssCert& cert,
                         double eta, double epsilon, int dwell_time,
                         const Splitters& theta) {
  validate_splitters(theta);
  const int kd_min = min_dwell_time(cert, epsilon); /* validates epsilon */
  if (dwell_time < kd_min)
    throw DwellTooSmall("build alt-sim: dwell time " + std::to_string(dwell_time) +
                        " below certified minimum " + std::to_string(kd_min));
  if (eta > span(sub.state_domain()))
    throw EtaTooLarge("build alt-sim: eta exceeds the state-domain span");

  AltSimCert asc{.cert = cert,
                 .eta = eta,
                 .epsilon = epsilon,
                 .dwell_time = dwell_time,
                 .theta = theta,
                 .sigma = 0.0,
                 .rho_hat_slope = 0.0,
                 .eps_tilde = 0.0,
                 .alpha = KinfFn::identity()};

  /* amplification of the additive terms across a dwell period: 1 in the
   * common case, max_p kappa_p^(-(kd-1)/eps) with multiple functions */
  double c_kappa = 1.0;
  double contraction = 0.0;
  if (cert.common) {
    contraction = cert.max_kappa();
  } else {
    for (double k : cert.kappa) {
      contraction = std::max(contraction, std::pow(k, (epsilon - 1.0) / epsilon));
      c_kappa = std::max(c_kappa, std::pow(k, -double(dwell_time - 1) / epsilon));
    }
  }
  asc.sigma = contraction / theta.t1;
  if (asc.sigma >= 1.0)
    throw BadSplitters("build alt-sim: theta1 = " + std::to_string(theta.t1) +
                       " cannot dominate the contraction " + std::to_string(contraction));
  asc.rho_hat_slope = c_kappa * cert.max_rho_slope() / theta.t2;
  asc.eps_tilde = c_kappa * cert.max_gamma_slope() * eta / theta.t3;

  /* output lower bound: alpha = (min_p alpha_lo_p) o ell^{-1} */
  double min_w = cert.weights[0].minCoeff();
  for (const auto& w : cert.weights) min_w = std::min(min_w, w.minCoeff());
  asc.alpha = KinfFn::compose(KinfFn::linear(min_w), sub.output_lipschitz().inverse());
  return asc;
}

FalsificationReport verify_alt_sim_sampled(const SwitchedSubsystem& sub,
                                           const FiniteTransitionSystem& fts,
                                           const AltSimCert& asc, std::size_t count,
                                           std::uint64_t seed) {
  FalsificationReport report;
  report.seed = seed;
  Rng rng(seed);
  std::uniform_int_distribution<int> mode_dist(1, sub.mode_count());
  std::uniform_int_distribution<int> dwell_dist(0, sub.dwell_time() - 1);
  std::uniform_int_distribution<std::size_t> cell_dist(0, fts.cell_count() - 1);
  const std::size_t wcount = fts.inputs().size();
  std::uniform_int_distribution<std::size_t> widx_dist(0, wcount - 1);
  const bool has_w = sub.internal_dim() > 0;

  const UniformGrid& grid = fts.grid();
  std::vector<std::size_t> cells;
  std::size_t attempts = 0;
  const std::size_t max_attempts = 64 * count + 1024;

  while (report.samples < count && attempts < max_attempts) {
    ++attempts;
    const int p = mode_dist(rng);
    const int l = dwell_dist(rng);

    /* tuple mix: matched quantization, independent, and nearby pairs */
    const int kind = static_cast<int>(rng() % 3);
    const Vec x = sample_box(sub.state_domain(), rng);
    std::size_t xcell;
    if (kind == 0) {
      xcell = *grid.nearest(x);
    } else if (kind == 1) {
      xcell = cell_dist(rng);
    } else {
      Vec perturbed = x;
      for (int i = 0; i < perturbed.size(); ++i)
        perturbed[i] += std::uniform_real_distribution<double>(-2.0 * asc.eta,
                                                               2.0 * asc.eta)(rng);
      xcell = *grid.nearest(perturbed);
    }
    const Vec xh = grid.point(xcell);

    Vec w(0), wh(0);
    std::size_t widx = 0;
    if (has_w) {
      w = sample_box(sub.internal_domain(), rng);
      if (kind == 0) {
        /* nearest admissible abstract input */
        double best = -1.0;
        for (std::size_t wi = 0; wi < wcount; ++wi) {
          const double d = inf_norm(fts.inputs().point(wi) - w);
          if (best < 0.0 || d < best) {
            best = d;
            widx = wi;
          }
        }
      } else {
        widx = widx_dist(rng);
      }
      wh = fts.inputs().point(widx);
    }

    /* the certificate covers transitions that stay inside the domain; the
     * absorbing sink is a synthesis-side device, not part of the relation */
    const Vec xnext = sub.step(p, x, w);
    if (!contains(sub.state_domain(), xnext, 1e-12)) continue;
    fts.successor_cells(xcell, p, widx, cells);
    if (cells.empty()) continue;

    ++report.samples;

    const double S = asc.evaluate(x, xh, p, l);
    auto tol = [](double rhs) { return 1e-9 * (1.0 + std::abs(rhs)); };

    /* first display */
    const double mismatch = inf_norm(sub.output(x) - sub.output(xh));
    const double lhs1 = asc.alpha(mismatch);
    if (lhs1 > S + tol(S)) {
      report.violations.push_back({"output-bound", lhs1, S,
                                   "p=" + std::to_string(p) + " l=" + std::to_string(l) +
                                       " x=" + vec_str(x) + " xh=" + vec_str(xh)});
    }

    /* second display, for every admissible concrete (p', l') */
    const double rhs2 = std::max({asc.sigma * S, asc.rho_hat_slope * inf_norm(w - wh),
                                  asc.eps_tilde});
    for (auto [p2, l2] : dwell_scenarios(sub.mode_count(), sub.dwell_time(), p, l)) {
      double best = -1.0;
      for (std::size_t c : cells) {
        const double s2 = asc.evaluate(xnext, grid.point(c), p2, l2);
        if (best < 0.0 || s2 < best) best = s2;
      }
      if (best > rhs2 + tol(rhs2)) {
        report.violations.push_back(
            {"transition-bound", best, rhs2,
             "p=" + std::to_string(p) + " l=" + std::to_string(l) + " p'=" +
                 std::to_string(p2) + " l'=" + std::to_string(l2) + " x=" + vec_str(x) +
                 " xh=" + vec_str(xh) + " w=" + vec_str(w) + " wh=" + vec_str(wh)});
      }
    }
  }
  if (report.samples < count)
    throw Error("verify alt-sim: could not draw enough in-domain samples");
  return report;
}

double relation_radius(const AltSimCert& asc, const KinfFn& alpha_tilde) {
  if (asc.eps_tilde == 0.0) return 0.0;
  return alpha_tilde.inverse()(asc.eps_tilde);
}

}  // namespace symco
