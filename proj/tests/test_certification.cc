#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hh"
#include "symco/certification.hh"
#include "symco/errors.hh"

using namespace symco;

TEST_CASE("traffic link certifies with the known constants") {
  auto link = testing::traffic_link();
  auto cert = certify_delta_iss_affine(link, identity_weights(link));
  REQUIRE(cert.mode_count() == 2);
  for (int p = 0; p < 2; ++p) {
    CHECK(std::abs(cert.kappa[p] - 0.65) <= 1e-12);
    CHECK(std::abs(cert.rho_slope[p] - 1.0 / 3.0) <= 1e-12);
    CHECK(cert.gamma_slope[p] == 1.0);
  }
  CHECK(cert.mu == 1.0);
  CHECK(cert.common);
}

TEST_CASE("expanding modes are rejected") {
  Mat A(1, 1);
  A << 1.1;
  const Box state(Vec::Zero(1), Vec::Constant(1, 1.0));
  SwitchedSubsystem sys(1, {{A, Mat::Zero(1, 0), Vec::Zero(1)}}, BoxList{state},
                        BoxList{}, {}, {{1, Mat::Identity(1, 1)}}, 1,
                        KinfFn::identity());
  CHECK_THROWS_AS(certify_delta_iss_affine(sys, identity_weights(sys)), NotContractive);
}

TEST_CASE("weighted certificate of the synthetic two-mode system") {
  auto sys = testing::multi_v_system();
  std::vector<Vec> weights{Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)};
  auto cert = certify_delta_iss_affine(sys, weights);
  CHECK(cert.kappa[0] == doctest::Approx(0.5));
  CHECK(cert.kappa[1] == doctest::Approx(0.4));
  CHECK(cert.rho_slope[0] == doctest::Approx(0.3));
  CHECK(cert.rho_slope[1] == doctest::Approx(0.4)); /* weight 2 times 0.2 */
  CHECK(cert.mu == doctest::Approx(2.0));
  CHECK_FALSE(cert.common);
}

TEST_CASE("sampled certificate check: clean pass and seeded falsification") {
  auto link = testing::traffic_link();
  auto cert = certify_delta_iss_affine(link, identity_weights(link));
  auto report = check_cert_sampled(link, cert, 10000, 42);
  CHECK(report.samples == 10000);
  CHECK(report.ok());

  /* understating the contraction must be caught */
  auto broken = cert;
  broken.kappa[0] = broken.kappa[1] = 0.5;
  auto bad = check_cert_sampled(link, broken, 10000, 42);
  CHECK_FALSE(bad.ok());
  CHECK(bad.violations.front().kind == "contraction");

  /* matched pairs never violate: both sides vanish */
  Vec x(2), w(1);
  x << 7.0, 3.0;
  w << 2.0;
  CHECK(cert.V(1, x, x) == 0.0);
  CHECK(cert.V(1, link.step(1, x, w), link.step(1, x, w)) == 0.0);
}

TEST_CASE("certificate inequality is matrix algebra, not luck") {
  auto link = testing::traffic_link();
  auto cert = certify_delta_iss_affine(link, identity_weights(link));
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pt(0.0, 30.0);
  for (int trial = 0; trial < 100000; ++trial) {
    const int p = 1 + static_cast<int>(rng() % 2);
    Vec x(2), xh(2), w(1), wh(1);
    x << pt(rng), pt(rng);
    xh << pt(rng), pt(rng);
    w << pt(rng);
    wh << pt(rng);
    const double lhs = cert.V(p, link.step(p, x, w), link.step(p, xh, wh));
    const double rhs = cert.kappa[p - 1] * cert.V(p, x, xh) +
                       cert.rho_slope[p - 1] * std::abs(w[0] - wh[0]);
    CHECK(lhs <= rhs + 1e-9 * (1.0 + rhs));
  }
}

TEST_CASE("minimum dwell time") {
  auto link = testing::traffic_link();
  auto common = certify_delta_iss_affine(link, identity_weights(link));
  CHECK(min_dwell_time(common, 2.0) == 1); /* mu = 1 */

  DeltaIssCert cert = common;
  cert.mu = 2.0;
  cert.kappa = {0.5, 0.5};
  CHECK(min_dwell_time(cert, 2.0) == 3);
  CHECK_THROWS_AS(min_dwell_time(cert, 1.0), BadEpsilon);
  CHECK_THROWS_AS(min_dwell_time(cert, 0.5), BadEpsilon);
}

TEST_CASE("alternating simulation function values") {
  auto link = testing::traffic_link();
  auto cert = certify_delta_iss_affine(link, identity_weights(link));
  auto asc = build_alt_sim(link, cert, 0.3, 2.0, 1, Splitters{0.66, 0.335, 0.005});

  /* common certificate: the function is the plain distance, counter-free */
  Vec x(2), xh(2);
  x << 12.4, 3.0;
  xh << 12.0, 3.3;
  for (int l : {0, 0}) {
    CHECK(asc.evaluate(x, xh, 1, l) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(asc.evaluate(x, xh, 2, l) == doctest::Approx(0.4).epsilon(1e-12));
  }
  CHECK(asc.evaluate(x, x, 1, 0) == 0.0);

  /* multiple certificates scale by kappa^(-l/epsilon) */
  auto sys = testing::multi_v_system();
  std::vector<Vec> weights{Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)};
  auto mcert = certify_delta_iss_affine(sys, weights);
  auto masc = build_alt_sim(sys, mcert, 0.1, 2.0, 3, Splitters{0.75, 0.15, 0.10});
  Vec a = Vec::Constant(1, 1.0), b = Vec::Constant(1, 0.5);
  CHECK(masc.evaluate(a, b, 1, 2) ==
        doctest::Approx(2.0 * mcert.V(1, a, b)).epsilon(1e-12));
}

TEST_CASE("alt-sim construction guards") {
  auto sys = testing::multi_v_system();
  std::vector<Vec> weights{Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)};
  auto cert = certify_delta_iss_affine(sys, weights);
  /* dwell below the certified minimum of 3 */
  CHECK_THROWS_AS(build_alt_sim(sys, cert, 0.1, 2.0, 2, Splitters{0.75, 0.15, 0.10}),
                  DwellTooSmall);
  /* theta1 below the contraction */
  CHECK_THROWS_AS(build_alt_sim(sys, cert, 0.1, 2.0, 3, Splitters{0.5, 0.3, 0.2}),
                  BadSplitters);
  CHECK_THROWS_AS(build_alt_sim(sys, cert, 0.1, 2.0, 3, Splitters{0.7, 0.7, 0.1}),
                  BadSplitters);
  auto link = testing::traffic_link();
  auto lcert = certify_delta_iss_affine(link, identity_weights(link));
  CHECK_THROWS_AS(build_alt_sim(link, lcert, 40.0, 2.0, 1, Splitters{0.66, 0.335, 0.005}),
                  EtaTooLarge);
}

TEST_CASE("sampled alternating-simulation check on the traffic link") {
  auto link = testing::traffic_link();
  auto cert = certify_delta_iss_affine(link, identity_weights(link));
  auto asc = build_alt_sim(link, cert, 0.3, 2.0, 1, Splitters{0.66, 0.335, 0.005});
  UniformGrid wgrid(link.internal_domain(), 0.3);
  auto fts = build_finite_ts(link, 0.3, InternalInputSet::from_grid(wgrid));

  auto report = verify_alt_sim_sampled(link, fts, asc, 10000, 7);
  CHECK(report.samples == 10000);
  CHECK(report.ok());

  /* the quantization floor is irreducible */
  auto tight = asc;
  tight.eps_tilde = 0.0;
  auto bad = verify_alt_sim_sampled(link, fts, tight, 10000, 7);
  CHECK_FALSE(bad.ok());
}

TEST_CASE("sampled check covers the multiple-certificate dwell scaling") {
  auto sys = testing::multi_v_system();
  std::vector<Vec> weights{Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)};
  auto cert = certify_delta_iss_affine(sys, weights);
  const int kd = min_dwell_time(cert, 2.0);
  REQUIRE(kd == 3);
  auto asc = build_alt_sim(sys, cert, 0.1, 2.0, kd, Splitters{0.75, 0.15, 0.10});
  UniformGrid wgrid(sys.internal_domain(), 0.1);
  auto fts = build_finite_ts(sys, 0.1, InternalInputSet::from_grid(wgrid));
  auto report = verify_alt_sim_sampled(sys, fts, asc, 10000, 13);
  CHECK(report.samples == 10000);
  CHECK(report.ok());
}

TEST_CASE("quantization floor grows with eta") {
  auto link = testing::traffic_link();
  auto cert = certify_delta_iss_affine(link, identity_weights(link));
  double prev = 0.0;
  for (double eta : {0.03, 0.1, 0.3, 1.0, 3.0}) {
    auto asc = build_alt_sim(link, cert, eta, 2.0, 1, Splitters{0.66, 0.335, 0.005});
    CHECK(asc.eps_tilde > prev);
    prev = asc.eps_tilde;
  }
}

TEST_CASE("relation radius") {
  auto link = testing::traffic_link();
  auto cert = certify_delta_iss_affine(link, identity_weights(link));
  auto asc = build_alt_sim(link, cert, 0.3, 2.0, 1, Splitters{0.66, 0.335, 0.005});

  auto with_eps = [&](double eps) {
    auto copy = asc;
    copy.eps_tilde = eps;
    return copy;
  };
  CHECK(relation_radius(with_eps(0.5), KinfFn::linear(1.0)) == doctest::Approx(0.5));
  CHECK(relation_radius(with_eps(1.0), KinfFn::linear(2.0)) == doctest::Approx(0.5));
  CHECK(relation_radius(with_eps(0.0), KinfFn::linear(2.0)) == 0.0);
  CHECK_THROWS_AS(relation_radius(with_eps(1.0),
                                  KinfFn::max_of({KinfFn::linear(1.0), KinfFn::linear(2.0)})),
                  NotInvertibleRepresentation);
}
