#include <doctest.h>

#include <cmath>
#include <random>

#include "symco/errors.hh"
#include "symco/kinf.hh"

using namespace symco;

TEST_CASE("evaluation of the four node kinds") {
  CHECK(KinfFn::linear(0.65)(2.0) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(KinfFn::compose(KinfFn::linear(2.0), KinfFn::linear(3.0))(1.0) ==
        doctest::Approx(6.0).epsilon(1e-15));
  CHECK(KinfFn::power(1.0, 2.0)(0.0) == 0.0);
  CHECK(KinfFn::max_of({KinfFn::linear(1.0), KinfFn::power(1.0, 2.0)})(2.0) ==
        doctest::Approx(4.0));
  CHECK(KinfFn::max_of({KinfFn::linear(1.0), KinfFn::power(1.0, 2.0)})(0.5) ==
        doctest::Approx(0.5));
}

TEST_CASE("inverse of linear and power chains") {
  auto f = KinfFn::linear(0.5);
  auto g = f.inverse();
  CHECK(g(f(3.0)) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(g.linear_slope() == doctest::Approx(2.0));

  auto pw = KinfFn::power(4.0, 2.0);
  auto pwi = pw.inverse();
  for (double s : {0.0, 1.0, 9.0}) {
    CHECK(pwi(pw(s)) == doctest::Approx(s).epsilon(1e-12));
  }
  auto ms = pwi.monomials();
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].coeff == doctest::Approx(0.5));
  CHECK(ms[0].exponent == doctest::Approx(0.5));

  CHECK_THROWS_AS(KinfFn::max_of({KinfFn::linear(1.0), KinfFn::linear(2.0)}).inverse(),
                  NotInvertibleRepresentation);
}

TEST_CASE("below-identity test") {
  CHECK(KinfFn::linear(0.65).lt_identity().holds);

  auto at_id = KinfFn::linear(1.0).lt_identity();
  CHECK_FALSE(at_id.holds);
  REQUIRE(at_id.witness.has_value());
  CHECK(*at_id.witness > 0.0);
  CHECK(KinfFn::linear(1.0)(*at_id.witness) >= *at_id.witness);

  auto chain = KinfFn::compose(KinfFn::linear(0.5), KinfFn::linear(3.0));
  CHECK(chain.linear_slope() == doctest::Approx(1.5));
  CHECK_FALSE(chain.lt_identity().holds);

  /* power shapes always cross the identity somewhere */
  for (auto f : {KinfFn::power(0.5, 2.0), KinfFn::power(2.0, 0.5)}) {
    auto r = f.lt_identity();
    CHECK_FALSE(r.holds);
    REQUIRE(r.witness.has_value());
    CHECK(f(*r.witness) >= *r.witness);
  }

  /* a max is below identity iff every branch is */
  CHECK(KinfFn::max_of({KinfFn::linear(0.3), KinfFn::linear(0.9)}).lt_identity().holds);
  CHECK_FALSE(
      KinfFn::max_of({KinfFn::linear(0.3), KinfFn::linear(1.1)}).lt_identity().holds);
}

namespace {

/* random tree over the full algebra */
KinfFn random_kinf(std::mt19937_64& rng, int depth) {
  std::uniform_real_distribution<double> coef(0.1, 3.0);
  std::uniform_real_distribution<double> expo(0.3, 2.5);
  const int kind = depth <= 0 ? static_cast<int>(rng() % 2)
                              : static_cast<int>(rng() % 4);
  switch (kind) {
    case 0:
      return KinfFn::linear(coef(rng));
    case 1:
      return KinfFn::power(coef(rng), expo(rng));
    case 2:
      return KinfFn::compose(random_kinf(rng, depth - 1), random_kinf(rng, depth - 1));
    default:
      return KinfFn::max_of({random_kinf(rng, depth - 1), random_kinf(rng, depth - 1)});
  }
}

/* random invertible chain (no max nodes) */
KinfFn random_chain(std::mt19937_64& rng, int depth) {
  std::uniform_real_distribution<double> coef(0.1, 3.0);
  std::uniform_real_distribution<double> expo(0.3, 2.5);
  if (depth <= 0 || rng() % 3 == 0) {
    return rng() % 2 == 0 ? KinfFn::linear(coef(rng)) : KinfFn::power(coef(rng), expo(rng));
  }
  return KinfFn::compose(random_chain(rng, depth - 1), random_chain(rng, depth - 1));
}

}  // namespace

TEST_CASE("class membership: zero at zero, strictly increasing") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    KinfFn f = random_kinf(rng, 3);
    CHECK(f(0.0) == 0.0);
    double prev_s = 0.0, prev_v = 0.0;
    for (int i = 1; i <= 40; ++i) {
      const double s = std::pow(10.0, -4.0 + 8.0 * i / 40.0);
      const double v = f(s);
      CHECK(s > prev_s);
      CHECK(v > prev_v);
      prev_s = s;
      prev_v = v;
    }
    /* monomial reduction agrees with recursive evaluation */
    for (double s : {0.017, 1.0, 42.0}) {
      double reduced = 0.0;
      for (const auto& m : f.monomials())
        reduced = std::max(reduced, m.coeff * std::pow(s, m.exponent));
      CHECK(reduced == doctest::Approx(f(s)).epsilon(1e-9));
    }
  }
}

TEST_CASE("inverse round-trips on invertible chains") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    KinfFn f = random_chain(rng, 3);
    KinfFn g = f.inverse();
    for (int i = 0; i <= 12; ++i) {
      const double s = std::pow(10.0, -6.0 + i);
      const double rt = g(f(s));
      CHECK(rt == doctest::Approx(s).epsilon(1e-9));
    }
  }
}
