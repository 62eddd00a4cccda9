#include <doctest.h>

#include <random>

#include "helpers.hh"
#include "symco/errors.hh"
#include "symco/system.hh"
#include "symco/traffic.hh"

using namespace symco;

TEST_CASE("traffic link single step") {
  auto link = testing::traffic_link();

  /* green light injects the entry flow into the first cell */
  Vec zero2 = Vec::Zero(2), w0 = Vec::Zero(1);
  Vec next = link.step(2, zero2, w0);
  CHECK(next[0] == 12.0);
  CHECK(next[1] == 0.0);

  /* linear map fixes the origin when b = 0 */
  Vec red = link.step(1, zero2, w0);
  CHECK(red[0] == 0.0);
  CHECK(red[1] == 0.0);

  /* full-density red step */
  Vec x(2), w(1);
  x << 30.0, 30.0;
  w << 30.0;
  Vec fu = link.step(1, x, w);
  CHECK(fu[0] == doctest::Approx(27.0).epsilon(1e-12));
  CHECK(fu[1] == doctest::Approx(19.5).epsilon(1e-12));
}

TEST_CASE("domain violations are errors, not clamps") {
  auto link = testing::traffic_link();
  Vec x(2), w(1);
  x << 31.0, 0.0;
  w << 0.0;
  CHECK_THROWS_AS(link.step(1, x, w), DomainViolation);
  x << 5.0, 5.0;
  w << -1.0;
  CHECK_THROWS_AS(link.step(1, x, w), DomainViolation);
  CHECK_THROWS_AS(link.step(3, x, Vec::Zero(1)), DomainViolation);
}

TEST_CASE("step is linear in (x, w) for zero offset") {
  Mat A(2, 2), D(2, 1);
  A << 0.4, 0.1, -0.2, 0.3;
  D << 0.5, -0.25;
  std::vector<ModeDynamics> modes{{A, D, Vec::Zero(2)}};
  const Box state(Vec::Constant(2, -10.0), Vec::Constant(2, 10.0));
  const Box input(Vec::Constant(1, -10.0), Vec::Constant(1, 10.0));
  SwitchedSubsystem sys(1, std::move(modes), BoxList{state}, BoxList{input},
                        {{2, 1}}, {{1, Mat::Identity(2, 2)}}, 1, KinfFn::identity());

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pt(-5.0, 5.0), coef(-0.9, 0.9);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x1(2), x2(2), w1(1), w2(1);
    x1 << pt(rng), pt(rng);
    x2 << pt(rng), pt(rng);
    w1 << pt(rng);
    w2 << pt(rng);
    const double a = coef(rng), b = coef(rng);
    Vec lhs = sys.step(1, a * x1 + b * x2, a * w1 + b * w2);
    Vec rhs = a * sys.step(1, x1, w1) + b * sys.step(1, x2, w2);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("network validation: traffic ring") {
  TrafficParams params;
  params.link_count = 25;
  NetworkSpec net = build_traffic_network(params);
  auto result = validate_network(net);
  CHECK(result.pass);
  CHECK(result.edge_checks.size() == 25);
  for (const auto& check : result.edge_checks) {
    CHECK(check.contained);
    CHECK(check.image_lo[0] == doctest::Approx(0.0));
    CHECK(check.image_hi[0] == doctest::Approx(30.0));
  }
}

namespace {

/* two 1-D subsystems, 2 -> 1; the output range of 2 is [0, out_hi] while
 * subsystem 1 accepts [0, in_hi] */
NetworkSpec two_node_net(double out_hi, double in_hi) {
  Mat A(1, 1), D(1, 1);
  A << 0.5;
  D << 0.1;
  NetworkSpec net;
  {
    std::vector<ModeDynamics> modes{{A, D, Vec::Zero(1)}};
    const Box state(Vec::Zero(1), Vec::Constant(1, 2.0));
    const Box input(Vec::Zero(1), Vec::Constant(1, in_hi));
    net.subsystems.emplace_back(1, std::move(modes), BoxList{state}, BoxList{input},
                                std::vector<InternalBlock>{{2, 1}},
                                std::vector<OutputBlock>{{1, Mat::Identity(1, 1)}}, 1,
                                KinfFn::identity());
  }
  {
    std::vector<ModeDynamics> modes{{A, Mat::Zero(1, 0), Vec::Zero(1)}};
    const Box state(Vec::Zero(1), Vec::Constant(1, out_hi));
    Mat C(1, 1);
    C << 1.0;
    net.subsystems.emplace_back(2, std::move(modes), BoxList{state}, BoxList{},
                                std::vector<InternalBlock>{},
                                std::vector<OutputBlock>{{2, Mat::Identity(1, 1)},
                                                         {1, C}},
                                1, KinfFn::identity());
  }
  net.edges.push_back({2, 1});
  return net;
}

}  // namespace

TEST_CASE("network validation: containment failure and vacuous pass") {
  auto bad = two_node_net(/*out_hi=*/2.0, /*in_hi=*/1.0);
  auto result = validate_network(bad);
  CHECK_FALSE(result.pass);
  REQUIRE(result.edge_checks.size() == 1);
  CHECK(result.edge_checks[0].edge.from == 2);
  CHECK(result.edge_checks[0].edge.to == 1);
  CHECK_FALSE(result.edge_checks[0].contained);

  auto good = two_node_net(1.0, 1.0);
  CHECK(validate_network(good).pass);

  /* no edges: nothing to check */
  NetworkSpec single;
  single.subsystems.push_back(testing::traffic_link());
  CHECK(validate_network(single).pass);
  CHECK(validate_network(single).edge_checks.empty());
}

TEST_CASE("structural invariants are enforced at construction") {
  Mat A(2, 2);
  A << 0.5, 0.0, 0.0, 0.5;
  const Box state(Vec::Zero(2), Vec::Constant(2, 1.0));
  const Box input(Vec::Zero(1), Vec::Constant(1, 1.0));
  /* internal partition must sum to q */
  CHECK_THROWS_AS(SwitchedSubsystem(1, {{A, Mat::Zero(2, 1), Vec::Zero(2)}},
                                    BoxList{state}, BoxList{input},
                                    {{2, 1}, {3, 1}}, {{1, Mat::Identity(2, 2)}}, 1,
                                    KinfFn::identity()),
                  DimensionMismatch);
  /* dwell time is at least one */
  CHECK_THROWS_AS(SwitchedSubsystem(1, {{A, Mat::Zero(2, 0), Vec::Zero(2)}},
                                    BoxList{state}, BoxList{}, {},
                                    {{1, Mat::Identity(2, 2)}}, 0, KinfFn::identity()),
                  DomainViolation);
}

TEST_CASE("output lipschitz bound holds on sampled pairs") {
  auto link = testing::traffic_link();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pt(0.0, 30.0);
  for (int trial = 0; trial < 500; ++trial) {
    Vec x(2), y(2);
    x << pt(rng), pt(rng);
    y << pt(rng), pt(rng);
    const double lhs = (link.output(x) - link.output(y)).cwiseAbs().maxCoeff();
    const double rhs = link.output_lipschitz()((x - y).cwiseAbs().maxCoeff());
    CHECK(lhs <= rhs + 1e-12);
  }
}
