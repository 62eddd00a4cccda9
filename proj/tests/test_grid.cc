#include <doctest.h>

#include <random>
#include <set>

#include "symco/errors.hh"
#include "symco/grid.hh"

using namespace symco;

namespace {
Box box1(double lo, double hi) {
  return Box(Vec::Constant(1, lo), Vec::Constant(1, hi));
}
}  // namespace

TEST_CASE("unit interval at eta = 0.5") {
  UniformGrid g(BoxList{box1(0.0, 1.0)}, 0.5);
  REQUIRE(g.size() == 3);
  CHECK(g.point(0)[0] == 0.0);
  CHECK(g.point(1)[0] == 0.5);
  CHECK(g.point(2)[0] == 1.0);
}

TEST_CASE("traffic-scale grid point count") {
  Box b(Vec::Zero(2), Vec::Constant(2, 30.0));
  UniformGrid g(BoxList{b}, 0.03);
  CHECK(g.size() == 1002001); /* 1001 multiples of 0.03 per axis */
}

TEST_CASE("eta above the domain span is rejected") {
  CHECK_THROWS_AS(UniformGrid(BoxList{box1(0.0, 1.0)}, 2.0), EtaTooLarge);
  CHECK_THROWS_AS(UniformGrid(BoxList{box1(0.0, 1.0)}, -0.5), EtaTooLarge);
}

TEST_CASE("index round trip is exact") {
  Box b(Vec::Constant(2, -1.2), Vec::Constant(2, 2.4));
  UniformGrid g(BoxList{b}, 0.3);
  std::int64_t k[UniformGrid::kMaxDim];
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.k_of_index(i, k);
    auto back = g.index_of_k(k);
    REQUIRE(back.has_value());
    CHECK(*back == i);
    CHECK(contains(g.domain(), g.point(i), 1e-9));
  }
}

TEST_CASE("union of two boxes") {
  BoxList dom{box1(0.0, 1.0), box1(2.0, 3.0)};
  UniformGrid g(dom, 0.5);
  CHECK(g.size() == 6); /* {0,.5,1} and {2,2.5,3} */
  std::set<double> pts;
  for (std::size_t i = 0; i < g.size(); ++i) pts.insert(g.point(i)[0]);
  CHECK(pts == std::set<double>{0.0, 0.5, 1.0, 2.0, 2.5, 3.0});

  /* nearest over the union picks the closer box */
  CHECK(g.point(*g.nearest(Vec::Constant(1, 1.4)))[0] == 1.0);
  CHECK(g.point(*g.nearest(Vec::Constant(1, 1.8)))[0] == 2.0);
}

TEST_CASE("ball scan matches a brute-force filter") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lo_d(-2.0, 0.0), width(0.8, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 1 + static_cast<int>(rng() % 2);
    Vec lo(dim), hi(dim);
    for (int i = 0; i < dim; ++i) {
      lo[i] = lo_d(rng);
      hi[i] = lo[i] + width(rng);
    }
    const double eta = 0.17;
    UniformGrid g(BoxList{Box(lo, hi)}, eta);

    Vec y(dim);
    for (int i = 0; i < dim; ++i)
      y[i] = std::uniform_real_distribution<double>(lo[i] - 0.5, hi[i] + 0.5)(rng);
    const double r = std::uniform_real_distribution<double>(0.0, 3.0 * eta)(rng);

    std::set<std::size_t> brute;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec p = g.point(i);
      if ((p - y).cwiseAbs().maxCoeff() <= r * (1.0 + 1e-12)) brute.insert(i);
    }
    std::vector<std::size_t> scanned;
    g.ball(y.data(), r, scanned);
    CHECK(std::set<std::size_t>(scanned.begin(), scanned.end()) == brute);
    CHECK(g.count_in_ball(y.data(), r) == brute.size());
  }
}

TEST_CASE("points exactly at distance eta are kept") {
  UniformGrid g(BoxList{box1(0.0, 1.0)}, 0.25);
  std::vector<std::size_t> ball;
  const Vec center = Vec::Constant(1, 0.5);
  g.ball(center.data(), 0.25, ball);
  CHECK(ball.size() == 3); /* 0.25, 0.5, 0.75 */
}
