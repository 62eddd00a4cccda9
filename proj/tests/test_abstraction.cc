#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "helpers.hh"
#include "symco/abstraction.hh"
#include "symco/errors.hh"

using namespace symco;

namespace {

/* 1-D single-mode decay system x' = rate * x on [0, hi] */
SwitchedSubsystem decay_system(double rate, double hi, int modes = 1, int dwell = 1) {
  Mat A(1, 1);
  A << rate;
  std::vector<ModeDynamics> md;
  for (int p = 0; p < modes; ++p) md.push_back({A, Mat::Zero(1, 0), Vec::Zero(1)});
  const Box state(Vec::Zero(1), Vec::Constant(1, hi));
  return SwitchedSubsystem(1, std::move(md), BoxList{state}, BoxList{}, {},
                           {{1, Mat::Identity(1, 1)}}, dwell, KinfFn::identity());
}

std::set<double> cell_values(const UniformGrid& g, const std::vector<AugState>& succ,
                             int axis) {
  std::set<double> out;
  for (const auto& s : succ) {
    REQUIRE_FALSE(s.is_sink());
    out.insert(g.point(s.cell)[axis]);
  }
  return out;
}

}  // namespace

TEST_CASE("dwell scenarios") {
  /* below the bound: forced continuation */
  auto s1 = dwell_scenarios(3, 2, 1, 0);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0] == std::pair<int, int>{1, 1});

  /* saturated counter: stay or switch to any other mode */
  auto s2 = dwell_scenarios(3, 2, 1, 1);
  REQUIRE(s2.size() == 3);
  CHECK(s2[0] == std::pair<int, int>{1, 1});
  CHECK(s2[1] == std::pair<int, int>{2, 0});
  CHECK(s2[2] == std::pair<int, int>{3, 0});
}

TEST_CASE("concrete successors follow the dwell automaton") {
  auto sys = decay_system(0.5, 1.0, /*modes=*/3, /*dwell=*/2);
  ConcreteAug s{Vec::Constant(1, 1.0), 1, 0};
  CHECK(concrete_successors(sys, s, 1, Vec(0)).size() == 1);
  s.dwell = 1;
  CHECK(concrete_successors(sys, s, 1, Vec(0)).size() == 3);
  /* external input must match the active mode */
  CHECK(concrete_successors(sys, s, 2, Vec(0)).empty());
}

TEST_CASE("abstract successors of the traffic link at the origin") {
  auto link = testing::traffic_link();
  UniformGrid grid(link.state_domain(), 0.03);
  AugState s{*grid.nearest(Vec::Zero(2)), 2, 0};
  auto succ = abstract_successors(link, grid, s, 2, Vec::Zero(1), 0.03);

  /* image (12, 0): three columns, two in-domain rows, times two dwell
   * scenarios at k_d = 1 with two modes */
  std::set<std::size_t> cells;
  for (const auto& t : succ) cells.insert(t.cell);
  CHECK(cells.size() == 6);
  CHECK(succ.size() == 12);
  std::set<double> xs, ys;
  for (std::size_t c : cells) {
    xs.insert(grid.point(c)[0]);
    ys.insert(grid.point(c)[1]);
  }
  auto approx_set = [](const std::set<double>& got, std::vector<double> want) {
    if (got.size() != want.size()) return false;
    std::size_t i = 0;
    for (double v : got) {
      if (std::abs(v - want[i++]) > 1e-9) return false;
    }
    return true;
  };
  CHECK(approx_set(xs, {11.97, 12.0, 12.03}));
  CHECK(approx_set(ys, {0.0, 0.03}));

  /* wrong external input gives no transition */
  CHECK(abstract_successors(link, grid, s, 1, Vec::Zero(1), 0.03).empty());
}

TEST_CASE("interior on-grid image covers a 3x3 block") {
  Mat A = Mat::Identity(2, 2); /* not contractive, irrelevant here */
  std::vector<ModeDynamics> modes{{0.5 * A, Mat::Zero(2, 0), Vec::Constant(2, 0.0)}};
  const Box state(Vec::Zero(2), Vec::Constant(2, 4.0));
  SwitchedSubsystem sys(1, std::move(modes), BoxList{state}, BoxList{}, {},
                        {{1, Mat::Identity(2, 2)}}, 1, KinfFn::identity());
  UniformGrid grid(sys.state_domain(), 1.0);
  AugState s{*grid.nearest(Vec::Constant(2, 4.0)), 1, 0};
  /* image (2, 2) is an interior grid point */
  auto succ = abstract_successors(sys, grid, s, 1, Vec(0), 1.0);
  CHECK(succ.size() == 9);
}

TEST_CASE("images far outside the domain hit the sink") {
  Mat A(1, 1);
  A << 0.1;
  Vec b(1);
  b << 50.0;
  std::vector<ModeDynamics> modes{{A, Mat::Zero(1, 0), b}};
  const Box state(Vec::Zero(1), Vec::Constant(1, 1.0));
  SwitchedSubsystem sys(1, std::move(modes), BoxList{state}, BoxList{}, {},
                        {{1, Mat::Identity(1, 1)}}, 1, KinfFn::identity());
  UniformGrid grid(sys.state_domain(), 0.5);
  AugState s{0, 1, 0};
  auto succ = abstract_successors(sys, grid, s, 1, Vec(0), 0.5);
  REQUIRE(succ.size() == 1);
  CHECK(succ[0].is_sink());
  CHECK_THROWS_AS(
      abstract_successors(sys, grid, s, 1, Vec(0), 0.5, SinkPolicy::forbid),
      DomainViolation);
  /* the sink absorbs */
  auto fts = build_finite_ts(sys, 0.5, InternalInputSet::none());
  auto from_sink = fts.successors(AugState{kSinkCell, 1, 0}, 1, 0);
  REQUIRE(from_sink.size() == 1);
  CHECK(from_sink[0].is_sink());
}

TEST_CASE("toy finite abstractions match the hand computation") {
  auto sys = decay_system(0.5, 1.0);
  {
    auto fts = build_finite_ts(sys, 0.5, InternalInputSet::none());
    CHECK(fts.cell_count() == 3);
    CHECK(fts.aug_count() == 3);
    AugState one{*fts.grid().nearest(Vec::Constant(1, 1.0)), 1, 0};
    auto succ = fts.successors(one, 1, 0);
    CHECK(cell_values(fts.grid(), succ, 0) == std::set<double>{0.0, 0.5, 1.0});
  }
  {
    auto fts = build_finite_ts(sys, 0.25, InternalInputSet::none());
    AugState one{*fts.grid().nearest(Vec::Constant(1, 1.0)), 1, 0};
    auto succ = fts.successors(one, 1, 0);
    CHECK(cell_values(fts.grid(), succ, 0) == std::set<double>{0.25, 0.5, 0.75});
  }
}

TEST_CASE("varpi = 0 demands an explicit point list") {
  auto link = testing::traffic_link();
  CHECK_THROWS_AS(build_finite_ts(link, 0.3, /*varpi=*/0.0), DomainViolation);
}

TEST_CASE("lazy and materialized evaluators agree") {
  auto link = testing::traffic_link();
  auto lazy = build_finite_ts(link, 0.3, /*varpi=*/0.3, /*materialize=*/false);
  auto table = build_finite_ts(link, 0.3, /*varpi=*/0.3, /*materialize=*/true);
  auto table2 = build_finite_ts(link, 0.3, /*varpi=*/0.3, /*materialize=*/true,
                                SinkPolicy::absorbing, /*workers=*/2);

  std::mt19937_64 rng(23);
  std::vector<std::size_t> a, b, c;
  for (int q = 0; q < 1000; ++q) {
    const std::size_t cell = rng() % lazy.cell_count();
    const int p = 1 + static_cast<int>(rng() % 2);
    const std::size_t wi = rng() % lazy.inputs().size();
    lazy.successor_cells(cell, p, wi, a);
    table.successor_cells(cell, p, wi, b);
    table2.successor_cells(cell, p, wi, c);
    CHECK(a == b);
    CHECK(b == c); /* worker count cannot change the table */
  }
}

TEST_CASE("full-resolution lazy queries match the reference scan") {
  auto link = testing::traffic_link();
  UniformGrid wgrid(link.internal_domain(), 0.03);
  auto fts = build_finite_ts(link, 0.03, InternalInputSet::from_grid(wgrid));
  std::mt19937_64 rng(29);
  std::vector<std::size_t> got;
  for (int q = 0; q < 100; ++q) {
    const std::size_t cell = rng() % fts.cell_count();
    const int p = 1 + static_cast<int>(rng() % 2);
    const std::size_t wi = rng() % fts.inputs().size();
    fts.successor_cells(cell, p, wi, got);

    const Vec img = link.step(p, fts.grid().point(cell), fts.inputs().point(wi));
    std::vector<std::size_t> want;
    fts.grid().ball(img.data(), 0.03, want);
    CHECK(got == want);
    CHECK(fts.successor_cell_count(cell, p, wi) == want.size());
  }
}

TEST_CASE("soundness of the quantized relation on random instances") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> entry(-0.6, 0.6), offset(-0.3, 0.3);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 2);
    Mat A(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) A(r, c) = entry(rng) / n;
    Vec b(n);
    for (int r = 0; r < n; ++r) b[r] = offset(rng);
    const Box state(Vec::Constant(n, -1.0), Vec::Constant(n, 1.0));
    SwitchedSubsystem sys(1, {{A, Mat::Zero(n, 0), b}}, BoxList{state}, BoxList{}, {},
                          {{1, Mat::Identity(n, n)}}, 1, KinfFn::identity());
    const double eta = n == 1 ? 0.2 : 0.25; /* <= 200 grid points */
    auto fts = build_finite_ts(sys, eta, InternalInputSet::none());
    REQUIRE(fts.cell_count() <= 200);

    for (std::size_t cell = 0; cell < fts.cell_count(); ++cell) {
      std::vector<std::size_t> succ;
      fts.successor_cells(cell, 1, 0, succ);
      const Vec img = sys.step(1, fts.grid().point(cell), Vec(0));
      std::set<std::size_t> got(succ.begin(), succ.end());
      for (std::size_t c2 = 0; c2 < fts.cell_count(); ++c2) {
        const double dist = (fts.grid().point(c2) - img).cwiseAbs().maxCoeff();
        const bool within = dist <= eta * (1.0 + 1e-12);
        CHECK(within == (got.count(c2) > 0));
      }
    }
  }
}

TEST_CASE("dwell automaton structure of the abstraction") {
  auto sys = decay_system(0.5, 1.0, /*modes=*/2, /*dwell=*/3);
  auto fts = build_finite_ts(sys, 0.5, InternalInputSet::none());
  for (std::size_t a = 0; a < fts.aug_count(); ++a) {
    const AugState s = fts.aug_state(a);
    CHECK(fts.aug_index(s) == a);
    for (int u = 1; u <= 2; ++u) {
      for (const AugState& t : fts.successors(s, u, 0)) {
        CHECK(u == s.mode); /* otherwise no successors exist at all */
        if (t.mode != s.mode) {
          CHECK(s.dwell == 2);
          CHECK(t.dwell == 0);
        } else {
          CHECK(t.dwell == std::min(s.dwell + 1, 2));
        }
        CHECK(t.dwell <= 2);
      }
    }
  }
}

TEST_CASE("non-blocking on a domain closed under the dynamics") {
  /* enlarge the state box so the green mode cannot escape: with x in
   * [0,60]^2 and w in [0,30], both modes map into the box */
  const auto base = testing::traffic_link();
  const Box state(Vec::Zero(2), Vec::Constant(2, 60.0));
  std::vector<ModeDynamics> modes{base.dynamics(1), base.dynamics(2)};
  SwitchedSubsystem sys(1, std::move(modes), BoxList{state}, base.internal_domain(),
                        base.internal_blocks(), base.output_blocks(), 1,
                        KinfFn::identity());
  UniformGrid wgrid(sys.internal_domain(), 1.0);
  auto fts = build_finite_ts(sys, 1.0, InternalInputSet::from_grid(wgrid),
                             /*materialize=*/false, SinkPolicy::forbid);
  for (std::size_t cell = 0; cell < fts.cell_count(); ++cell) {
    for (int p = 1; p <= 2; ++p) {
      for (std::size_t wi = 0; wi < fts.inputs().size(); ++wi) {
        CHECK(fts.successor_cell_count(cell, p, wi) >= 1);
      }
    }
  }
}

TEST_CASE("output runs of the system and its transition system coincide") {
  auto link = testing::traffic_link();
  std::mt19937_64 rng(37);

  /* constant switching signal */
  {
    std::vector<int> p(51, 2);
    std::vector<Vec> w(50, Vec::Constant(1, 3.0));
    Vec x0(2);
    x0 << 1.0, 2.0;
    CHECK(run_equivalence_check(link, x0, p, w, 50));
  }

  /* random admissible switching at dwell time one; the inflow stays small
   * enough that the green mode cannot push the density out of the domain */
  {
    std::vector<int> p;
    std::vector<Vec> w;
    p.push_back(1 + static_cast<int>(rng() % 2));
    for (int k = 0; k < 100; ++k) {
      p.push_back(1 + static_cast<int>(rng() % 2));
      w.push_back(Vec::Constant(1, double(rng() % 3)));
    }
    CHECK(run_equivalence_check(link, Vec::Zero(2), p, w, 100));
  }

  /* early switch under dwell three */
  {
    auto sys = decay_system(0.5, 1.0, /*modes=*/2, /*dwell=*/3);
    std::vector<int> p{1, 2, 2, 2, 2, 2};
    std::vector<Vec> w(5, Vec(0));
    CHECK_THROWS_AS(run_equivalence_check(sys, Vec::Constant(1, 1.0), p, w, 5),
                    DwellViolation);
  }
}
