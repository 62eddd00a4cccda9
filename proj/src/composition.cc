#include "symco/composition.hh"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "symco/errors.hh"
#include "symco/sampling.hh"

namespace symco {

namespace {
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
}  // namespace

GainMatrix::GainMatrix(int n) : n_(n), entries_(static_cast<std::size_t>(n) * n) {
  if (n < 1) throw DimensionMismatch("gain matrix: needs at least one node");
}

void GainMatrix::set(int i, int j, KinfFn g) {
  if (i < 1 || i > n_ || j < 1 || j > n_)
    throw DimensionMismatch("gain matrix: index out of range");
  entries_[static_cast<std::size_t>(i - 1) * n_ + (j - 1)] = std::move(g);
}

const std::optional<KinfFn>& GainMatrix::at(int i, int j) const {
  if (i < 1 || i > n_ || j < 1 || j > n_)
    throw DimensionMismatch("gain matrix: index out of range");
  return entries_[static_cast<std::size_t>(i - 1) * n_ + (j - 1)];
}

bool GainMatrix::all_linear() const {
  for (const auto& e : entries_) {
    if (e && !e->is_linear()) return false;
  }
  return true;
}

std::vector<std::vector<double>> GainMatrix::slopes() const {
  std::vector<std::vector<double>> s(static_cast<std::size_t>(n_),
                                     std::vector<double>(static_cast<std::size_t>(n_), 0.0));
  for (int i = 1; i <= n_; ++i) {
    for (int j = 1; j <= n_; ++j) {
      const auto& e = at(i, j);
      if (!e) continue;
      if (!e->is_linear())
        throw NonLinearGains("gain matrix: entry (" + std::to_string(i) + "," +
                             std::to_string(j) + ") is not linear");
      s[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] =
          e->linear_slope();
    }
  }
  return s;
}

std::string GainMatrix::to_dot() const {
  std::ostringstream os;
  os << "digraph gains {\n";
  for (int i = 1; i <= n_; ++i) os << "  n" << i << ";\n";
  for (int i = 1; i <= n_; ++i) {
    for (int j = 1; j <= n_; ++j) {
      const auto& e = at(i, j);
      if (!e) continue;
      os << "  n" << j << " -> n" << i << " [label=\"" << e->str() << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

GainMatrix gain_matrix(const std::vector<AltSimCert>& ascs,
                       const std::vector<Edge>& edges) {
  const int n = static_cast<int>(ascs.size());
  GainMatrix gm(n);
  for (int i = 1; i <= n; ++i)
    gm.set(i, i, KinfFn::linear(ascs[static_cast<std::size_t>(i - 1)].sigma));
  for (const Edge& e : edges) {
    if (e.from < 1 || e.from > n || e.to < 1 || e.to > n)
      throw DimensionMismatch("gain matrix: edge endpoint out of range");
    const AltSimCert& asc_to = ascs[static_cast<std::size_t>(e.to - 1)];
    const AltSimCert& asc_from = ascs[static_cast<std::size_t>(e.from - 1)];
    gm.set(e.to, e.from,
           KinfFn::compose(asc_to.rho_hat(), asc_from.alpha.inverse()));
  }
  return gm;
}

/* ----------------------------- cycles ---------------------------------- */

namespace {

/* adjacency in influence direction: arc j -> i when gamma_ij is present */
std::vector<std::vector<int>> influence_arcs(const GainMatrix& gm) {
  const int n = gm.size();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (gm.at(i, j)) adj[static_cast<std::size_t>(j - 1)].push_back(i - 1);
    }
  }
  return adj;
}

/* enumerates simple directed cycles with the smallest node as the root;
 * returns false when the budget ran out */
bool enumerate_cycles(const std::vector<std::vector<int>>& adj, std::size_t budget,
                      std::vector<std::vector<int>>& cycles) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> path;
  std::vector<bool> on_path(static_cast<std::size_t>(n), false);
  bool ok = true;

  std::function<void(int, int)> dfs = [&](int root, int v) {
    if (!ok) return;
    path.push_back(v);
    on_path[static_cast<std::size_t>(v)] = true;
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (!ok) break;
      if (w == root) {
        if (cycles.size() >= budget) {
          ok = false;
          break;
        }
        cycles.push_back(path);
      } else if (w > root && !on_path[static_cast<std::size_t>(w)]) {
        dfs(root, w);
      }
    }
    on_path[static_cast<std::size_t>(v)] = false;
    path.pop_back();
  };

  for (int root = 0; root < n && ok; ++root) dfs(root, root);
  return ok;
}

/* max geometric cycle mean of the slope matrix via Karp's algorithm in the
 * log domain; nullopt when the digraph has no cycle */
std::optional<double> max_cycle_mean_log(const std::vector<std::vector<double>>& slopes) {
  const int n = static_cast<int>(slopes.size());
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  /* D[k][v] = max log-weight of a k-arc walk ending at v */
  std::vector<std::vector<double>> D(static_cast<std::size_t>(n + 1),
                                     std::vector<double>(static_cast<std::size_t>(n), kNegInf));
  for (int v = 0; v < n; ++v) D[0][static_cast<std::size_t>(v)] = 0.0;
  for (int k = 1; k <= n; ++k) {
    for (int v = 0; v < n; ++v) {
      double best = kNegInf;
      for (int u = 0; u < n; ++u) {
        const double s = slopes[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)];
        if (s <= 0.0) continue; /* no arc u -> v */
        if (D[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(u)] == kNegInf)
          continue;
        best = std::max(best, D[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(u)] +
                                  std::log(s));
      }
      D[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] = best;
    }
  }
  double mu = kNegInf;
  for (int v = 0; v < n; ++v) {
    if (D[static_cast<std::size_t>(n)][static_cast<std::size_t>(v)] == kNegInf) continue;
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (D[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] == kNegInf) continue;
      worst = std::min(worst,
                       (D[static_cast<std::size_t>(n)][static_cast<std::size_t>(v)] -
                        D[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)]) /
                           double(n - k));
    }
    mu = std::max(mu, worst);
  }
  if (mu == kNegInf) return std::nullopt;
  return std::exp(mu);
}

}  // namespace

SmallGainReport check_small_gain(const GainMatrix& gm, std::size_t cycle_budget) {
  SmallGainReport report;
  const bool linear = gm.all_linear();
  if (linear) report.max_cycle_mean = max_cycle_mean_log(gm.slopes());

  auto adj = influence_arcs(gm);
  std::vector<std::vector<int>> cycles;
  const bool enumerated = enumerate_cycles(adj, cycle_budget, cycles);

  if (!enumerated) {
    if (!linear)
      throw CycleExplosion("small gain: cycle budget exceeded and gains are not linear");
    report.used_spectral_fallback = true;
    report.pass = *report.max_cycle_mean < 1.0;
    return report;
  }

  report.pass = true;
  for (const auto& cyc : cycles) {
    CycleVerdict verdict;
    for (int v : cyc) verdict.nodes.push_back(v + 1);

    if (linear) {
      double prod = 1.0;
      for (std::size_t t = 0; t < cyc.size(); ++t) {
        const int from = cyc[t] + 1;
        const int to = cyc[(t + 1) % cyc.size()] + 1;
        prod *= gm.at(to, from)->linear_slope();
      }
      verdict.slope_product = prod;
      verdict.ok = prod < 1.0;
      if (!verdict.ok) verdict.witness = 1.0;
    } else {
      /* the cycle condition quantifies over every rotation; composition of
       * non-linear gains is not rotation invariant, so test each */
      verdict.ok = true;
      for (std::size_t rot = 0; rot < cyc.size() && verdict.ok; ++rot) {
        std::optional<KinfFn> composed;
        for (std::size_t t = 0; t < cyc.size(); ++t) {
          const std::size_t a = (rot + t) % cyc.size();
          const std::size_t b = (rot + t + 1) % cyc.size();
          const KinfFn& g = *gm.at(cyc[b] + 1, cyc[a] + 1);
          composed = composed ? KinfFn::compose(g, *composed) : g;
        }
        auto lt = composed->lt_identity();
        if (!lt.holds) {
          verdict.ok = false;
          verdict.witness = lt.witness;
        }
      }
    }
    report.pass = report.pass && verdict.ok;
    report.cycles.push_back(std::move(verdict));
  }
  return report;
}

/* ----------------------------- deltas ---------------------------------- */

namespace {

double posthoc_theta(const std::vector<std::vector<double>>& G,
                     const std::vector<double>& lambda) {
  const std::size_t n = G.size();
  double theta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row = std::max(row, G[i][j] * lambda[j]);
    theta = std::max(theta, row / lambda[i]);
  }
  return theta;
}

}  // namespace

DeltaResult compute_deltas(const GainMatrix& gm) {
  const auto G = gm.slopes(); /* throws NonLinearGains */
  const std::size_t n = G.size();

  std::vector<double> lambda(n, 1.0);
  std::vector<double> best_lambda = lambda;
  double best_theta = posthoc_theta(G, lambda);

  /* max-algebra power iteration; the running geometric mean of the iterates
   * converges on critical cycles where the raw iteration oscillates */
  std::vector<double> log_acc(n, 0.0);
  std::vector<double> cur = lambda;
  const int max_iters = 100 * static_cast<int>(n) + 100;
  for (int t = 1; t <= max_iters; ++t) {
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v = std::max(v, G[i][j] * cur[j]);
      /* rows without incoming gains keep a vanishing trace of themselves so
       * normalization stays well-defined */
      next[i] = std::max(v, 1e-12 * cur[i]);
    }
    double norm = *std::max_element(next.begin(), next.end());
    for (auto& v : next) v /= norm;
    cur = next;

    std::vector<double> mean(n);
    for (std::size_t i = 0; i < n; ++i) {
      log_acc[i] += std::log(cur[i]);
      mean[i] = std::exp(log_acc[i] / t);
    }
    for (const auto& cand : {cur, mean}) {
      const double th = posthoc_theta(G, cand);
      if (th < best_theta) {
        best_theta = th;
        best_lambda = cand;
      }
    }
    if (best_theta < 1.0 && t > 8) break;
  }

  if (best_theta >= 1.0) {
    /* path-closure fallback: scale the matrix below its spectral value and
     * take the longest-path weights as lambda */
    auto mcm = max_cycle_mean_log(G);
    const double theta_star = mcm ? *mcm : 0.0;
    if (theta_star >= 1.0)
      throw Error("compute deltas: small-gain condition does not hold");
    const double theta_c = theta_star > 0.0 ? std::sqrt(theta_star) : 0.5;
    /* longest path into each node in the log domain (no positive cycles) */
    std::vector<double> dist(n, 0.0);
    for (std::size_t round = 0; round + 1 < n + 1; ++round) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (G[i][j] <= 0.0) continue;
          const double w = std::log(G[i][j] / theta_c);
          if (dist[j] + w > dist[i] + 1e-15) {
            dist[i] = dist[j] + w;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    for (std::size_t i = 0; i < n; ++i) best_lambda[i] = std::exp(dist[i]);
    best_theta = posthoc_theta(G, best_lambda);
  }

  if (best_theta >= 1.0)
    throw Error("compute deltas: failed to certify a contraction factor below 1");
  return {best_lambda, best_theta};
}

/* ------------------------ composed certificate -------------------------- */

double NetworkAltSimCert::evaluate(const std::vector<Vec>& x, const std::vector<Vec>& xh,
                                   const std::vector<int>& p,
                                   const std::vector<int>& l) const {
  double s = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i)
    s = std::max(s, parts[i].evaluate(x[i], xh[i], p[i], l[i]) / lambda[i]);
  return s;
}

double NetworkAltSimCert::alpha_eval(double s) const {
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < parts.size(); ++i)
    v = std::min(v, parts[i].alpha(s) / lambda[i]);
  return v;
}

double NetworkAltSimCert::alpha_inverse(double t) const {
  double v = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i)
    v = std::max(v, parts[i].alpha.inverse()(lambda[i] * t));
  return v;
}

NetworkAltSimCert composed_alt_sim(const std::vector<AltSimCert>& ascs,
                                   const DeltaResult& deltas) {
  if (ascs.size() != deltas.lambda.size())
    throw DimensionMismatch("composed alt-sim: certificate/delta count mismatch");
  NetworkAltSimCert nasc;
  nasc.parts = ascs;
  nasc.lambda = deltas.lambda;
  nasc.sigma_tilde = deltas.theta;

  /* floor: the per-subsystem floors, plus a conservative slack for internal
   * mismatch at the floor level, all scaled through the deltas */
  double base = 0.0;
  for (std::size_t i = 0; i < ascs.size(); ++i)
    base = std::max(base, ascs[i].eps_tilde / deltas.lambda[i]);
  double net = 0.0;
  for (std::size_t i = 0; i < ascs.size(); ++i) {
    double slack = 0.0;
    if (ascs[i].rho_hat_slope > 0.0) {
      double mismatch = 0.0;
      for (std::size_t j = 0; j < ascs.size(); ++j) {
        if (j == i) continue;
        mismatch = std::max(mismatch,
                            ascs[j].alpha.inverse()(deltas.lambda[j] * base));
      }
      slack = ascs[i].rho_hat_slope * mismatch;
    }
    net = std::max(net, std::max(ascs[i].eps_tilde, slack) / deltas.lambda[i]);
  }
  nasc.eps_tilde = net;
  return nasc;
}

/* ----------------------- finite interconnection ------------------------- */

namespace {

/* lexicographic order on consecutive dim-tuples inside a flat array */
bool tuple_less(const double* a, const double* b, int dim) {
  for (int r = 0; r < dim; ++r) {
    if (a[r] < b[r]) return true;
    if (a[r] > b[r]) return false;
  }
  return false;
}

}  // namespace

InternalInputSet coupled_inputs(const NetworkSpec& net, int id,
                                const std::vector<UniformGrid>& grids) {
  const SwitchedSubsystem& sub = net.by_id(id);
  if (sub.internal_dim() == 0) return InternalInputSet::none();
  std::vector<InternalInputSet::Block> blocks;
  for (const auto& blk : sub.internal_blocks()) {
    const int j = net.index_of(blk.source);
    const SwitchedSubsystem& src = net.by_id(blk.source);
    const Mat* C = src.output_matrix(id);
    if (C == nullptr)
      throw CouplingMismatch("coupled inputs: neighbor " + std::to_string(blk.source) +
                             " has no output block for subsystem " + std::to_string(id));
    if (C->rows() != blk.dim)
      throw DimensionMismatch("coupled inputs: block dimension mismatch");
    const UniformGrid& g = grids[static_cast<std::size_t>(j)];

    /* the set of neighbor output values over its grid: images are computed
     * cell by cell, then deduplicated into a sorted point list (the image
     * of many cells typically collapses onto few distinct outputs) */
    std::vector<double> raw(g.size() * static_cast<std::size_t>(blk.dim));
    for (std::size_t c = 0; c < g.size(); ++c) {
      Vec y = (*C) * g.point(c);
      for (int r = 0; r < blk.dim; ++r)
        raw[c * static_cast<std::size_t>(blk.dim) + static_cast<std::size_t>(r)] = y[r];
    }
    std::vector<std::size_t> order(g.size());
    for (std::size_t c = 0; c < g.size(); ++c) order[c] = c;
    const int dim = blk.dim;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return tuple_less(raw.data() + a * dim, raw.data() + b * dim, dim);
    });

    InternalInputSet::Block out;
    out.source = blk.source;
    out.dim = blk.dim;
    for (std::size_t c : order) {
      const double* tup = raw.data() + c * static_cast<std::size_t>(dim);
      const std::size_t have = out.flat.size();
      if (have >= static_cast<std::size_t>(dim) &&
          std::equal(tup, tup + dim, out.flat.data() + have - dim))
        continue;
      out.flat.insert(out.flat.end(), tup, tup + dim);
    }
    blocks.push_back(std::move(out));
  }
  return InternalInputSet::from_blocks(std::move(blocks));
}

NetworkTransitionSystem::NetworkTransitionSystem(
    const NetworkSpec& net, std::vector<FiniteTransitionSystem> components)
    : net_(&net), components_(std::move(components)) {
  if (components_.size() != net.subsystems.size())
    throw DimensionMismatch("network ts: component count mismatch");
  block_refs_.resize(components_.size());
  for (std::size_t ci = 0; ci < components_.size(); ++ci) {
    const auto& blocks = components_[ci].inputs().blocks();
    /* strides of the mixed-radix input index, last block fastest */
    std::vector<std::size_t> strides(blocks.size(), 1);
    for (std::size_t b = blocks.size(); b-- > 1;)
      strides[b - 1] = strides[b] * blocks[b].count();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].source < 0)
        throw CouplingMismatch("network ts: component has an uncoupled input block");
      const int src_ci = net.index_of(blocks[b].source);
      const Mat* C =
          net.subsystems[static_cast<std::size_t>(src_ci)].output_matrix(
              net.subsystems[ci].id());
      if (C == nullptr || C->rows() != blocks[b].dim)
        throw CouplingMismatch("network ts: output block shape mismatch");
      block_refs_[ci].push_back({src_ci, *C, strides[b]});
    }
  }
}

std::size_t NetworkTransitionSystem::coupled_widx(
    int ci, const std::vector<std::size_t>& cells) const {
  const auto& blocks = components_[static_cast<std::size_t>(ci)].inputs().blocks();
  std::size_t widx = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const BlockRef& ref = block_refs_[static_cast<std::size_t>(ci)][b];
    const Vec y =
        ref.output *
        components_[static_cast<std::size_t>(ref.source_ci)].grid().point(
            cells[static_cast<std::size_t>(ref.source_ci)]);
    /* position of the value inside the sorted block list; the value was
     * produced by the same matrix-vector expression, so the comparison is
     * exact */
    const int dim = blocks[b].dim;
    const std::size_t count = blocks[b].count();
    std::size_t lo = 0, hi = count;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (tuple_less(blocks[b].flat.data() + mid * dim, y.data(), dim))
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo >= count ||
        !std::equal(y.data(), y.data() + dim, blocks[b].flat.data() + lo * dim))
      throw CouplingMismatch("network ts: coupled value missing from the input list");
    widx += lo * ref.stride;
  }
  return widx;
}

std::vector<std::vector<AugState>> NetworkTransitionSystem::component_successors(
    const std::vector<AugState>& state, const std::vector<int>& u) const {
  std::vector<std::size_t> cells(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) cells[i] = state[i].cell;
  std::vector<std::vector<AugState>> out(components_.size());
  for (std::size_t ci = 0; ci < components_.size(); ++ci) {
    out[ci] = components_[ci].successors(state[ci], u[ci],
                                         coupled_widx(static_cast<int>(ci), cells));
  }
  return out;
}

NetworkTransitionSystem interconnect_finite(const NetworkSpec& net,
                                            std::vector<FiniteTransitionSystem> ftss) {
  if (ftss.size() != net.subsystems.size())
    throw DimensionMismatch("interconnect: component count mismatch");
  std::vector<UniformGrid> grids;
  grids.reserve(ftss.size());
  for (const auto& f : ftss) grids.push_back(f.grid());

  /* every internal point list must equal the neighbor output-grid image */
  for (std::size_t ci = 0; ci < ftss.size(); ++ci) {
    const int id = net.subsystems[ci].id();
    InternalInputSet expect = coupled_inputs(net, id, grids);
    const auto& got = ftss[ci].inputs().blocks();
    const auto& want = expect.blocks();
    if (got.size() != want.size())
      throw CouplingMismatch("interconnect: block count mismatch at subsystem " +
                             std::to_string(id));
    for (std::size_t b = 0; b < got.size(); ++b) {
      if (got[b].source != want[b].source || got[b].dim != want[b].dim ||
          got[b].flat.size() != want[b].flat.size())
        throw CouplingMismatch("interconnect: block shape mismatch at subsystem " +
                               std::to_string(id));
      for (std::size_t t = 0; t < got[b].flat.size(); ++t) {
        if (std::abs(got[b].flat[t] - want[b].flat[t]) > 1e-12)
          throw CouplingMismatch("interconnect: internal point list differs from the "
                                 "neighbor output image at subsystem " +
                                 std::to_string(id));
      }
    }
  }
  return NetworkTransitionSystem(net, std::move(ftss));
}

/* ------------------------- composed verification ------------------------ */

FalsificationReport verify_composed_sampled(const NetworkSpec& net,
                                            const NetworkTransitionSystem& nts,
                                            const NetworkAltSimCert& nasc,
                                            std::size_t count, std::uint64_t seed) {
  FalsificationReport report;
  report.seed = seed;
  Rng rng(seed);
  const std::size_t N = net.subsystems.size();
  const auto& comps = nts.components();

  std::size_t attempts = 0;
  const std::size_t max_attempts = 64 * count + 1024;
  std::vector<std::size_t> cells(N);
  std::vector<Vec> x(N), xh(N), xnext(N);
  std::vector<int> p(N), l(N);
  std::vector<std::vector<std::size_t>> succ_cells(N);

  while (report.samples < count && attempts < max_attempts) {
    ++attempts;
    bool feasible = true;

    for (std::size_t i = 0; i < N; ++i) {
      const SwitchedSubsystem& sub = net.subsystems[i];
      p[i] = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(sub.mode_count()));
      l[i] = static_cast<int>(rng() % static_cast<std::uint64_t>(sub.dwell_time()));
      x[i] = sample_box(sub.state_domain(), rng);
      if (rng() % 2 == 0) {
        cells[i] = *comps[i].grid().nearest(x[i]);
      } else {
        cells[i] = rng() % comps[i].cell_count();
      }
      xh[i] = comps[i].grid().point(cells[i]);
    }

    /* concrete coupled step */
    for (std::size_t i = 0; i < N && feasible; ++i) {
      const SwitchedSubsystem& sub = net.subsystems[i];
      Vec w(sub.internal_dim());
      int off = 0;
      for (const auto& blk : sub.internal_blocks()) {
        const std::size_t j = static_cast<std::size_t>(net.index_of(blk.source));
        const Mat* C = net.subsystems[j].output_matrix(sub.id());
        if (C == nullptr || C->rows() != blk.dim)
          throw DimensionMismatch("verify composed: coupling block shape mismatch");
        w.segment(off, blk.dim) = (*C) * x[j];
        off += blk.dim;
      }
      xnext[i] = sub.step(p[i], x[i], w);
      if (!contains(sub.state_domain(), xnext[i], 1e-12)) feasible = false;
    }
    if (!feasible) continue;

    /* abstract coupled successor cells */
    for (std::size_t i = 0; i < N && feasible; ++i) {
      const std::size_t widx = nts.coupled_widx(static_cast<int>(i), cells);
      comps[i].successor_cells(cells[i], p[i], widx, succ_cells[i]);
      if (succ_cells[i].empty()) feasible = false;
    }
    if (!feasible) continue;

    ++report.samples;
    const double S = nasc.evaluate(x, xh, p, l);
    auto tol = [](double rhs) { return 1e-9 * (1.0 + std::abs(rhs)); };

    /* first display over the external outputs */
    double mismatch = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      mismatch = std::max(mismatch, inf_norm(net.subsystems[i].external_output(x[i]) -
                                             net.subsystems[i].external_output(xh[i])));
    }
    const double lhs1 = nasc.alpha_eval(mismatch);
    if (lhs1 > S + tol(S)) {
      report.violations.push_back({"output-bound", lhs1, S, "sample"});
    }

    /* second display: components minimize independently, so the min over the
     * product is the max of per-component minima; adversarial (p', l') are
     * enumerated when cheap and sampled otherwise */
    const double rhs = std::max(nasc.sigma_tilde * S, nasc.eps_tilde);
    std::vector<std::vector<std::pair<int, int>>> scen(N);
    std::size_t combos = 1;
    for (std::size_t i = 0; i < N; ++i) {
      scen[i] = dwell_scenarios(net.subsystems[i].mode_count(),
                                net.subsystems[i].dwell_time(), p[i], l[i]);
      combos *= scen[i].size();
    }
    const std::size_t n_combos = std::min<std::size_t>(combos, 64);
    for (std::size_t cidx = 0; cidx < n_combos; ++cidx) {
      std::size_t sel = combos <= 64 ? cidx : rng() % combos;
      double s2 = 0.0;
      std::ostringstream detail;
      for (std::size_t i = 0; i < N; ++i) {
        const auto [p2, l2] = scen[i][sel % scen[i].size()];
        sel /= scen[i].size();
        double best = -1.0;
        for (std::size_t c : succ_cells[i]) {
          const double v =
              nasc.parts[i].evaluate(xnext[i], comps[i].grid().point(c), p2, l2) /
              nasc.lambda[i];
          if (best < 0.0 || v < best) best = v;
        }
        s2 = std::max(s2, best);
      }
      if (s2 > rhs + tol(rhs)) {
        std::ostringstream w;
        w << "combo=" << cidx;
        for (std::size_t i = 0; i < N; ++i) w << " x" << i << "=" << vec_str(x[i]);
        report.violations.push_back({"transition-bound", s2, rhs, w.str()});
      }
    }
  }
  if (report.samples < count)
    throw Error("verify composed: could not draw enough in-domain samples");
  return report;
}

}  // namespace symco
