#include "symco/synthesis.hh"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include "symco/errors.hh"

namespace symco {

namespace {

constexpr char kCtrlMagic[8] = {'S', 'Y', 'M', 'C', 'O', 'C', 'T', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("controller dump: truncated stream");
  return v;
}

/* admissible internal-input indices inside the assumption box; with the
 * monotone flag only the per-axis extreme points survive */
std::vector<std::size_t> admissible_inputs(const FiniteTransitionSystem& fts,
                                           const Box& assumption, bool monotone_w) {
  const auto& inputs = fts.inputs();
  if (inputs.dim() == 0) return {0};
  if (assumption.dim() != inputs.dim())
    throw DimensionMismatch("solve safety: assumption box dimension mismatch");
  const double tol = 1e-9 * (1.0 + assumption.upper().cwiseAbs().maxCoeff());
  std::vector<std::size_t> admissible;
  for (std::size_t wi = 0; wi < inputs.size(); ++wi) {
    if (assumption.contains(inputs.point(wi), tol)) admissible.push_back(wi);
  }
  if (admissible.empty())
    throw DomainViolation("solve safety: assumption box excludes every internal point");
  if (!monotone_w || admissible.size() <= 2) return admissible;

  std::vector<std::size_t> extremes;
  for (int axis = 0; axis < inputs.dim(); ++axis) {
    std::size_t lo = admissible.front(), hi = admissible.front();
    double lo_v = inputs.point(lo)[axis], hi_v = lo_v;
    for (std::size_t wi : admissible) {
      const double v = inputs.point(wi)[axis];
      if (v < lo_v) {
        lo_v = v;
        lo = wi;
      }
      if (v > hi_v) {
        hi_v = v;
        hi = wi;
      }
    }
    extremes.push_back(lo);
    extremes.push_back(hi);
  }
  std::sort(extremes.begin(), extremes.end());
  extremes.erase(std::unique(extremes.begin(), extremes.end()), extremes.end());
  return extremes;
}

/* next dwell counter when committing to successor mode u from (p, l) */
inline int next_dwell(int p, int l, int u, int kd) {
  if (u == p) return l < kd - 1 ? l + 1 : kd - 1;
  return 0;
}

}  // namespace

SafetyController::SafetyController(Box safe_output, int mode_count, int dwell_time,
                                   std::vector<std::uint32_t> allowed)
    : safe_output_(std::move(safe_output)),
      mode_count_(mode_count),
      dwell_time_(dwell_time),
      allowed_(std::move(allowed)) {}

std::size_t SafetyController::winning_count() const {
  std::size_t c = 0;
  for (auto m : allowed_) c += m != 0 ? 1 : 0;
  return c;
}

SafetyController solve_safety(const FiniteTransitionSystem& fts, const SafetySpec& spec,
                              const Box& internal_assumption,
                              const SynthesisOptions& options, SynthesisStats* stats) {
  const SwitchedSubsystem& sub = fts.subsystem();
  const UniformGrid& grid = fts.grid();
  const int m = fts.mode_count();
  const int kd = fts.dwell_time();
  const std::size_t cells = fts.cell_count();
  const std::size_t augs = fts.aug_count();
  if (m > 32) throw DimensionMismatch("solve safety: more than 32 modes unsupported");

  const auto admissible = admissible_inputs(fts, internal_assumption, options.monotone_w);
  if (stats) stats->admissible_inputs = admissible.size();

  /* safe cells: external output inside the safe box */
  const double tol = 1e-9 * (1.0 + spec.safe_output.upper().cwiseAbs().maxCoeff());
  std::vector<std::uint8_t> cell_safe(cells, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    cell_safe[c] = spec.safe_output.contains(sub.external_output(grid.point(c)), tol) ? 1 : 0;
  }

  std::vector<std::uint8_t> win(augs, 0), next_win(augs, 0);
  for (std::size_t a = 0; a < augs; ++a) {
    win[a] = cell_safe[fts.aug_state(a).cell];
  }

  auto sweep = [&](const std::vector<std::uint8_t>& cur, std::vector<std::uint8_t>& out,
                   std::vector<std::uint32_t>* masks, std::size_t cell_lo,
                   std::size_t cell_hi) {
    std::vector<std::size_t> succ;
    for (std::size_t cell = cell_lo; cell < cell_hi; ++cell) {
      const std::size_t cell_base = cell * static_cast<std::size_t>(m) *
                                    static_cast<std::size_t>(kd);
      if (!cell_safe[cell]) {
        for (std::size_t off = 0; off < static_cast<std::size_t>(m) * kd; ++off) {
          out[cell_base + off] = 0;
          if (masks) (*masks)[cell_base + off] = 0;
        }
        continue;
      }
      for (int p = 1; p <= m; ++p) {
        /* ok[u-1][l'] = every successor cell wins at (u, l'), over all
         * admissible inputs; successor cells depend on (cell, p, w) only */
        std::vector<std::uint8_t> ok(static_cast<std::size_t>(m) * kd, 1);
        for (std::size_t wi : admissible) {
          fts.successor_cells(cell, p, wi, succ);
          if (succ.empty()) { /* sink image: losing under every action */
            std::fill(ok.begin(), ok.end(), 0);
            break;
          }
          for (int u = 1; u <= m; ++u) {
            for (int l2 = 0; l2 < kd; ++l2) {
              auto& slot = ok[static_cast<std::size_t>(u - 1) * kd + l2];
              if (!slot) continue;
              for (std::size_t c2 : succ) {
                const std::size_t a2 =
                    (c2 * static_cast<std::size_t>(m) + static_cast<std::size_t>(u - 1)) *
                        static_cast<std::size_t>(kd) +
                    static_cast<std::size_t>(l2);
                if (!cur[a2]) {
                  slot = 0;
                  break;
                }
              }
            }
          }
        }
        for (int l = 0; l < kd; ++l) {
          const std::size_t a = cell_base +
                                static_cast<std::size_t>(p - 1) * kd +
                                static_cast<std::size_t>(l);
          if (!cur[a]) {
            out[a] = 0;
            if (masks) (*masks)[a] = 0;
            continue;
          }
          std::uint32_t mask = 0;
          for (int u = 1; u <= m; ++u) {
            if (u != p && l != kd - 1) continue; /* switch needs a saturated counter */
            const int l2 = next_dwell(p, l, u, kd);
            if (ok[static_cast<std::size_t>(u - 1) * kd + l2])
              mask |= 1u << (u - 1);
          }
          out[a] = mask != 0 ? 1 : 0;
          if (masks) (*masks)[a] = mask;
        }
      }
    }
  };

  auto run_sweep = [&](const std::vector<std::uint8_t>& cur, std::vector<std::uint8_t>& out,
                       std::vector<std::uint32_t>* masks) {
    const int workers = std::max(1, options.workers);
    if (workers == 1 || cells < 1024) {
      sweep(cur, out, masks, 0, cells);
      return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (cells + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const std::size_t lo = static_cast<std::size_t>(t) * chunk;
      const std::size_t hi = std::min(cells, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] { sweep(cur, out, masks, lo, hi); });
    }
    for (auto& th : pool) th.join();
  };

  std::size_t iterations = 0;
  while (true) {
    run_sweep(win, next_win, nullptr);
    ++iterations;
    if (stats) {
      std::size_t size = 0;
      for (auto b : next_win) size += b;
      stats->sizes.push_back(size);
    }
    if (next_win == win) break;
    std::swap(win, next_win);
    if (iterations > augs + 2)
      throw Error("solve safety: fixed point failed to converge");
  }
  if (stats) stats->iterations = iterations;

  /* final pass to record the allowed-mode masks against the fixed point */
  std::vector<std::uint32_t> masks(augs, 0);
  run_sweep(win, next_win, &masks);

  return SafetyController(spec.safe_output, m, kd, std::move(masks));
}

/* ------------------------------ refinement ------------------------------ */

RefinedController::RefinedController(std::shared_ptr<const SafetyController> controller,
                                     UniformGrid grid, double epsilon_hat)
    : controller_(std::move(controller)), grid_(std::move(grid)), epsilon_hat_(epsilon_hat) {
  if (epsilon_hat_ < 0.0)
    throw DomainViolation("refine: negative relation radius");
  if (controller_->aug_count() !=
      grid_.size() * static_cast<std::size_t>(controller_->mode_count()) *
          static_cast<std::size_t>(controller_->dwell_time()))
    throw DimensionMismatch("refine: controller/grid shape mismatch");
}

std::size_t RefinedController::aug_index(std::size_t cell, int p, int l) const {
  return (cell * static_cast<std::size_t>(controller_->mode_count()) +
          static_cast<std::size_t>(p - 1)) *
             static_cast<std::size_t>(controller_->dwell_time()) +
         static_cast<std::size_t>(l);
}

std::optional<RefinedController::Decision> RefinedController::act(const Vec& x, int p,
                                                                  int l) const {
  const double eta = grid_.eta();
  const int d = grid_.dim();
  std::int64_t center[UniformGrid::kMaxDim], k[UniformGrid::kMaxDim];
  for (int i = 0; i < d; ++i)
    center[i] = static_cast<std::int64_t>(std::llround(x[i] / eta));

  /* expanding shells of the k-lattice; the first winning hit minimizes the
   * quantization distance up to the shell resolution */
  const std::int64_t max_ring =
      static_cast<std::int64_t>(std::floor(epsilon_hat_ / eta + 1e-9)) + 1;
  for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
    std::size_t best_cell = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    /* enumerate the cube [-ring, ring]^d, keep boundary points */
    std::int64_t off[UniformGrid::kMaxDim];
    for (int i = 0; i < d; ++i) off[i] = -ring;
    while (true) {
      std::int64_t linf = 0;
      for (int i = 0; i < d; ++i) linf = std::max(linf, std::abs(off[i]));
      if (linf == ring) {
        for (int i = 0; i < d; ++i) k[i] = center[i] + off[i];
        if (auto cell = grid_.index_of_k(k)) {
          double dist = 0.0;
          for (int i = 0; i < d; ++i)
            dist = std::max(dist, std::abs(x[i] - static_cast<double>(k[i]) * eta));
          if (dist <= epsilon_hat_ * (1.0 + 1e-12) + 1e-12) {
            const std::uint32_t mask = controller_->allowed_modes(aug_index(*cell, p, l));
            if (mask != 0 && dist < best_dist) {
              best_dist = dist;
              best_cell = *cell;
              best_mask = mask;
            }
          }
        }
      }
      int axis = d - 1;
      while (axis >= 0) {
        if (++off[axis] <= ring) break;
        off[axis] = -ring;
        --axis;
      }
      if (axis < 0) break;
    }
    if (best_mask != 0) {
      int mode = 1;
      while (!(best_mask & (1u << (mode - 1)))) ++mode;
      return Decision{best_cell, mode};
    }
  }
  return std::nullopt;
}

std::optional<int> RefinedController::initial_mode(const Vec& x) const {
  for (int p = 1; p <= controller_->mode_count(); ++p) {
    if (act(x, p, 0)) return p;
  }
  return std::nullopt;
}

RefinedController refine_controller(std::shared_ptr<const SafetyController> ctrl,
                                    const FiniteTransitionSystem& fts,
                                    double epsilon_hat) {
  return RefinedController(std::move(ctrl), fts.grid(), epsilon_hat);
}

/* ------------------------------ closed loop ----------------------------- */

ClosedLoopResult simulate_closed_loop(const NetworkSpec& net,
                                      const std::vector<RefinedController>& controllers,
                                      const std::vector<Vec>& x0, int steps,
                                      const std::vector<Box>& verdict_boxes) {
  const std::size_t N = net.subsystems.size();
  if (controllers.size() != N || x0.size() != N || verdict_boxes.size() != N)
    throw DimensionMismatch("simulate: per-subsystem argument count mismatch");

  ClosedLoopResult result;
  std::vector<Vec> x = x0;
  std::vector<int> p(N), l(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    if (!contains(net.subsystems[i].state_domain(), x[i], 1e-12))
      throw DomainViolation("simulate: initial state outside the domain");
    auto mode = controllers[i].initial_mode(x[i]);
    if (!mode) {
      result.safe = false;
      result.controller_failure = true;
      result.failure_step = 0;
      result.failed_subsystem = net.subsystems[i].id();
      return result;
    }
    p[i] = *mode;
  }

  for (int k = 0; k < steps; ++k) {
    /* safety verdict on the current outputs (strict upper bound) */
    for (std::size_t i = 0; i < N; ++i) {
      const Vec y = net.subsystems[i].external_output(x[i]);
      const Box& vb = verdict_boxes[i];
      for (int r = 0; r < y.size(); ++r) {
        if (y[r] < vb.lower()[r] || y[r] >= vb.upper()[r]) {
          result.safe = false;
          if (!result.failure_step) {
            result.failure_step = static_cast<std::size_t>(k);
            result.failed_subsystem = net.subsystems[i].id();
          }
        }
      }
    }

    result.trajectory.push_back({x, p});

    /* coupled concrete step; the mode for step k is p, the controllers pick
     * the successor modes */
    std::vector<Vec> xn(N);
    std::vector<int> pn(N), ln(N);
    for (std::size_t i = 0; i < N; ++i) {
      const SwitchedSubsystem& sub = net.subsystems[i];
      Vec w(sub.internal_dim());
      int off = 0;
      for (const auto& blk : sub.internal_blocks()) {
        const std::size_t j = static_cast<std::size_t>(net.index_of(blk.source));
        const Mat* C = net.subsystems[j].output_matrix(sub.id());
        if (C == nullptr || C->rows() != blk.dim)
          throw DimensionMismatch("simulate: coupling block shape mismatch");
        w.segment(off, blk.dim) = (*C) * x[j];
        off += blk.dim;
      }
      xn[i] = sub.step(p[i], x[i], w);

      auto decision = controllers[i].act(x[i], p[i], l[i]);
      if (!decision) {
        result.safe = false;
        result.controller_failure = true;
        result.failure_step = static_cast<std::size_t>(k);
        result.failed_subsystem = sub.id();
        return result;
      }
      pn[i] = decision->next_mode;
      ln[i] = next_dwell(p[i], l[i], decision->next_mode, sub.dwell_time());
    }
    x = std::move(xn);
    p = std::move(pn);
    l = std::move(ln);
  }
  return result;
}

void write_trajectory_csv(std::ostream& os, const ClosedLoopResult& result,
                          const NetworkSpec& net) {
  int max_dim = 0;
  for (const auto& sub : net.subsystems) max_dim = std::max(max_dim, sub.state_dim());
  os << "step,subsystem";
  for (int i = 0; i < max_dim; ++i) os << ",x" << i;
  os << ",mode\n";
  for (std::size_t k = 0; k < result.trajectory.size(); ++k) {
    const auto& step = result.trajectory[k];
    for (std::size_t i = 0; i < step.x.size(); ++i) {
      os << k << "," << net.subsystems[i].id();
      for (int r = 0; r < max_dim; ++r) {
        os << ",";
        if (r < step.x[i].size()) os << step.x[i][r];
      }
      os << "," << step.mode[i] << "\n";
    }
  }
}

/* ------------------------------ persistence ----------------------------- */

void RefinedController::dump(std::ostream& os) const {
  os.write(kCtrlMagic, 8);
  write_pod<std::uint32_t>(os, 1u);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(grid_.dim()));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(controller_->mode_count()));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(controller_->dwell_time()));
  write_pod<double>(os, grid_.eta());
  write_pod<double>(os, epsilon_hat_);

  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(grid_.domain().size()));
  for (const auto& b : grid_.domain()) {
    os.write(reinterpret_cast<const char*>(b.lower().data()),
             static_cast<std::streamsize>(sizeof(double) * b.dim()));
    os.write(reinterpret_cast<const char*>(b.upper().data()),
             static_cast<std::streamsize>(sizeof(double) * b.dim()));
  }

  const Box& safe = controller_->safe_output();
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(safe.dim()));
  os.write(reinterpret_cast<const char*>(safe.lower().data()),
           static_cast<std::streamsize>(sizeof(double) * safe.dim()));
  os.write(reinterpret_cast<const char*>(safe.upper().data()),
           static_cast<std::streamsize>(sizeof(double) * safe.dim()));

  /* winning-set bitmap, then the allowed-mode table for winning states */
  const std::size_t augs = controller_->aug_count();
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(augs));
  std::vector<std::uint64_t> bitmap((augs + 63) / 64, 0);
  for (std::size_t a = 0; a < augs; ++a) {
    if (controller_->winning(a)) bitmap[a / 64] |= std::uint64_t(1) << (a % 64);
  }
  os.write(reinterpret_cast<const char*>(bitmap.data()),
           static_cast<std::streamsize>(sizeof(std::uint64_t) * bitmap.size()));
  for (std::size_t a = 0; a < augs; ++a) {
    if (controller_->winning(a)) write_pod<std::uint32_t>(os, controller_->allowed_modes(a));
  }
}

RefinedController RefinedController::load(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCtrlMagic, 8) != 0)
    throw Error("controller dump: bad magic");
  if (read_pod<std::uint32_t>(is) != 1u)
    throw Error("controller dump: unsupported version");
  const int n = static_cast<int>(read_pod<std::uint32_t>(is));
  const int m = static_cast<int>(read_pod<std::uint32_t>(is));
  const int kd = static_cast<int>(read_pod<std::uint32_t>(is));
  const double eta = read_pod<double>(is);
  const double eps_hat = read_pod<double>(is);

  const auto box_count = read_pod<std::uint32_t>(is);
  BoxList domain;
  for (std::uint32_t b = 0; b < box_count; ++b) {
    Vec lo(n), hi(n);
    is.read(reinterpret_cast<char*>(lo.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
    is.read(reinterpret_cast<char*>(hi.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
    if (!is) throw Error("controller dump: truncated domain");
    domain.emplace_back(lo, hi);
  }

  const int safe_dim = static_cast<int>(read_pod<std::uint32_t>(is));
  Vec slo(safe_dim), shi(safe_dim);
  is.read(reinterpret_cast<char*>(slo.data()),
          static_cast<std::streamsize>(sizeof(double) * safe_dim));
  is.read(reinterpret_cast<char*>(shi.data()),
          static_cast<std::streamsize>(sizeof(double) * safe_dim));

  const auto augs = read_pod<std::uint64_t>(is);
  std::vector<std::uint64_t> bitmap((augs + 63) / 64);
  is.read(reinterpret_cast<char*>(bitmap.data()),
          static_cast<std::streamsize>(sizeof(std::uint64_t) * bitmap.size()));
  std::vector<std::uint32_t> allowed(augs, 0);
  for (std::uint64_t a = 0; a < augs; ++a) {
    if (bitmap[a / 64] & (std::uint64_t(1) << (a % 64)))
      allowed[a] = read_pod<std::uint32_t>(is);
  }
  if (!is) throw Error("controller dump: truncated table");

  auto ctrl = std::make_shared<SafetyController>(Box(slo, shi), m, kd, std::move(allowed));
  return RefinedController(std::move(ctrl), UniformGrid(domain, eta), eps_hat);
}

void RefinedController::dump_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("controller dump: cannot open " + path);
  dump(os);
}

RefinedController RefinedController::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("controller dump: cannot open " + path);
  return load(is);
}

}  // namespace symco
