#include "symco/abstraction.hh"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "symco/errors.hh"

namespace symco {

namespace {
constexpr int kMaxInternalDim = 64;
constexpr char kFtsMagic[8] = {'S', 'Y', 'M', 'C', 'O', 'F', 'T', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("dump: truncated stream");
  return v;
}

/* split [0, total) into roughly equal chunks */
std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t total,
                                                              int workers) {
  int w = std::max(1, workers);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t chunk = (total + w - 1) / std::max<std::size_t>(1, w);
  for (std::size_t lo = 0; lo < total; lo += chunk)
    out.emplace_back(lo, std::min(total, lo + chunk));
  return out;
}
}  // namespace

std::vector<std::pair<int, int>> dwell_scenarios(int mode_count, int dwell_time,
                                                 int p, int l) {
  if (l < 0 || l >= dwell_time)
    throw DomainViolation("dwell counter out of range");
  std::vector<std::pair<int, int>> out;
  if (l < dwell_time - 1) {
    out.emplace_back(p, l + 1);
    return out;
  }
  out.emplace_back(p, dwell_time - 1);
  for (int q = 1; q <= mode_count; ++q) {
    if (q != p) out.emplace_back(q, 0);
  }
  return out;
}

std::vector<ConcreteAug> concrete_successors(const SwitchedSubsystem& sub,
                                             const ConcreteAug& s, int u,
                                             const Vec& w) {
  std::vector<ConcreteAug> out;
  if (u != s.mode) return out; /* external input must equal the active mode */
  Vec next = sub.step(s.mode, s.x, w);
  for (auto [p2, l2] : dwell_scenarios(sub.mode_count(), sub.dwell_time(), s.mode, s.dwell)) {
    out.push_back({next, p2, l2});
  }
  return out;
}

/* ---------------------------------------------------------------------- */

InternalInputSet InternalInputSet::none() {
  InternalInputSet s;
  s.dim_ = 0;
  s.size_ = 1;
  return s;
}

InternalInputSet InternalInputSet::from_grid(const UniformGrid& g, int source) {
  Block blk;
  blk.source = source;
  blk.dim = g.dim();
  blk.flat.resize(g.size() * static_cast<std::size_t>(g.dim()));
  for (std::size_t i = 0; i < g.size(); ++i)
    g.point(i, blk.flat.data() + i * static_cast<std::size_t>(g.dim()));
  return from_blocks({std::move(blk)});
}

InternalInputSet InternalInputSet::from_blocks(std::vector<Block> blocks) {
  InternalInputSet s;
  s.blocks_ = std::move(blocks);
  s.dim_ = 0;
  s.size_ = 1;
  for (const auto& b : s.blocks_) {
    if (b.dim <= 0 || b.flat.size() % static_cast<std::size_t>(b.dim) != 0)
      throw DimensionMismatch("internal input set: malformed block");
    if (b.count() == 0)
      throw DomainViolation("internal input set: empty block");
    s.dim_ += b.dim;
    s.size_ *= b.count();
  }
  return s;
}

void InternalInputSet::point(std::size_t widx, double* out) const {
  /* mixed-radix decode, last block fastest */
  std::size_t rem = widx;
  int offset = dim_;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    const std::size_t c = it->count();
    const std::size_t sel = rem % c;
    rem /= c;
    offset -= it->dim;
    std::memcpy(out + offset,
                it->flat.data() + sel * static_cast<std::size_t>(it->dim),
                sizeof(double) * static_cast<std::size_t>(it->dim));
  }
  if (rem != 0) throw DomainViolation("internal input set: index out of range");
}

Vec InternalInputSet::point(std::size_t widx) const {
  Vec w(dim_);
  point(widx, w.data());
  return w;
}

/* ---------------------------------------------------------------------- */

const SwitchedSubsystem& FiniteTransitionSystem::subsystem() const {
  if (!sub_) throw Error("finite ts: no subsystem attached (loaded from dump)");
  return *sub_;
}

std::size_t FiniteTransitionSystem::aug_index(const AugState& s) const {
  return (s.cell * static_cast<std::size_t>(mode_count_) +
          static_cast<std::size_t>(s.mode - 1)) *
             static_cast<std::size_t>(dwell_time_) +
         static_cast<std::size_t>(s.dwell);
}

AugState FiniteTransitionSystem::aug_state(std::size_t idx) const {
  AugState s;
  s.dwell = static_cast<int>(idx % static_cast<std::size_t>(dwell_time_));
  idx /= static_cast<std::size_t>(dwell_time_);
  s.mode = static_cast<int>(idx % static_cast<std::size_t>(mode_count_)) + 1;
  s.cell = idx / static_cast<std::size_t>(mode_count_);
  return s;
}

std::size_t FiniteTransitionSystem::row_index(std::size_t cell, int p,
                                              std::size_t widx) const {
  return (cell * static_cast<std::size_t>(mode_count_) +
          static_cast<std::size_t>(p - 1)) *
             inputs_.size() +
         widx;
}

void FiniteTransitionSystem::lazy_successor_cells(std::size_t cell, int p,
                                                  std::size_t widx,
                                                  std::vector<std::size_t>& out) const {
  const SwitchedSubsystem& sub = subsystem();
  double x[UniformGrid::kMaxDim], img[UniformGrid::kMaxDim], w[kMaxInternalDim];
  grid_->point(cell, x);
  inputs_.point(widx, w);
  sub.step_unchecked(p, x, w, img);
  grid_->ball(img, eta(), out);
}

void FiniteTransitionSystem::successor_cells(std::size_t cell, int p, std::size_t widx,
                                             std::vector<std::size_t>& out) const {
  if (materialized_) {
    const std::size_t row = row_index(cell, p, widx);
    out.assign(targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[row]),
               targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[row + 1]));
    return;
  }
  lazy_successor_cells(cell, p, widx, out);
}

std::size_t FiniteTransitionSystem::successor_cell_count(std::size_t cell, int p,
                                                         std::size_t widx) const {
  if (materialized_) {
    const std::size_t row = row_index(cell, p, widx);
    return static_cast<std::size_t>(offsets_[row + 1] - offsets_[row]);
  }
  const SwitchedSubsystem& sub = subsystem();
  double x[UniformGrid::kMaxDim], img[UniformGrid::kMaxDim], w[kMaxInternalDim];
  grid_->point(cell, x);
  inputs_.point(widx, w);
  sub.step_unchecked(p, x, w, img);
  return grid_->count_in_ball(img, eta());
}

std::vector<AugState> FiniteTransitionSystem::successors(const AugState& s, int u,
                                                         std::size_t widx) const {
  std::vector<AugState> out;
  if (s.is_sink()) {
    out.push_back(s); /* absorbing */
    return out;
  }
  if (u != s.mode) return out;
  std::vector<std::size_t> cells;
  successor_cells(s.cell, s.mode, widx, cells);
  const auto scen = dwell_scenarios(mode_count_, dwell_time_, s.mode, s.dwell);
  if (cells.empty()) {
    if (sink_policy_ == SinkPolicy::forbid)
      throw DomainViolation("finite ts: image left the domain with sink disabled");
    for (auto [p2, l2] : scen) out.push_back({kSinkCell, p2, l2});
    return out;
  }
  for (auto [p2, l2] : scen) {
    for (std::size_t c : cells) out.push_back({c, p2, l2});
  }
  return out;
}

std::uint64_t FiniteTransitionSystem::transition_count(int workers) const {
  if (materialized_) return offsets_.back();
  const SwitchedSubsystem& sub = subsystem();
  const std::size_t cells = cell_count();
  const std::size_t wcount = inputs_.size();
  auto ranges = chunk_ranges(cells, workers);
  std::vector<std::uint64_t> partial(ranges.size(), 0);
  auto work = [&](std::size_t r) {
    double x[UniformGrid::kMaxDim], img[UniformGrid::kMaxDim], w[kMaxInternalDim];
    std::uint64_t acc = 0;
    for (std::size_t cell = ranges[r].first; cell < ranges[r].second; ++cell) {
      grid_->point(cell, x);
      for (int p = 1; p <= mode_count_; ++p) {
        for (std::size_t wi = 0; wi < wcount; ++wi) {
          inputs_.point(wi, w);
          sub.step_unchecked(p, x, w, img);
          acc += grid_->count_in_ball(img, eta());
        }
      }
    }
    partial[r] = acc;
  };
  if (ranges.size() <= 1) {
    if (!ranges.empty()) work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t r = 0; r < ranges.size(); ++r) pool.emplace_back(work, r);
    for (auto& t : pool) t.join();
  }
  std::uint64_t total = 0;
  for (auto v : partial) total += v;
  return total;
}

void FiniteTransitionSystem::materialize_table(int workers) {
  const std::size_t cells = cell_count();
  const std::size_t wcount = inputs_.size();
  const std::size_t rows = cells * static_cast<std::size_t>(mode_count_) * wcount;
  if (cells >= std::numeric_limits<std::uint32_t>::max())
    throw Error("finite ts: too many cells to materialize");

  offsets_.assign(rows + 1, 0);

  auto ranges = chunk_ranges(cells, workers);
  auto count_pass = [&](std::size_t r) {
    std::vector<std::size_t> scratch;
    for (std::size_t cell = ranges[r].first; cell < ranges[r].second; ++cell) {
      for (int p = 1; p <= mode_count_; ++p) {
        for (std::size_t wi = 0; wi < wcount; ++wi) {
          offsets_[row_index(cell, p, wi) + 1] = successor_cell_count(cell, p, wi);
        }
      }
    }
  };
  auto run = [&](auto&& fn) {
    if (ranges.size() <= 1) {
      if (!ranges.empty()) fn(0);
      return;
    }
    std::vector<std::thread> pool;
    for (std::size_t r = 0; r < ranges.size(); ++r) pool.emplace_back(fn, r);
    for (auto& t : pool) t.join();
  };
  run(count_pass);

  for (std::size_t r = 0; r < rows; ++r) offsets_[r + 1] += offsets_[r];
  targets_.assign(offsets_.back(), 0);

  auto fill_pass = [&](std::size_t r) {
    std::vector<std::size_t> scratch;
    for (std::size_t cell = ranges[r].first; cell < ranges[r].second; ++cell) {
      for (int p = 1; p <= mode_count_; ++p) {
        for (std::size_t wi = 0; wi < wcount; ++wi) {
          lazy_successor_cells(cell, p, wi, scratch);
          std::uint64_t at = offsets_[row_index(cell, p, wi)];
          for (std::size_t c : scratch)
            targets_[at++] = static_cast<std::uint32_t>(c);
        }
      }
    }
  };
  run(fill_pass);
  materialized_ = true;
}

FiniteTransitionSystem build_finite_ts(const SwitchedSubsystem& sub, double eta,
                                       double varpi, bool materialize,
                                       SinkPolicy policy, int workers) {
  if (sub.internal_dim() == 0)
    return build_finite_ts(sub, eta, InternalInputSet::none(), materialize, policy,
                           workers);
  if (varpi == 0.0)
    throw DomainViolation(
        "finite ts: varpi = 0 does not quantize a continuum; pass an explicit "
        "internal point list instead");
  UniformGrid wgrid(sub.internal_domain(), varpi);
  return build_finite_ts(sub, eta, InternalInputSet::from_grid(wgrid), materialize,
                         policy, workers);
}

FiniteTransitionSystem build_finite_ts(const SwitchedSubsystem& sub, double eta,
                                       InternalInputSet inputs, bool materialize,
                                       SinkPolicy policy, int workers) {
  if (inputs.dim() != sub.internal_dim())
    throw DimensionMismatch("finite ts: internal point list dimension mismatch");
  if (sub.internal_dim() > kMaxInternalDim)
    throw DimensionMismatch("finite ts: internal dimension too large");
  /* every admissible abstract input must live in the declared domain */
  if (inputs.dim() > 0) {
    for (std::size_t wi = 0; wi < inputs.size(); ++wi) {
      if (!contains(sub.internal_domain(), inputs.point(wi), 1e-9))
        throw DomainViolation("finite ts: internal point outside the domain");
    }
  }
  FiniteTransitionSystem fts;
  fts.sub_ = sub;
  fts.grid_.emplace(sub.state_domain(), eta);
  fts.inputs_ = std::move(inputs);
  fts.mode_count_ = sub.mode_count();
  fts.dwell_time_ = sub.dwell_time();
  fts.sink_policy_ = policy;
  if (materialize) fts.materialize_table(workers);
  return fts;
}

std::vector<AugState> abstract_successors(const SwitchedSubsystem& sub,
                                          const UniformGrid& grid, const AugState& s,
                                          int u, const Vec& wh, double eta,
                                          SinkPolicy policy) {
  std::vector<AugState> out;
  if (s.is_sink()) {
    out.push_back(s);
    return out;
  }
  if (u != s.mode) return out;
  Vec img = sub.step(s.mode, grid.point(s.cell), wh);
  std::vector<std::size_t> cells;
  grid.ball(img.data(), eta, cells);
  const auto scen = dwell_scenarios(sub.mode_count(), sub.dwell_time(), s.mode, s.dwell);
  if (cells.empty()) {
    if (policy == SinkPolicy::forbid)
      throw DomainViolation("abstract successors: image left the domain");
    for (auto [p2, l2] : scen) out.push_back({kSinkCell, p2, l2});
    return out;
  }
  for (auto [p2, l2] : scen) {
    for (std::size_t c : cells) out.push_back({c, p2, l2});
  }
  return out;
}

/* ---------------------------------------------------------------------- */

bool run_equivalence_check(const SwitchedSubsystem& sub, const Vec& x0,
                           const std::vector<int>& switching,
                           const std::vector<Vec>& internal_inputs, int horizon) {
  if (horizon < 0) throw DomainViolation("run equivalence: negative horizon");
  if (static_cast<int>(switching.size()) < horizon + 1 ||
      static_cast<int>(internal_inputs.size()) < horizon)
    throw DimensionMismatch("run equivalence: sequences shorter than the horizon");

  /* admissibility: l starts at 0, so the first switch needs k_d steps too */
  const int kd = sub.dwell_time();
  int l = 0;
  for (int k = 0; k + 1 <= horizon; ++k) {
    if (switching[k + 1] != switching[k]) {
      if (l != kd - 1)
        throw DwellViolation("run equivalence: switch at step " + std::to_string(k + 1) +
                             " violates the dwell time");
      l = 0;
    } else {
      l = std::min(l + 1, kd - 1);
    }
  }

  /* run of the switched system */
  std::vector<Vec> ys;
  Vec x = x0;
  ys.push_back(sub.output(x));
  for (int k = 0; k < horizon; ++k) {
    x = sub.step(switching[k], x, internal_inputs[k]);
    ys.push_back(sub.output(x));
  }

  /* run of the transition system from (x0, p0, 0) */
  ConcreteAug z{x0, switching[0], 0};
  for (int k = 0; k <= horizon; ++k) {
    Vec yz = sub.output(z.x);
    const Vec& yref = ys[static_cast<std::size_t>(k)];
    if (yz.size() != yref.size()) return false;
    for (int i = 0; i < yz.size(); ++i) {
      if (yz[i] != yref[i]) return false; /* bit-for-bit */
    }
    if (k == horizon) break;
    auto succ = concrete_successors(sub, z, switching[k], internal_inputs[k]);
    bool advanced = false;
    for (const auto& nxt : succ) {
      if (nxt.mode == switching[k + 1]) {
        z = nxt;
        advanced = true;
        break;
      }
    }
    if (!advanced) return false; /* admissible sequences always advance */
  }
  return true;
}

/* ------------------------- persistence ---------------------------------- */

void FiniteTransitionSystem::dump(std::ostream& os) const {
  if (!materialized_)
    throw Error("finite ts: only materialized tables can be dumped");
  os.write(kFtsMagic, 8);
  write_pod<std::uint32_t>(os, 1u);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(grid_->dim()));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(mode_count_));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(dwell_time_));
  write_pod<double>(os, grid_->eta());
  write_pod<std::uint8_t>(os, sink_policy_ == SinkPolicy::absorbing ? 0 : 1);
  write_pod<std::uint8_t>(os, 1u);
  write_pod<std::uint16_t>(os, 0u);

  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(grid_->domain().size()));
  for (const auto& b : grid_->domain()) {
    os.write(reinterpret_cast<const char*>(b.lower().data()),
             static_cast<std::streamsize>(sizeof(double) * b.dim()));
    os.write(reinterpret_cast<const char*>(b.upper().data()),
             static_cast<std::streamsize>(sizeof(double) * b.dim()));
  }

  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(inputs_.blocks().size()));
  for (const auto& blk : inputs_.blocks()) {
    write_pod<std::int32_t>(os, blk.source);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(blk.dim));
    write_pod<std::uint64_t>(os, blk.count());
    os.write(reinterpret_cast<const char*>(blk.flat.data()),
             static_cast<std::streamsize>(sizeof(double) * blk.flat.size()));
  }

  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(offsets_.size()));
  os.write(reinterpret_cast<const char*>(offsets_.data()),
           static_cast<std::streamsize>(sizeof(std::uint64_t) * offsets_.size()));
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(targets_.size()));
  os.write(reinterpret_cast<const char*>(targets_.data()),
           static_cast<std::streamsize>(sizeof(std::uint32_t) * targets_.size()));
}

FiniteTransitionSystem FiniteTransitionSystem::load(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kFtsMagic, 8) != 0)
    throw Error("dump: bad magic");
  if (read_pod<std::uint32_t>(is) != 1u) throw Error("dump: unsupported version");

  FiniteTransitionSystem fts;
  const int n = static_cast<int>(read_pod<std::uint32_t>(is));
  fts.mode_count_ = static_cast<int>(read_pod<std::uint32_t>(is));
  fts.dwell_time_ = static_cast<int>(read_pod<std::uint32_t>(is));
  const double eta = read_pod<double>(is);
  fts.sink_policy_ =
      read_pod<std::uint8_t>(is) == 0 ? SinkPolicy::absorbing : SinkPolicy::forbid;
  const bool materialized = read_pod<std::uint8_t>(is) != 0;
  read_pod<std::uint16_t>(is);

  const auto box_count = read_pod<std::uint32_t>(is);
  BoxList domain;
  for (std::uint32_t b = 0; b < box_count; ++b) {
    Vec lo(n), hi(n);
    is.read(reinterpret_cast<char*>(lo.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
    is.read(reinterpret_cast<char*>(hi.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
    if (!is) throw Error("dump: truncated domain");
    domain.emplace_back(lo, hi);
  }
  fts.grid_.emplace(domain, eta);

  const auto block_count = read_pod<std::uint32_t>(is);
  std::vector<InternalInputSet::Block> blocks;
  for (std::uint32_t b = 0; b < block_count; ++b) {
    InternalInputSet::Block blk;
    blk.source = read_pod<std::int32_t>(is);
    blk.dim = static_cast<int>(read_pod<std::uint32_t>(is));
    const auto count = read_pod<std::uint64_t>(is);
    blk.flat.resize(count * static_cast<std::size_t>(blk.dim));
    is.read(reinterpret_cast<char*>(blk.flat.data()),
            static_cast<std::streamsize>(sizeof(double) * blk.flat.size()));
    if (!is) throw Error("dump: truncated block");
    blocks.push_back(std::move(blk));
  }
  fts.inputs_ = blocks.empty() ? InternalInputSet::none()
                               : InternalInputSet::from_blocks(std::move(blocks));

  const auto offsets_size = read_pod<std::uint64_t>(is);
  fts.offsets_.resize(offsets_size);
  is.read(reinterpret_cast<char*>(fts.offsets_.data()),
          static_cast<std::streamsize>(sizeof(std::uint64_t) * offsets_size));
  const auto target_count = read_pod<std::uint64_t>(is);
  fts.targets_.resize(target_count);
  is.read(reinterpret_cast<char*>(fts.targets_.data()),
          static_cast<std::streamsize>(sizeof(std::uint32_t) * target_count));
  if (!is) throw Error("dump: truncated table");
  fts.materialized_ = materialized;
  return fts;
}

void FiniteTransitionSystem::dump_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("dump: cannot open " + path);
  dump(os);
}

FiniteTransitionSystem FiniteTransitionSystem::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("dump: cannot open " + path);
  return load(is);
}

std::string FiniteTransitionSystem::to_dot(std::size_t max_states) const {
  if (aug_count() > max_states)
    throw Error("to_dot: instance too large (" + std::to_string(aug_count()) +
                " states, cap " + std::to_string(max_states) + ")");
  std::ostringstream os;
  os << "digraph fts {\n  rankdir=LR;\n";
  std::vector<std::size_t> cells;
  std::int64_t k[UniformGrid::kMaxDim];
  for (std::size_t a = 0; a < aug_count(); ++a) {
    AugState s = aug_state(a);
    grid_->k_of_index(s.cell, k);
    os << "  n" << a << " [label=\"(";
    for (int i = 0; i < grid_->dim(); ++i) {
      if (i) os << ",";
      os << static_cast<double>(k[i]) * eta();
    }
    os << ")|p" << s.mode << "|l" << s.dwell << "\"];\n";
  }
  os << "  sink [label=\"sink\",shape=box];\n";
  for (std::size_t a = 0; a < aug_count(); ++a) {
    AugState s = aug_state(a);
    for (std::size_t wi = 0; wi < inputs_.size(); ++wi) {
      for (const AugState& t : successors(s, s.mode, wi)) {
        if (t.is_sink())
          os << "  n" << a << " -> sink [label=\"w" << wi << "\"];\n";
        else
          os << "  n" << a << " -> n" << aug_index(t) << " [label=\"w" << wi
             << "\"];\n";
      }
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace symco
