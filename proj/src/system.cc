#include "symco/system.hh"

#include <algorithm>
#include <sstream>

#include "symco/errors.hh"

namespace symco {

SwitchedSubsystem::SwitchedSubsystem(int id, std::vector<ModeDynamics> modes,
                                     BoxList state_domain, BoxList internal_domain,
                                     std::vector<InternalBlock> internal_blocks,
                                     std::vector<OutputBlock> output_blocks,
                                     int dwell_time, KinfFn output_lipschitz)
    : id_(id),
      modes_(std::move(modes)),
      state_domain_(std::move(state_domain)),
      internal_domain_(std::move(internal_domain)),
      internal_blocks_(std::move(internal_blocks)),
      output_blocks_(std::move(output_blocks)),
      dwell_time_(dwell_time),
      lipschitz_(std::move(output_lipschitz)) {
  if (modes_.empty()) throw DimensionMismatch("subsystem: needs at least one mode");
  if (dwell_time_ < 1) throw DomainViolation("subsystem: dwell time must be >= 1");

  n_ = dim(state_domain_);
  q_ = internal_domain_.empty() ? 0 : dim(internal_domain_);

  for (const auto& m : modes_) {
    if (m.A.rows() != n_ || m.A.cols() != n_)
      throw DimensionMismatch("subsystem: A must be n x n");
    if (m.b.size() != n_) throw DimensionMismatch("subsystem: b must have length n");
    if (m.D.rows() != n_ || m.D.cols() != q_)
      throw DimensionMismatch("subsystem: D must be n x q");
  }

  int block_sum = 0;
  for (const auto& blk : internal_blocks_) {
    if (blk.dim <= 0) throw DimensionMismatch("subsystem: internal block dim must be positive");
    block_sum += blk.dim;
  }
  if (block_sum != q_)
    throw DimensionMismatch("subsystem: internal partition dims must sum to q");

  output_dim_ = 0;
  for (const auto& blk : output_blocks_) {
    if (blk.C.cols() != n_) throw DimensionMismatch("subsystem: output block C must have n columns");
    output_dim_ += static_cast<int>(blk.C.rows());
  }
}

const ModeDynamics& SwitchedSubsystem::dynamics(int p) const {
  if (p < 1 || p > mode_count())
    throw DomainViolation("subsystem: mode index out of range");
  return modes_[static_cast<std::size_t>(p - 1)];
}

int SwitchedSubsystem::internal_block_offset(int source) const {
  int off = 0;
  for (const auto& blk : internal_blocks_) {
    if (blk.source == source) return off;
    off += blk.dim;
  }
  throw DimensionMismatch("subsystem: no internal block fed by subsystem " +
                          std::to_string(source));
}

const Mat* SwitchedSubsystem::output_matrix(int target) const {
  for (const auto& blk : output_blocks_) {
    if (blk.target == target) return &blk.C;
  }
  return nullptr; /* absent blocks are identically zero */
}

Vec SwitchedSubsystem::output(const Vec& x) const {
  Vec y(output_dim_);
  int row = 0;
  for (const auto& blk : output_blocks_) {
    y.segment(row, blk.C.rows()) = blk.C * x;
    row += static_cast<int>(blk.C.rows());
  }
  return y;
}

Vec SwitchedSubsystem::external_output(const Vec& x) const {
  const Mat* C = output_matrix(id_);
  if (C == nullptr) return x; /* default external output is the full state */
  return (*C) * x;
}

int SwitchedSubsystem::external_output_dim() const {
  const Mat* C = output_matrix(id_);
  return C == nullptr ? n_ : static_cast<int>(C->rows());
}

Vec SwitchedSubsystem::step(int p, const Vec& x, const Vec& w) const {
  const ModeDynamics& dyn = dynamics(p);
  if (x.size() != n_) throw DimensionMismatch("step: state dimension mismatch");
  if (w.size() != q_) throw DimensionMismatch("step: internal input dimension mismatch");
  if (!contains(state_domain_, x, 1e-12))
    throw DomainViolation("step: state outside the declared domain");
  if (q_ > 0 && !contains(internal_domain_, w, 1e-12))
    throw DomainViolation("step: internal input outside the declared domain");
  Vec next = dyn.A * x + dyn.b;
  if (q_ > 0) next += dyn.D * w;
  return next;
}

void SwitchedSubsystem::step_unchecked(int p, const double* x, const double* w,
                                       double* out) const {
  const ModeDynamics& dyn = modes_[static_cast<std::size_t>(p - 1)];
  for (int i = 0; i < n_; ++i) {
    double acc = dyn.b[i];
    for (int j = 0; j < n_; ++j) acc += dyn.A(i, j) * x[j];
    for (int k = 0; k < q_; ++k) acc += dyn.D(i, k) * w[k];
    out[i] = acc;
  }
}

const SwitchedSubsystem& NetworkSpec::by_id(int id) const {
  return subsystems[static_cast<std::size_t>(index_of(id))];
}

int NetworkSpec::index_of(int id) const {
  for (std::size_t i = 0; i < subsystems.size(); ++i) {
    if (subsystems[i].id() == id) return static_cast<int>(i);
  }
  throw DimensionMismatch("network: unknown subsystem id " + std::to_string(id));
}

NetworkValidation validate_network(const NetworkSpec& net) {
  NetworkValidation result;
  for (const Edge& e : net.edges) {
    const SwitchedSubsystem& src = net.by_id(e.from);
    const SwitchedSubsystem& dst = net.by_id(e.to);

    const Mat* C = src.output_matrix(e.to);
    if (C == nullptr)
      throw DimensionMismatch("network: edge (" + std::to_string(e.from) + " -> " +
                              std::to_string(e.to) + ") has no output block");
    const int off = dst.internal_block_offset(e.from);
    int blk_dim = 0;
    for (const auto& blk : dst.internal_blocks()) {
      if (blk.source == e.from) blk_dim = blk.dim;
    }
    if (blk_dim != C->rows())
      throw DimensionMismatch("network: output block rows disagree with internal block dim on edge (" +
                              std::to_string(e.from) + " -> " + std::to_string(e.to) + ")");

    ImageBounds img = linear_image(*C, src.state_domain());

    EdgeCheck check;
    check.edge = e;
    check.image_lo = img.lo;
    check.image_hi = img.hi;
    check.block_lo = Vec(blk_dim);
    check.block_hi = Vec(blk_dim);
    /* the w_ij block bounds, taken as the hull over the box union */
    for (int r = 0; r < blk_dim; ++r) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (const auto& b : dst.internal_domain()) {
        lo = std::min(lo, b.lower()[off + r]);
        hi = std::max(hi, b.upper()[off + r]);
      }
      check.block_lo[r] = lo;
      check.block_hi[r] = hi;
    }
    check.contained = true;
    for (int r = 0; r < blk_dim; ++r) {
      if (img.lo[r] < check.block_lo[r] - 1e-12 || img.hi[r] > check.block_hi[r] + 1e-12)
        check.contained = false;
    }
    result.pass = result.pass && check.contained;
    result.edge_checks.push_back(std::move(check));
  }
  return result;
}

}  // namespace symco
