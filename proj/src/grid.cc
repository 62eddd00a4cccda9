#include "symco/grid.hh"

#include <cmath>
#include <cstring>

#include "symco/errors.hh"

namespace symco {

namespace {

/* slack for mapping a real bound onto the integer lattice; relative so the
 * [0,30]/0.03 axis still yields exactly 1001 points */
std::int64_t lattice_ceil(double x, double eta) {
  double t = x / eta;
  return static_cast<std::int64_t>(std::ceil(t - 1e-9 * std::max(1.0, std::abs(t))));
}
std::int64_t lattice_floor(double x, double eta) {
  double t = x / eta;
  return static_cast<std::int64_t>(std::floor(t + 1e-9 * std::max(1.0, std::abs(t))));
}

}  // namespace

UniformGrid::UniformGrid(BoxList domain, double eta)
    : domain_(std::move(domain)), eta_(eta) {
  dim_ = symco::dim(domain_);
  if (dim_ > kMaxDim) throw DimensionMismatch("grid: dimension exceeds kMaxDim");
  if (!(eta_ > 0.0)) throw EtaTooLarge("grid: eta must be positive");
  if (eta_ > span(domain_))
    throw EtaTooLarge("grid: eta exceeds span of the domain");

  size_ = 0;
  for (const auto& b : domain_) {
    BoxGrid bg;
    bg.k_lo.resize(dim_);
    bg.k_hi.resize(dim_);
    bg.stride.resize(dim_);
    bg.offset = size_;
    bg.count = 1;
    for (int i = 0; i < dim_; ++i) {
      bg.k_lo[i] = lattice_ceil(b.lower()[i], eta_);
      bg.k_hi[i] = lattice_floor(b.upper()[i], eta_);
      if (bg.k_lo[i] > bg.k_hi[i])
        throw EtaTooLarge("grid: a box contains no multiple of eta on axis " +
                          std::to_string(i));
    }
    for (int i = dim_ - 1; i >= 0; --i) {
      bg.stride[i] = bg.count;
      bg.count *= static_cast<std::size_t>(bg.k_hi[i] - bg.k_lo[i] + 1);
    }
    size_ += bg.count;
    boxes_.push_back(std::move(bg));
  }
}

Vec UniformGrid::point(std::size_t idx) const {
  Vec x(dim_);
  point(idx, x.data());
  return x;
}

void UniformGrid::point(std::size_t idx, double* out) const {
  std::int64_t k[kMaxDim];
  k_of_index(idx, k);
  for (int i = 0; i < dim_; ++i) out[i] = static_cast<double>(k[i]) * eta_;
}

void UniformGrid::k_of_index(std::size_t idx, std::int64_t* k) const {
  for (const auto& bg : boxes_) {
    if (idx < bg.offset || idx >= bg.offset + bg.count) continue;
    std::size_t rem = idx - bg.offset;
    for (int i = 0; i < dim_; ++i) {
      std::size_t q = rem / bg.stride[i];
      rem %= bg.stride[i];
      k[i] = bg.k_lo[i] + static_cast<std::int64_t>(q);
    }
    return;
  }
  throw DomainViolation("grid: index out of range");
}

std::optional<std::size_t> UniformGrid::index_of_k(const std::int64_t* k) const {
  for (const auto& bg : boxes_) {
    bool inside = true;
    std::size_t idx = bg.offset;
    for (int i = 0; i < dim_; ++i) {
      if (k[i] < bg.k_lo[i] || k[i] > bg.k_hi[i]) {
        inside = false;
        break;
      }
      idx += static_cast<std::size_t>(k[i] - bg.k_lo[i]) * bg.stride[i];
    }
    if (inside) return idx;
  }
  return std::nullopt;
}

std::optional<std::size_t> UniformGrid::nearest(const Vec& x) const {
  if (x.size() != dim_) throw DimensionMismatch("grid: point dimension mismatch");
  /* round inside each box, keep the best candidate over the union */
  std::optional<std::size_t> best;
  double best_dist = 0.0;
  for (const auto& bg : boxes_) {
    std::size_t idx = bg.offset;
    double dist = 0.0;
    for (int i = 0; i < dim_; ++i) {
      std::int64_t ki = static_cast<std::int64_t>(std::llround(x[i] / eta_));
      ki = std::max(bg.k_lo[i], std::min(bg.k_hi[i], ki));
      idx += static_cast<std::size_t>(ki - bg.k_lo[i]) * bg.stride[i];
      dist = std::max(dist, std::abs(x[i] - static_cast<double>(ki) * eta_));
    }
    if (!best || dist < best_dist) {
      best = idx;
      best_dist = dist;
    }
  }
  return best;
}

template <typename F>
void UniformGrid::scan_ball(const double* y, double r, F&& fn) const {
  /* closed inequality with a relative guard against spurious exclusion */
  const double r_tol = r * (1.0 + 1e-12) + 1e-300;
  std::int64_t lo[kMaxDim], hi[kMaxDim], k[kMaxDim];
  for (const auto& bg : boxes_) {
    bool empty = false;
    for (int i = 0; i < dim_; ++i) {
      lo[i] = std::max(bg.k_lo[i], lattice_ceil(y[i] - r_tol, eta_));
      hi[i] = std::min(bg.k_hi[i], lattice_floor(y[i] + r_tol, eta_));
      /* the lattice slack can admit a point just beyond r; filter exactly */
      while (lo[i] <= hi[i] &&
             std::abs(static_cast<double>(lo[i]) * eta_ - y[i]) > r_tol)
        ++lo[i];
      while (lo[i] <= hi[i] &&
             std::abs(static_cast<double>(hi[i]) * eta_ - y[i]) > r_tol)
        --hi[i];
      if (lo[i] > hi[i]) {
        empty = true;
        break;
      }
      k[i] = lo[i];
    }
    if (empty) continue;
    /* iterate the axis-aligned block */
    while (true) {
      std::size_t idx = bg.offset;
      for (int i = 0; i < dim_; ++i)
        idx += static_cast<std::size_t>(k[i] - bg.k_lo[i]) * bg.stride[i];
      fn(idx);
      int axis = dim_ - 1;
      while (axis >= 0) {
        if (++k[axis] <= hi[axis]) break;
        k[axis] = lo[axis];
        --axis;
      }
      if (axis < 0) break;
    }
  }
}

void UniformGrid::for_each_in_ball(const double* y, double r,
                                   const std::function<void(std::size_t)>& fn) const {
  scan_ball(y, r, fn);
}

std::size_t UniformGrid::count_in_ball(const double* y, double r) const {
  /* per-box product of per-axis counts; no per-point iteration */
  const double r_tol = r * (1.0 + 1e-12) + 1e-300;
  std::size_t total = 0;
  for (const auto& bg : boxes_) {
    std::size_t c = 1;
    for (int i = 0; i < dim_; ++i) {
      std::int64_t lo = std::max(bg.k_lo[i], lattice_ceil(y[i] - r_tol, eta_));
      std::int64_t hi = std::min(bg.k_hi[i], lattice_floor(y[i] + r_tol, eta_));
      while (lo <= hi && std::abs(static_cast<double>(lo) * eta_ - y[i]) > r_tol) ++lo;
      while (lo <= hi && std::abs(static_cast<double>(hi) * eta_ - y[i]) > r_tol) --hi;
      if (lo > hi) {
        c = 0;
        break;
      }
      c *= static_cast<std::size_t>(hi - lo + 1);
    }
    total += c;
  }
  return total;
}

void UniformGrid::ball(const double* y, double r, std::vector<std::size_t>& out) const {
  out.clear();
  scan_ball(y, r, [&out](std::size_t idx) { out.push_back(idx); });
}

}  // namespace symco
