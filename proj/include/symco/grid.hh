/*
 * grid.hh
 *
 * Uniform quantization of box unions: the grid points are the integer
 * multiples of eta inside the domain.  Coordinates are always rebuilt
 * from the integer multi-index (k * eta) so indexing stays exact.
 */

#ifndef SYMCO_GRID_HH_
#define SYMCO_GRID_HH_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "symco/box.hh"

namespace symco {

class UniformGrid {
public:
  UniformGrid(BoxList domain, double eta); /* throws EtaTooLarge */

  int dim() const { return dim_; }
  double eta() const { return eta_; }
  const BoxList& domain() const { return domain_; }

  std::size_t size() const { return size_; }

  /* coordinates of the idx-th grid point (k * eta per axis) */
  Vec point(std::size_t idx) const;
  void point(std::size_t idx, double* out) const;

  /* integer multi-index <-> dense index */
  void k_of_index(std::size_t idx, std::int64_t* k) const;
  std::optional<std::size_t> index_of_k(const std::int64_t* k) const;

  /* nearest grid point to x (round each axis, clamp into the k-range);
   * std::nullopt when the domain has no box for the rounded point */
  std::optional<std::size_t> nearest(const Vec& x) const;

  /* visits every grid point within closed infinity-distance r of y; the
   * comparison uses r*(1+1e-12) so points exactly r away are kept */
  void for_each_in_ball(const double* y, double r,
                        const std::function<void(std::size_t)>& fn) const;

  /* same ball, but only counts (no per-point callback overhead) */
  std::size_t count_in_ball(const double* y, double r) const;

  /* appends the ball's indices to out (cleared first) */
  void ball(const double* y, double r, std::vector<std::size_t>& out) const;

  static constexpr int kMaxDim = 16;

private:
  struct BoxGrid {
    std::vector<std::int64_t> k_lo, k_hi; /* inclusive per-axis ranges */
    std::vector<std::size_t> stride;      /* row-major strides */
    std::size_t offset;                   /* dense-index offset */
    std::size_t count;
  };

  template <typename F>
  void scan_ball(const double* y, double r, F&& fn) const;

  BoxList domain_;
  double eta_;
  int dim_;
  std::size_t size_;
  std::vector<BoxGrid> boxes_;
};

}  // namespace symco

#endif /* SYMCO_GRID_HH_ */
