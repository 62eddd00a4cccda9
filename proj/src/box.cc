#include "symco/box.hh"

#include <limits>

#include "symco/errors.hh"

namespace symco {

Box::Box(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size())
    throw DimensionMismatch("box: lower/upper dimension mismatch");
  if (lower_.size() == 0) throw DimensionMismatch("box: zero-dimensional box");
  for (int i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i]))
      throw DomainViolation("box: lower bound must be strictly below upper bound");
  }
}

bool Box::contains(const Vec& x, double tol) const {
  if (x.size() != lower_.size())
    throw DimensionMismatch("box: point dimension mismatch");
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
  }
  return true;
}

double span(const BoxList& boxes) {
  if (boxes.empty()) throw DomainViolation("box: empty domain");
  double s = std::numeric_limits<double>::infinity();
  for (const auto& b : boxes) s = std::min(s, b.span());
  return s;
}

bool contains(const BoxList& boxes, const Vec& x, double tol) {
  for (const auto& b : boxes) {
    if (b.contains(x, tol)) return true;
  }
  return false;
}

int dim(const BoxList& boxes) {
  if (boxes.empty()) throw DomainViolation("box: empty domain");
  int d = boxes.front().dim();
  for (const auto& b : boxes) {
    if (b.dim() != d) throw DimensionMismatch("box: mixed dimensions in union");
  }
  return d;
}

ImageBounds linear_image(const Mat& C, const BoxList& domain) {
  const int n = dim(domain);
  if (C.cols() != n) throw DimensionMismatch("linear_image: matrix/domain mismatch");
  const int rows = static_cast<int>(C.rows());
  Vec lo = Vec::Constant(rows, std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(rows, -std::numeric_limits<double>::infinity());
  for (const auto& b : domain) {
    for (int r = 0; r < rows; ++r) {
      double lo_r = 0.0, hi_r = 0.0;
      for (int c = 0; c < n; ++c) {
        const double v = C(r, c);
        if (v >= 0.0) {
          lo_r += v * b.lower()[c];
          hi_r += v * b.upper()[c];
        } else {
          lo_r += v * b.upper()[c];
          hi_r += v * b.lower()[c];
        }
      }
      lo[r] = std::min(lo[r], lo_r);
      hi[r] = std::max(hi[r], hi_r);
    }
  }
  return {lo, hi};
}

}  // namespace symco
