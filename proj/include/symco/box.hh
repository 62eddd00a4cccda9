/*
 * box.hh
 *
 * Axis-aligned boxes in the infinity norm; domains are finite unions of
 * disjoint boxes.
 */

#ifndef SYMCO_BOX_HH_
#define SYMCO_BOX_HH_

#include <Eigen/Dense>
#include <vector>

namespace symco {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Box {
public:
  Box(Vec lower, Vec upper); /* requires lower[i] < upper[i] componentwise */

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  /* smallest edge length */
  double span() const { return (upper_ - lower_).minCoeff(); }

  bool contains(const Vec& x, double tol = 0.0) const;

private:
  Vec lower_, upper_;
};

/* domains as unions of boxes */
using BoxList = std::vector<Box>;

double span(const BoxList& boxes);
bool contains(const BoxList& boxes, const Vec& x, double tol = 0.0);
int dim(const BoxList& boxes);

/* exact interval image of the linear map x -> C x over a box union;
 * bounds may be degenerate (lo == hi), unlike Box */
struct ImageBounds {
  Vec lo, hi;
};
ImageBounds linear_image(const Mat& C, const BoxList& domain);

}  // namespace symco

#endif /* SYMCO_BOX_HH_ */
