#include "symco/sampling.hh"

#include "symco/errors.hh"

namespace symco {

Vec sample_box(const BoxList& boxes, Rng& rng) {
  if (boxes.empty()) throw DomainViolation("sample: empty domain");
  std::size_t pick = 0;
  if (boxes.size() > 1) {
    std::vector<double> volumes;
    volumes.reserve(boxes.size());
    for (const auto& b : boxes) {
      double v = 1.0;
      for (int i = 0; i < b.dim(); ++i) v *= b.upper()[i] - b.lower()[i];
      volumes.push_back(v);
    }
    std::discrete_distribution<std::size_t> dist(volumes.begin(), volumes.end());
    pick = dist(rng);
  }
  const Box& b = boxes[pick];
  Vec x(b.dim());
  for (int i = 0; i < b.dim(); ++i) {
    std::uniform_real_distribution<double> u(b.lower()[i], b.upper()[i]);
    x[i] = u(rng);
  }
  return x;
}

}  // namespace symco
