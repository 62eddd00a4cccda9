#include "symco/kinf.hh"

#include <cmath>
#include <sstream>
#include <utility>

#include "symco/errors.hh"

namespace symco {

struct KinfFn::Node {
  enum class Kind { linear, power, compose, max };
  Kind kind;
  double coeff = 0.0;     /* linear slope or power coefficient */
  double exponent = 1.0;  /* power exponent */
  std::shared_ptr<const Node> outer, inner;
  std::vector<std::shared_ptr<const Node>> parts;
};

namespace {

using Node = KinfFn::Node;

double eval_node(const Node& n, double s) {
  switch (n.kind) {
    case Node::Kind::linear:
      return n.coeff * s;
    case Node::Kind::power:
      return s == 0.0 ? 0.0 : n.coeff * std::pow(s, n.exponent);
    case Node::Kind::compose:
      return eval_node(*n.outer, eval_node(*n.inner, s));
    case Node::Kind::max: {
      double m = 0.0;
      for (const auto& p : n.parts) m = std::max(m, eval_node(*p, s));
      return m;
    }
  }
  return 0.0;
}

void collect_monomials(const Node& n, double outer_coeff, double outer_exp,
                       std::vector<KinfFn::Monomial>& out) {
  /* accumulates the wrapping monomial t -> outer_coeff * t^outer_exp */
  switch (n.kind) {
    case Node::Kind::linear:
      out.push_back({outer_coeff * std::pow(n.coeff, outer_exp), outer_exp});
      return;
    case Node::Kind::power:
      out.push_back(
          {outer_coeff * std::pow(n.coeff, outer_exp), n.exponent * outer_exp});
      return;
    case Node::Kind::max:
      /* a monomial of max(g_1,...,g_k) is the max of wrapped parts, since the
       * wrapping map is increasing */
      for (const auto& p : n.parts) collect_monomials(*p, outer_coeff, outer_exp, out);
      return;
    case Node::Kind::compose: {
      std::vector<KinfFn::Monomial> outer_terms;
      collect_monomials(*n.outer, outer_coeff, outer_exp, outer_terms);
      for (const auto& t : outer_terms) {
        collect_monomials(*n.inner, t.coeff, t.exponent, out);
      }
      return;
    }
  }
}

std::shared_ptr<const Node> invert_node(const std::shared_ptr<const Node>& n) {
  switch (n->kind) {
    case Node::Kind::linear: {
      auto r = std::make_shared<Node>();
      r->kind = Node::Kind::linear;
      r->coeff = 1.0 / n->coeff;
      return r;
    }
    case Node::Kind::power: {
      /* y = c s^e  =>  s = c^(-1/e) y^(1/e) */
      auto r = std::make_shared<Node>();
      r->kind = Node::Kind::power;
      r->exponent = 1.0 / n->exponent;
      r->coeff = std::pow(n->coeff, -1.0 / n->exponent);
      return r;
    }
    case Node::Kind::compose: {
      auto r = std::make_shared<Node>();
      r->kind = Node::Kind::compose;
      r->outer = invert_node(n->inner);
      r->inner = invert_node(n->outer);
      return r;
    }
    case Node::Kind::max:
      throw NotInvertibleRepresentation(
          "kinf: Max nodes have no symbolic inverse");
  }
  throw NotInvertibleRepresentation("kinf: unknown node");
}

void print_node(const Node& n, std::ostream& os) {
  switch (n.kind) {
    case Node::Kind::linear:
      os << n.coeff << "*s";
      return;
    case Node::Kind::power:
      os << n.coeff << "*s^" << n.exponent;
      return;
    case Node::Kind::compose:
      os << "(";
      print_node(*n.outer, os);
      os << ") o (";
      print_node(*n.inner, os);
      os << ")";
      return;
    case Node::Kind::max: {
      os << "max{";
      bool first = true;
      for (const auto& p : n.parts) {
        if (!first) os << ", ";
        print_node(*p, os);
        first = false;
      }
      os << "}";
      return;
    }
  }
}

}  // namespace

KinfFn KinfFn::linear(double slope) {
  if (!(slope > 0.0))
    throw DomainViolation("kinf: linear slope must be positive");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::linear;
  n->coeff = slope;
  return KinfFn(n);
}

KinfFn KinfFn::power(double coeff, double exponent) {
  if (!(coeff > 0.0) || !(exponent > 0.0))
    throw DomainViolation("kinf: power coefficient and exponent must be positive");
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::power;
  n->coeff = coeff;
  n->exponent = exponent;
  return KinfFn(n);
}

KinfFn KinfFn::compose(const KinfFn& outer, const KinfFn& inner) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::compose;
  n->outer = outer.node_;
  n->inner = inner.node_;
  return KinfFn(n);
}

KinfFn KinfFn::max_of(std::vector<KinfFn> parts) {
  if (parts.empty())
    throw DomainViolation("kinf: max_of needs at least one part");
  if (parts.size() == 1) return parts.front();
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::max;
  for (auto& p : parts) n->parts.push_back(p.node_);
  return KinfFn(n);
}

double KinfFn::operator()(double s) const {
  if (s < 0.0) throw DomainViolation("kinf: argument must be nonnegative");
  if (s == 0.0) return 0.0; /* every class-Kinf function fixes zero */
  return eval_node(*node_, s);
}

KinfFn KinfFn::inverse() const { return KinfFn(invert_node(node_)); }

std::vector<KinfFn::Monomial> KinfFn::monomials() const {
  std::vector<Monomial> out;
  collect_monomials(*node_, 1.0, 1.0, out);
  return out;
}

namespace {
/* exponents assembled by composition may carry rounding noise */
bool unit_exponent(double e) { return std::abs(e - 1.0) <= 1e-12; }
}  // namespace

bool KinfFn::is_linear() const {
  auto ms = monomials();
  if (ms.size() != 1) return false;
  return unit_exponent(ms.front().exponent);
}

double KinfFn::linear_slope() const {
  auto ms = monomials();
  if (ms.size() != 1 || !unit_exponent(ms.front().exponent))
    throw NotInvertibleRepresentation("kinf: not reducible to a single linear slope");
  return ms.front().coeff;
}

LtIdentityResult KinfFn::lt_identity(const SampleSpec& samples) const {
  /* analytic part: max of monomials is < Id everywhere iff every monomial
   * c*s^e is, which needs e == 1 and c < 1 (for e != 1 the graph crosses
   * the identity at s* = c^(1/(1-e))) */
  for (const auto& m : monomials()) {
    if (unit_exponent(m.exponent)) {
      if (m.coeff >= 1.0) return {false, 1.0};
      continue;
    }
    double crossing = std::pow(m.coeff, 1.0 / (1.0 - m.exponent));
    double witness = m.exponent > 1.0 ? std::max(2.0 * crossing, 1.0)
                                      : std::min(0.5 * crossing, crossing);
    return {false, witness};
  }
  /* sampled cross-check on the log grid */
  for (int i = 0; i < samples.count; ++i) {
    double t = samples.count == 1 ? 0.0 : double(i) / double(samples.count - 1);
    double s = samples.lo * std::pow(samples.hi / samples.lo, t);
    if ((*this)(s) >= s) return {false, s};
  }
  return {true, std::nullopt};
}

std::string KinfFn::str() const {
  std::ostringstream os;
  print_node(*node_, os);
  return os.str();
}

}  // namespace symco
