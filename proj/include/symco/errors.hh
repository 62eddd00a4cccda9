/*
 * errors.hh
 *
 * Exception taxonomy shared by all symco components.
 */

#ifndef SYMCO_ERRORS_HH_
#define SYMCO_ERRORS_HH_

#include <stdexcept>
#include <string>

namespace symco {

/* base class so callers can catch toolkit errors wholesale */
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/* a config/model object violates its structural contract */
class DimensionMismatch : public Error {
public:
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

/* a point was passed outside the declared domain; never silently clamped */
class DomainViolation : public Error {
public:
  explicit DomainViolation(const std::string& msg) : Error(msg) {}
};

/* comparison-function node has no symbolic inverse (Max nodes) */
class NotInvertibleRepresentation : public Error {
public:
  explicit NotInvertibleRepresentation(const std::string& msg) : Error(msg) {}
};

/* quantization parameter exceeds the span of the domain */
class EtaTooLarge : public Error {
public:
  explicit EtaTooLarge(const std::string& msg) : Error(msg) {}
};

/* a switching sequence switches before the dwell time elapsed */
class DwellViolation : public Error {
public:
  explicit DwellViolation(const std::string& msg) : Error(msg) {}
};

/* induced norm of some mode is >= 1, no contraction certificate exists */
class NotContractive : public Error {
public:
  NotContractive(int mode, double kappa, const std::string& msg)
      : Error(msg), mode(mode), kappa(kappa) {}
  int mode;
  double kappa;
};

/* dwell-time exponent must satisfy epsilon > 1 */
class BadEpsilon : public Error {
public:
  explicit BadEpsilon(const std::string& msg) : Error(msg) {}
};

/* configured dwell time is below the certified minimum */
class DwellTooSmall : public Error {
public:
  explicit DwellTooSmall(const std::string& msg) : Error(msg) {}
};

/* splitter weights cannot make the contraction factor sigma < 1 */
class BadSplitters : public Error {
public:
  explicit BadSplitters(const std::string& msg) : Error(msg) {}
};

/* delta construction is restricted to all-linear gain matrices */
class NonLinearGains : public Error {
public:
  explicit NonLinearGains(const std::string& msg) : Error(msg) {}
};

/* simple-cycle enumeration exceeded its budget and no fallback applies */
class CycleExplosion : public Error {
public:
  explicit CycleExplosion(const std::string& msg) : Error(msg) {}
};

/* internal-input point lists do not match the neighbor output image */
class CouplingMismatch : public Error {
public:
  explicit CouplingMismatch(const std::string& msg) : Error(msg) {}
};

/* configuration document is malformed */
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace symco

#endif /* SYMCO_ERRORS_HH_ */
