#ifndef CRTGEE_ERRORS_HPP
#define CRTGEE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace crtgee {

// Base class for all recoverable estimation/IO failures raised by this
// library.  The simulation harness treats any Error thrown while fitting a
// replication as a non-convergence event; everything else propagates.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data (CSV structure, schema, or value domain).
struct CsvError : Error {
  using Error::Error;
};

// Precondition violations on in-memory objects (shapes, domains, options).
struct ValidationError : Error {
  using Error::Error;
};

// Bad study configuration file or unknown scenario key.
struct ConfigError : Error {
  using Error::Error;
};

// Fisher information not positive definite at the current iterate.
struct SingularInformation : Error {
  using Error::Error;
};

// (I - H_i) numerically singular while forming a bias-corrected meat term.
struct SingularLeverage : Error {
  using Error::Error;
};

// Principal matrix square root does not exist or left a complex residue.
struct SquareRootFailure : Error {
  using Error::Error;
};

// A treatment arm with pooled incidence 0 or 1 (crude closed form undefined).
struct DegenerateArm : Error {
  using Error::Error;
};

// Standardized predictions collapsed onto the boundary (log OR undefined).
struct DegeneratePrediction : Error {
  using Error::Error;
};

}  // namespace crtgee

#endif
