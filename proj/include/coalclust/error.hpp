#ifndef COALCLUST_ERROR_HPP
#define COALCLUST_ERROR_HPP

#include <stdexcept>
#include <string>

namespace coalclust {

// Error taxonomy shared by the library and the CLI. The kind string is part
// of the CLI's machine-parsable error line, so keep the tokens stable.
enum class ErrorKind {
  structural,             // malformed genealogy
  argument,               // bad argument value
  data,                   // bad datum (e.g. categorical value out of range)
  time_order,             // merge time later than a child formation time
  degenerate_likelihood,  // Z^d <= 0 at delta = 0 with contradictory data
  solver,                 // iterative solver failed to converge
  numeric,                // non-finite intermediate quantity
  configuration,          // invalid configuration (e.g. gamma prior a <= 1)
  unsupported_model,      // operation undefined for the given kernel
  ingestion,              // CSV/file parsing problems
  undefined_metric,       // metric has no value on this input
  degeneracy,             // all SMC particle weights -inf
  column_unrestorable     // no row observes the column
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace coalclust

#endif
