#pragma once

#include <stdexcept>
#include <string>

namespace nlssh {

/// Bond or site index outside [-N, N].
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Vector or matrix dimensions do not agree.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A scalar parameter is outside its admissible range.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Run settings are inconsistent (e.g. the integrator stability guard).
struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input violates an operation's precondition (e.g. non-symmetric Hamiltonian).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Winding number requested at the gap-closing point u == v.
struct GaplessError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Too little data for a statistic to be meaningful.
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace nlssh
