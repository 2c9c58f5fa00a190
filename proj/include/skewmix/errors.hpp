#pragma once

#include <stdexcept>

//---------------------------------------------------------------------------
// errors: exception taxonomy shared by every module
//
// ConfigError     bad user input (files, parameters, admissibility checks)
// BudgetExceeded  a combinatorial enumeration outgrew its node budget
// NumericError    base for runtime numerical failures; the CLI maps the
//                 three classes to exit codes 2 / 3 / 4
//---------------------------------------------------------------------------

namespace skewmix {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// damped Newton for an inverse branch failed to meet tolerance
struct NewtonDivergence : NumericError {
  using NumericError::NumericError;
};

// density power iteration did not settle
struct NonConvergence : NumericError {
  using NumericError::NumericError;
};

// spectral radius did not stabilize under lattice refinement
struct NotConverged : NumericError {
  using NumericError::NumericError;
};

// a vector field fed to reconstruct_u is not an exact gradient
struct NotExact : NumericError {
  using NumericError::NumericError;
};

// semiconjugacy construction needs an integral certificate
struct NotIntegral : NumericError {
  using NumericError::NumericError;
};

// decay-rate fit has too few usable points above the noise floor
struct WindowTooNoisy : NumericError {
  using NumericError::NumericError;
};

} // namespace skewmix
