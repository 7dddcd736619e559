#pragma once
// Error taxonomy. Everything thrown by the library derives from Error; the
// names mirror the failure they report so callers can map them to exit codes.

#include <stdexcept>
#include <string>

namespace hybridcontract {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid argument / configuration problems (caller bugs, bad config files).
struct InvalidArgument : Error {
  using Error::Error;
};

struct DimensionMismatch : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

// Runtime failures of the numerical machinery.

// Event accumulation suggests a Zeno execution: more than max_events resets,
// or repeated dwell times below min_dwell_warn.
struct ZenoSuspected : Error {
  using Error::Error;
};

// Dg·F >= -eps at a located guard crossing (grazing or wrong-side contact).
struct TransversalityViolation : Error {
  using Error::Error;
};

// Perturbed trajectories of the finite-difference Jacobian crossed a
// different arc sequence than the reference, even after shrinking the step.
struct EventSequenceMismatch : Error {
  using Error::Error;
};

// A flow Jacobian was requested at a horizon coinciding with a reset event,
// where the derivative does not exist.
struct EventAtHorizon : Error {
  using Error::Error;
};

struct NonFiniteState : Error {
  using Error::Error;
};

// No R-connected mode sequence within max_hops joins the two states.
struct NoPathFound : Error {
  using Error::Error;
};

// check_translation_reset called on an arc whose reset Jacobian is not the
// identity on the sampled guard points, or whose mode norms differ.
struct NotATranslation : Error {
  using Error::Error;
};

// Adaptive step size shrank below representable resolution.
struct IntegrationFailure : Error {
  using Error::Error;
};

// The execution reached a state the standing assumptions exclude, e.g. a
// reset image strictly inside a guard region.
struct AssumptionViolation : Error {
  using Error::Error;
};

}  // namespace hybridcontract
