#pragma once

#include <stdexcept>
#include <string>

namespace emodiff {

// Base class for every error raised by this library. Catching Error is
// enough to separate our failures from genuine std:: failures.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input: bad file syntax, out-of-range parameter, missing column.
struct InvalidInput : Error {
  using Error::Error;
};

// Cosine similarity against a zero-norm vector is undefined.
struct DegenerateVector : Error {
  using Error::Error;
};

// A word required for a lookup is not present in the store or lexicon.
struct MissingWord : Error {
  using Error::Error;
};

// A share event references a sender that is neither the publisher nor an
// already-placed sharer.
struct OrphanEvent : Error {
  using Error::Error;
};

// A share event is timestamped before the share it descends from.
struct ClockSkew : Error {
  using Error::Error;
};

// A cascade cannot be built from zero events.
struct EmptyCascade : Error {
  using Error::Error;
};

// A column is constant where variation is required (standardization,
// correlation).
struct DegenerateColumn : Error {
  using Error::Error;
};

// The design matrix is rank deficient; the message names the columns.
struct Collinear : Error {
  using Error::Error;
};

// An iterative fit exhausted its iteration budget.
struct NoConvergence : Error {
  using Error::Error;
};

// Grouped estimation needs more groups than were supplied.
struct TooFewGroups : Error {
  using Error::Error;
};

// Both samples of a two-sample test have zero variance.
struct DegenerateVariance : Error {
  using Error::Error;
};

}  // namespace emodiff
