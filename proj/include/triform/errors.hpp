#pragma once

#include <stdexcept>
#include <string>

namespace triform {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : Error {
  using Error::Error;
};

// mesh / IO
struct UnsupportedFormat : Error {
  using Error::Error;
};
struct UnsupportedElement : Error {
  using Error::Error;
};
struct MalformedMesh : Error {
  using Error::Error;
};
struct DegenerateCell : Error {
  using Error::Error;
};

// assembly / solve
struct PatternViolation : Error {
  using Error::Error;
};
struct ConflictingBC : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct NonConvergence : Error {
  using Error::Error;
};
struct LinearSolveFailure : Error {
  using Error::Error;
};

// post-processing
struct OutOfDomain : Error {
  using Error::Error;
};
struct UnknownRegion : Error {
  using Error::Error;
};

}  // namespace triform
