#pragma once
// Error types shared across the library. All failures are loud.

#include <stdexcept>
#include <string>

namespace ifmimo {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionTooLarge : Error {
  using Error::Error;
};
struct RankDeficient : Error {
  using Error::Error;
};
struct SingularA : Error {
  using Error::Error;
};
struct SingularH : Error {
  using Error::Error;
};
struct UnknownScenario : Error {
  using Error::Error;
};
struct RadiusTooLarge : Error {
  using Error::Error;
};
struct BoxTooLarge : Error {
  using Error::Error;
};
struct DegenerateFit : Error {
  using Error::Error;
};
struct InsufficientTrials : Error {
  using Error::Error;
};
struct UsageError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace ifmimo
