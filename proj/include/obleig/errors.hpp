#pragma once

#include <stdexcept>
#include <string>

namespace obleig {

/// Base class for every failure the library reports deliberately. The kind
/// string is stable and machine-checkable; what() carries the diagnostic.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define OBLEIG_DEFINE_ERROR(NAME)                                \
  class NAME : public Error {                                    \
   public:                                                       \
    explicit NAME(const std::string& msg) : Error(#NAME, msg) {} \
  }

OBLEIG_DEFINE_ERROR(ConfigError);
OBLEIG_DEFINE_ERROR(SchemaMismatch);
OBLEIG_DEFINE_ERROR(DimensionMismatch);
OBLEIG_DEFINE_ERROR(SeedOutsideDomain);
OBLEIG_DEFINE_ERROR(EmptyTruncation);
OBLEIG_DEFINE_ERROR(InvalidMass);
OBLEIG_DEFINE_ERROR(EllipticityViolation);
OBLEIG_DEFINE_ERROR(ObliquenessViolation);
OBLEIG_DEFINE_ERROR(KTooSmall);
OBLEIG_DEFINE_ERROR(NoConvergence);
OBLEIG_DEFINE_ERROR(PositivityLoss);
OBLEIG_DEFINE_ERROR(ZeroVector);
OBLEIG_DEFINE_ERROR(ResolventSingular);
OBLEIG_DEFINE_ERROR(MismatchedScenario);
OBLEIG_DEFINE_ERROR(UndifferentiableField);
OBLEIG_DEFINE_ERROR(SampleTooCoarse);
OBLEIG_DEFINE_ERROR(BlowUp);
OBLEIG_DEFINE_ERROR(NoFront);

#undef OBLEIG_DEFINE_ERROR

}  // namespace obleig
