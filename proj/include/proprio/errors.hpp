#pragma once

#include <stdexcept>
#include <string>

namespace proprio {

// Thin exception taxonomy shared across the library. Each failure mode gets
// its own type so callers and tests can catch precisely what they expect.

#define PROPRIO_DEFINE_ERROR(Name, Base)                 \
  struct Name : Base {                                   \
    explicit Name(const std::string& what) : Base(what) {} \
  }

PROPRIO_DEFINE_ERROR(DimensionMismatch, std::invalid_argument);
PROPRIO_DEFINE_ERROR(NonConvergence, std::runtime_error);
PROPRIO_DEFINE_ERROR(IllConditioned, std::runtime_error);
PROPRIO_DEFINE_ERROR(NonFinite, std::runtime_error);
PROPRIO_DEFINE_ERROR(InvalidTimestep, std::invalid_argument);
PROPRIO_DEFINE_ERROR(OutOfRange, std::domain_error);
PROPRIO_DEFINE_ERROR(InvalidRange, std::invalid_argument);
PROPRIO_DEFINE_ERROR(RankDeficient, std::runtime_error);
PROPRIO_DEFINE_ERROR(UnstableFit, std::runtime_error);
PROPRIO_DEFINE_ERROR(EmptyDataset, std::invalid_argument);
PROPRIO_DEFINE_ERROR(EmptyTrace, std::invalid_argument);
PROPRIO_DEFINE_ERROR(DegenerateParams, std::invalid_argument);
PROPRIO_DEFINE_ERROR(Undetectable, std::runtime_error);
PROPRIO_DEFINE_ERROR(Unstabilizable, std::runtime_error);
PROPRIO_DEFINE_ERROR(NonPositiveWeight, std::invalid_argument);
PROPRIO_DEFINE_ERROR(ParamOutOfRange, std::invalid_argument);
PROPRIO_DEFINE_ERROR(NonPeriodicKeyframes, std::invalid_argument);
PROPRIO_DEFINE_ERROR(MissingBaselineData, std::runtime_error);
PROPRIO_DEFINE_ERROR(MissingContactData, std::invalid_argument);
PROPRIO_DEFINE_ERROR(ZeroElectricalPower, std::runtime_error);
PROPRIO_DEFINE_ERROR(DegenerateReference, std::invalid_argument);
PROPRIO_DEFINE_ERROR(MissingModel, std::runtime_error);
PROPRIO_DEFINE_ERROR(Divergence, std::runtime_error);
PROPRIO_DEFINE_ERROR(InsufficientExcitation, std::runtime_error);
PROPRIO_DEFINE_ERROR(ConfigError, std::runtime_error);

#undef PROPRIO_DEFINE_ERROR

}  // namespace proprio
