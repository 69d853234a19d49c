#pragma once

#include <stdexcept>
#include <string>

namespace pa {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define PA_DEFINE_ERROR(NAME)      \
  struct NAME : Error {            \
    using Error::Error;            \
  }

// Field construction / arithmetic.
PA_DEFINE_ERROR(NonPrimeCharacteristic);
PA_DEFINE_ERROR(DegreeOutOfRange);
PA_DEFINE_ERROR(MixedFieldContexts);
PA_DEFINE_ERROR(ZeroInverse);
PA_DEFINE_ERROR(FieldExhausted);

// Polynomials.
PA_DEFINE_ERROR(DuplicateAbscissa);
PA_DEFINE_ERROR(ZeroAbscissa);

// Finite protocol.
PA_DEFINE_ERROR(FieldTooSmall);
PA_DEFINE_ERROR(MalformedV);
PA_DEFINE_ERROR(EnumerationBudgetExceeded);

// Distributions / information measures.
PA_DEFINE_ERROR(InvalidParams);
PA_DEFINE_ERROR(InvalidDistribution);
PA_DEFINE_ERROR(AlphabetMismatch);
PA_DEFINE_ERROR(LengthMismatch);
PA_DEFINE_ERROR(InvalidEntropy);

// Binning scheme.
PA_DEFINE_ERROR(DegenerateSource);
PA_DEFINE_ERROR(CodebookTooLarge);
PA_DEFINE_ERROR(BinIndexOutOfRange);

// Adversary.
PA_DEFINE_ERROR(WrongRegime);
PA_DEFINE_ERROR(UntrainedStrategy);
PA_DEFINE_ERROR(CodebookMismatch);

// Simulation / CLI configuration.
PA_DEFINE_ERROR(ConfigInvalid);

#undef PA_DEFINE_ERROR

}  // namespace pa
