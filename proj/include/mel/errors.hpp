#pragma once

#include <stdexcept>
#include <string>

namespace mel {

// Base of every error raised by the library. `kind()` is a stable identifier
// used by the CLI and tests.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define MEL_DEFINE_ERROR(Name)                                                 \
    struct Name : Error {                                                      \
        explicit Name(const std::string& what = "") : Error(#Name, what) {}    \
    }

MEL_DEFINE_ERROR(IncompatibleRadicals);
MEL_DEFINE_ERROR(ParseError);
MEL_DEFINE_ERROR(ResonantForcing);
MEL_DEFINE_ERROR(KernelConditionUnsatisfiable);
MEL_DEFINE_ERROR(NotResonant);
MEL_DEFINE_ERROR(NoAlgebraicSolution);
MEL_DEFINE_ERROR(NoDecayingSolution);
MEL_DEFINE_ERROR(UnsupportedStructure);
MEL_DEFINE_ERROR(InconsistentConditions);
MEL_DEFINE_ERROR(OddIntegrand);
MEL_DEFINE_ERROR(IdenticallyZeroByParity);
MEL_DEFINE_ERROR(WrongParity);
MEL_DEFINE_ERROR(NoClosedFormAvailable);
MEL_DEFINE_ERROR(DegenerateBifurcation);
MEL_DEFINE_ERROR(QuadratureNonConvergent);
MEL_DEFINE_ERROR(PreconditionViolation);
MEL_DEFINE_ERROR(MaxArcLength);
MEL_DEFINE_ERROR(LeftAtlas);
MEL_DEFINE_ERROR(NoRoot);
MEL_DEFINE_ERROR(NonConvergent);
MEL_DEFINE_ERROR(WindowEmpty);
MEL_DEFINE_ERROR(OutsideValidity);

#undef MEL_DEFINE_ERROR

}  // namespace mel
