#pragma once

#include <stdexcept>
#include <string>

namespace inextensa {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input / precondition violations (CLI exit code 2).
struct InvalidParams : Error { using Error::Error; };
struct DomainConflict : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct InconsistentInitialData : Error { using Error::Error; };

// Numerical failures detected while evaluating (CLI exit code 1).
struct SingularMetric : Error { using Error::Error; };
struct SingularMap : Error { using Error::Error; };
struct NotSPD : Error { using Error::Error; };
struct NotUnit : Error { using Error::Error; };
struct NotSkew : Error { using Error::Error; };
struct NotOrthogonal : Error { using Error::Error; };
struct NotFlat : Error { using Error::Error; };
struct DegenerateDenominator : Error { using Error::Error; };
struct ZeroDenominator : Error { using Error::Error; };
struct BlowUp : Error { using Error::Error; };

} // namespace inextensa
