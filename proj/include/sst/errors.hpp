#pragma once
#include <stdexcept>
#include <string>

namespace sst {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingColumn : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct NonPositiveTime : Error { using Error::Error; };
struct BadEventFlag : Error { using Error::Error; };
struct AllMissingColumn : Error { using Error::Error; };
struct TooFewRows : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct TooFewEvents : Error { using Error::Error; };
struct NonPositiveDerivative : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct EmptyRestrictedSet : Error { using Error::Error; };
struct MissingGroupColumn : Error { using Error::Error; };
struct NoComparablePairs : Error { using Error::Error; };
struct UndefinedAtTime : Error { using Error::Error; };
struct DegenerateKM : Error { using Error::Error; };
struct DegenerateCensoring : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct NonFiniteAtStart : Error { using Error::Error; };

} // namespace sst
