#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttls {

enum class Errc {
    DimensionMismatch,
    NonFinite,
    ComputationFailed,
    GapViolation,
    NotGeneric,
    BadLevel,
    RankDeficientSample,
    MemoryGuard,
    ZeroSolution,
    GenericityViolation,
    DegenerateDraw,
    InvalidArgument,
    Parse,
    Io,
};

inline std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::ComputationFailed: return "ComputationFailed";
    case Errc::GapViolation: return "GapViolation";
    case Errc::NotGeneric: return "NotGeneric";
    case Errc::BadLevel: return "BadLevel";
    case Errc::RankDeficientSample: return "RankDeficientSample";
    case Errc::MemoryGuard: return "MemoryGuard";
    case Errc::ZeroSolution: return "ZeroSolution";
    case Errc::GenericityViolation: return "GenericityViolation";
    case Errc::DegenerateDraw: return "DegenerateDraw";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Parse: return "Parse";
    case Errc::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

namespace detail {

inline void require(bool condition, Errc code, const std::string& what)
{
    if (!condition) {
        throw Error(code, what);
    }
}

} // namespace detail

} // namespace ttls
