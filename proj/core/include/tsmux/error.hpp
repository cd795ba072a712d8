#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsmux {

enum class ErrorCode {
    BadSync,
    BadAdaptationLength,
    MalformedPacket,
    Overflow,
    NotFound,
    CrcMismatch,
    ContinuityGap,
    WrongTableId,
    MalformedBody,
    NoPcr,
    EmptyStream,
    Infeasible,
    NoCapacity,
    PatTooLarge,
    PidConflict,
    MultiSectionPat,
    Incomplete,
    NoData,
    InvalidArgument,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception type thrown by every tsmux component. The code is stable and
/// is what callers (and the CLI exit-code mapping) should switch on; the
/// message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::BadSync: return "bad sync";
    case ErrorCode::BadAdaptationLength: return "bad adaptation length";
    case ErrorCode::MalformedPacket: return "malformed packet";
    case ErrorCode::Overflow: return "overflow";
    case ErrorCode::NotFound: return "not found";
    case ErrorCode::CrcMismatch: return "crc mismatch";
    case ErrorCode::ContinuityGap: return "continuity gap";
    case ErrorCode::WrongTableId: return "wrong table id";
    case ErrorCode::MalformedBody: return "malformed body";
    case ErrorCode::NoPcr: return "no pcr";
    case ErrorCode::EmptyStream: return "empty stream";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::NoCapacity: return "no capacity";
    case ErrorCode::PatTooLarge: return "pat too large";
    case ErrorCode::PidConflict: return "pid conflict";
    case ErrorCode::MultiSectionPat: return "multi-section pat";
    case ErrorCode::Incomplete: return "incomplete";
    case ErrorCode::NoData: return "no data";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Io: return "i/o error";
    }
    return "unknown error";
}

} // namespace tsmux
