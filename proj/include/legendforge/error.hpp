#pragma once

#include <stdexcept>
#include <string>

namespace legendforge {

enum class Errc {
  // validation / user input
  ValidationError,
  ParseError,
  MissingRaster,
  DecodeError,
  DimensionMismatch,
  NotEnoughExamples,
  OutOfFrame,
  NoPredictionsFound,
  MapMismatch,
  DuplicateEntry,
  EmptyRegion,
  CassetteMiss,
  IoError,
  // gateway / transport
  AuthError,
  TransportError,
  TimeoutError,
  RateLimited,
  // everything else
  Internal,
};

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ValidationError: return "ValidationError";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingRaster: return "MissingRaster";
    case Errc::DecodeError: return "DecodeError";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotEnoughExamples: return "NotEnoughExamples";
    case Errc::OutOfFrame: return "OutOfFrame";
    case Errc::NoPredictionsFound: return "NoPredictionsFound";
    case Errc::MapMismatch: return "MapMismatch";
    case Errc::DuplicateEntry: return "DuplicateEntry";
    case Errc::EmptyRegion: return "EmptyRegion";
    case Errc::CassetteMiss: return "CassetteMiss";
    case Errc::IoError: return "IoError";
    case Errc::AuthError: return "AuthError";
    case Errc::TransportError: return "TransportError";
    case Errc::TimeoutError: return "TimeoutError";
    case Errc::RateLimited: return "RateLimited";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

/// Process exit code for an error class: 1 user/validation, 2 transport, 3 internal.
inline int exit_code_for(Errc c) {
  switch (c) {
    case Errc::AuthError:
    case Errc::TransportError:
    case Errc::TimeoutError:
    case Errc::RateLimited:
      return 2;
    case Errc::Internal:
      return 3;
    default:
      return 1;
  }
}

}  // namespace legendforge
