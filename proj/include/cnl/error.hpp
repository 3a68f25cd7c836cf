#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cnl {

enum class ErrorCode {
  MalformedHeader,
  InvalidMapping,
  InvalidCatalog,
  EmptyName,
  MissingPrincipal,
  DegenerateGraph,
  NoConvergence,
  NoTies,
  EmptyAfterIsolateRemoval,
  DimensionTooLarge,
  EigFailure,
  MissingNode,
  InvalidCoordinate,
  EmptyBorderSet,
  ChainTooShort,
  EmptyChain,
  InvalidArgument,
  Config,
  SchemaMismatch,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::InvalidMapping: return "InvalidMapping";
    case ErrorCode::InvalidCatalog: return "InvalidCatalog";
    case ErrorCode::EmptyName: return "EmptyName";
    case ErrorCode::MissingPrincipal: return "MissingPrincipal";
    case ErrorCode::DegenerateGraph: return "DegenerateGraph";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NoTies: return "NoTies";
    case ErrorCode::EmptyAfterIsolateRemoval: return "EmptyAfterIsolateRemoval";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::EigFailure: return "EigFailure";
    case ErrorCode::MissingNode: return "MissingNode";
    case ErrorCode::InvalidCoordinate: return "InvalidCoordinate";
    case ErrorCode::EmptyBorderSet: return "EmptyBorderSet";
    case ErrorCode::ChainTooShort: return "ChainTooShort";
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "Config";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above so
// callers (notably the CLI) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cnl
