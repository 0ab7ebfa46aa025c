#include "spcr/error.hpp"

namespace spcr {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidData: return "InvalidData";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::DegenerateResponse: return "DegenerateResponse";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::DegenerateDirection: return "DegenerateDirection";
    case ErrorKind::NoAssociation: return "NoAssociation";
    case ErrorKind::UnsupportedResponse: return "UnsupportedResponse";
    case ErrorKind::IngestError: return "IngestError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Error";
}

}  // namespace spcr
