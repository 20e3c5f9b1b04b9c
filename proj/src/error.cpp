#include "kmf/error.hpp"

namespace kmf {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::syntax: return "syntax";
    case ErrorKind::duplicate_class: return "duplicate-class";
    case ErrorKind::unknown_class: return "unknown-class";
    case ErrorKind::unknown_feature: return "unknown-feature";
    case ErrorKind::type_mismatch: return "type-mismatch";
    case ErrorKind::read_only: return "read-only";
    case ErrorKind::duplicate_id: return "duplicate-id";
    case ErrorKind::conformance: return "conformance";
    case ErrorKind::second_container: return "second-container";
    case ErrorKind::containment_cycle: return "containment-cycle";
    case ErrorKind::multiplicity: return "multiplicity";
    case ErrorKind::unresolved_reference: return "unresolved-reference";
    case ErrorKind::detached: return "detached";
    case ErrorKind::unknown_relation: return "unknown-relation";
    case ErrorKind::no_root: return "no-root";
    case ErrorKind::table_mismatch: return "table-mismatch";
    case ErrorKind::invalid_metamodel: return "invalid-metamodel";
    case ErrorKind::shared_mutable_reference: return "shared-mutable-reference";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

ParseError::ParseError(ErrorKind kind, std::size_t line, std::size_t column, const std::string& message)
    : Error(kind, std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

LoadError::LoadError(ErrorKind kind, std::uint64_t offset, std::uint64_t line, const std::string& detail)
    : Error(kind, std::string(to_string(kind)) + " at line " + std::to_string(line) + " (byte " +
                      std::to_string(offset) + "): " + detail),
      offset_(offset),
      line_(line),
      detail_(detail) {}

}  // namespace kmf
