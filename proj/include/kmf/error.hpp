#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kmf {

enum class ErrorKind : std::uint8_t {
  syntax,
  duplicate_class,
  unknown_class,
  unknown_feature,
  type_mismatch,
  read_only,
  duplicate_id,
  conformance,
  second_container,
  containment_cycle,
  multiplicity,
  unresolved_reference,
  detached,
  unknown_relation,
  no_root,
  table_mismatch,
  invalid_metamodel,
  shared_mutable_reference,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base of every error raised by the library. The kind is stable and meant
/// for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Metamodel text errors carry a 1-based line/column.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Model stream errors carry the byte offset and 1-based line of the token
/// that triggered them.
class LoadError : public Error {
 public:
  LoadError(ErrorKind kind, std::uint64_t offset, std::uint64_t line, const std::string& detail);

  std::uint64_t offset() const noexcept { return offset_; }
  std::uint64_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::uint64_t offset_;
  std::uint64_t line_;
  std::string detail_;
};

}  // namespace kmf
