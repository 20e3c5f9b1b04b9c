#pragma once

// Metamodel description language.
//
//   # comment
//   metamodel cloud
//   class NamedElement { attr name : string id }
//   class ContainerNode : NamedElement {
//     ref hosts : ContainerNode [0..*] containment
//     ref peer : ContainerNode [0..1] opposite peer
//   }
//
// Members are separated by newlines or `;`. Bounds default to [0..1]; `*`
// spells an unbounded upper bound.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kmf {

struct SourceLocation {
  std::uint32_t line = 0;
  std::uint32_t column = 0;

  friend auto operator<=>(const SourceLocation&, const SourceLocation&) = default;
};

enum class AttrType : std::uint8_t { string_type, int_type, float_type, bool_type };

std::string_view to_string(AttrType t) noexcept;

inline constexpr std::uint32_t kUnbounded = 0xFFFFFFFFu;

struct AttributeDef {
  std::string name;
  AttrType type = AttrType::string_type;
  bool is_id = false;
  SourceLocation loc;
};

struct ReferenceDef {
  std::string name;
  std::string target;
  std::uint32_t lower = 0;
  std::uint32_t upper = 1;
  bool containment = false;
  std::optional<std::string> opposite;
  SourceLocation loc;

  bool many() const noexcept { return upper != 1; }
};

struct ClassDef {
  std::string name;
  std::optional<std::string> super;
  std::vector<AttributeDef> attributes;
  std::vector<ReferenceDef> references;
  SourceLocation loc;
  SourceLocation super_loc;
};

struct Metamodel {
  std::string name;
  std::vector<ClassDef> classes;

  const ClassDef* find_class(std::string_view n) const noexcept;
};

/// Structural equality, source locations ignored.
bool same_structure(const Metamodel& a, const Metamodel& b);

struct Diagnostic {
  SourceLocation loc;
  std::string message;
};

struct ValidationReport {
  std::vector<Diagnostic> errors;
  std::vector<Diagnostic> warnings;

  bool ok() const noexcept { return errors.empty(); }
};

/// Throws ParseError on syntax errors, duplicate class names and references
/// to undeclared classes.
Metamodel parse_metamodel(std::string_view text);

/// Canonical text form; parse_metamodel(print_metamodel(m)) reproduces m.
std::string print_metamodel(const Metamodel& m);

ValidationReport validate_metamodel(const Metamodel& m);

/// FSM, State, Transition, Action.
Metamodel builtin_fsm_metamodel();
/// ContainerRoot, NamedElement, ContainerNode, Instance, ComponentInstance.
Metamodel builtin_cloud_metamodel();

std::string_view builtin_fsm_text() noexcept;
std::string_view builtin_cloud_text() noexcept;

/// Builtin metamodel by name ("fsm" or "cloud").
std::optional<Metamodel> builtin_metamodel(std::string_view name);

}  // namespace kmf
