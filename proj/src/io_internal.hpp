#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

#include "io_stream.hpp"
#include "kmf/io.hpp"
#include "model_internal.hpp"

namespace kmf::detail {

void write_xmi(const Model& m, OutStream& out);
void write_json(const Model& m, OutStream& out, bool pretty);
Model read_xmi(std::shared_ptr<const DispatchTable> table, InStream& in);
Model read_json(std::shared_ptr<const DispatchTable> table, InStream& in);
Model read_xmi_dom(std::shared_ptr<const DispatchTable> table, InStream& in);
Model read_json_dom(std::shared_ptr<const DispatchTable> table, InStream& in);

/// Shortest round-tripping text of a double; non-finite values as nan/inf.
inline std::string_view format_double(double v, char (&buf)[32]) noexcept {
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, static_cast<std::size_t>(r.ptr - buf)};
}

inline std::string_view format_int(std::int64_t v, char (&buf)[32]) noexcept {
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, static_cast<std::size_t>(r.ptr - buf)};
}

/// Appends the path of a reference target, turning a detached target into
/// Error(unresolved_reference).
void append_reference_path(const Model& m, const Element* holder, SlotIndex slot, const Element* target, std::string& out);

}  // namespace kmf::detail
