#pragma once

// Model serialization.
//
// XMI dialect: one root element `mm:<Class>` declaring `xmlns:mm` as the
// metamodel name; containment targets nested as child elements named after
// the relationship; attributes and non-containment references as XML
// attributes, references holding paths (space separated when many).
// `xsi:type="mm:<Class>"` appears when the class differs from the declared
// target, `mm:key` carries the automatic key of an element without id in a
// many-valued containment.
//
// JSON dialect: every element is an object starting with "class" (the root
// also has "@metamodel" first, keyless entries of many-valued containments
// carry "@key"), then attributes in slot order, references as path strings
// (arrays when many), then containments as objects (arrays when many).
//
// Both writers stream depth-first in declaration order; both readers are
// single-pass pull parsers that create elements directly.

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

#include "kmf/model.hpp"

namespace kmf {

enum class Format : std::uint8_t { xmi, json };

struct SerializationOptions {
  Format format = Format::xmi;
  bool compress = false;  // gzip framing of the whole stream
  bool pretty = false;    // json only; xmi is always indented
};

/// Throws Error(no_root), Error(unresolved_reference) on a reference to an
/// element outside the containment tree, Error(io) on write failure.
void save(const Model& m, std::ostream& sink, const SerializationOptions& opts);
std::string save_to_string(const Model& m, const SerializationOptions& opts);

/// Streaming loader. Gzip input is detected from its magic bytes; the
/// format comes from `opts`. Throws LoadError.
Model load(std::shared_ptr<const DispatchTable> table, std::istream& source, const SerializationOptions& opts);
Model load_from_string(std::shared_ptr<const DispatchTable> table, std::string_view text, const SerializationOptions& opts);

/// Baseline loader: materializes a generic document tree first, then builds
/// the model from it. Same result and errors as load().
Model load_dom_baseline(std::shared_ptr<const DispatchTable> table, std::istream& source, const SerializationOptions& opts);

/// Options implied by a file name: `.json` or `.xmi`, optionally followed by
/// `.gz`. Throws Error(io) for other extensions.
SerializationOptions options_for_path(std::string_view path);

void save_file(const Model& m, const std::string& path, const SerializationOptions& opts);
void save_file(const Model& m, const std::string& path);
Model load_file(std::shared_ptr<const DispatchTable> table, const std::string& path);

/// Metamodel name declared by a serialized model (`xmlns:mm` or
/// "@metamodel"), read from the start of the file.
std::string peek_metamodel_name(const std::string& path);

}  // namespace kmf
