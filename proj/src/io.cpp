#include <fstream>
#include <sstream>

#include "io_internal.hpp"
#include "kmf/error.hpp"

namespace kmf {

void save(const Model& m, std::ostream& sink, const SerializationOptions& opts) {
  detail::OutStream out(sink, opts.compress);
  if (opts.format == Format::xmi) {
    detail::write_xmi(m, out);
  } else {
    detail::write_json(m, out, opts.pretty);
  }
  out.finish();
}

std::string save_to_string(const Model& m, const SerializationOptions& opts) {
  std::ostringstream os;
  save(m, os, opts);
  return std::move(os).str();
}

Model load(std::shared_ptr<const DispatchTable> table, std::istream& source, const SerializationOptions& opts) {
  detail::InStream in(source);
  return opts.format == Format::xmi ? detail::read_xmi(std::move(table), in) : detail::read_json(std::move(table), in);
}

Model load_from_string(std::shared_ptr<const DispatchTable> table, std::string_view text, const SerializationOptions& opts) {
  std::istringstream is{std::string(text)};
  return load(std::move(table), is, opts);
}

Model load_dom_baseline(std::shared_ptr<const DispatchTable> table, std::istream& source, const SerializationOptions& opts) {
  detail::InStream in(source);
  return opts.format == Format::xmi ? detail::read_xmi_dom(std::move(table), in) : detail::read_json_dom(std::move(table), in);
}

SerializationOptions options_for_path(std::string_view path) {
  SerializationOptions opts;
  if (path.ends_with(".gz")) {
    opts.compress = true;
    path.remove_suffix(3);
  }
  if (path.ends_with(".json")) {
    opts.format = Format::json;
  } else if (path.ends_with(".xmi")) {
    opts.format = Format::xmi;
  } else {
    throw Error(ErrorKind::io, "cannot tell the format of '" + std::string(path) + "' (expected .xmi or .json, optionally .gz)");
  }
  return opts;
}

void save_file(const Model& m, const std::string& path, const SerializationOptions& opts) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
  save(m, os, opts);
}

void save_file(const Model& m, const std::string& path) { save_file(m, path, options_for_path(path)); }

Model load_file(std::shared_ptr<const DispatchTable> table, const std::string& path) {
  const SerializationOptions opts = options_for_path(path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return load(std::move(table), is, opts);
}

std::string peek_metamodel_name(const std::string& path) {
  const SerializationOptions opts = options_for_path(path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  detail::InStream in(is);
  // The declaration sits in the first few hundred bytes of either dialect.
  std::string head;
  for (int c = in.get(); c != detail::InStream::kEof && head.size() < 4096; c = in.get()) head += static_cast<char>(c);
  const std::string_view marker = opts.format == Format::xmi ? "xmlns:mm=\"" : "\"@metamodel\":";
  auto at = head.find(marker);
  if (at == std::string::npos) throw Error(ErrorKind::syntax, "'" + path + "' does not declare its metamodel");
  at += marker.size();
  if (opts.format == Format::json) {
    while (at < head.size() && (head[at] == ' ' || head[at] == '"')) ++at;
  }
  const auto end = head.find('"', at);
  if (end == std::string::npos) throw Error(ErrorKind::syntax, "'" + path + "' has a malformed metamodel declaration");
  return head.substr(at, end - at);
}

}  // namespace kmf
