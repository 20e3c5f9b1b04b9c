#include "io_internal.hpp"
#include "kmf/error.hpp"
#include "xml_pull.hpp"

namespace kmf::detail {

void XmlPull::fail(const std::string& what) const { throw LoadError(ErrorKind::syntax, pos_.offset, pos_.line, what); }

void XmlPull::skip_ws() {
  for (int c = in_.peek(); c == ' ' || c == '\n' || c == '\t' || c == '\r'; c = in_.peek()) in_.get();
}

void XmlPull::expect(char c) {
  const int got = in_.get();
  if (got != static_cast<unsigned char>(c)) {
    pos_ = {in_.offset(), in_.line()};
    fail(got == InStream::kEof ? std::string("unexpected end of input, expected '") + c + "'"
                               : std::string("expected '") + c + "', found '" + static_cast<char>(got) + "'");
  }
}

void XmlPull::read_name(std::string& out) {
  out.clear();
  for (int c = in_.peek(); c != InStream::kEof; c = in_.peek()) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '/' || c == '>' || c == '=' || c == '<' || c == '"' ||
        c == '\'') {
      break;
    }
    out += static_cast<char>(in_.get());
  }
  if (out.empty()) fail("expected a name");
}

namespace {

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

void XmlPull::read_value(std::string& out) {
  out.clear();
  const int quote = in_.get();
  if (quote != '"' && quote != '\'') fail("expected a quoted attribute value");
  while (true) {
    const int c = in_.get();
    if (c == InStream::kEof) fail("unterminated attribute value");
    if (c == quote) return;
    if (c == '<') fail("'<' inside attribute value");
    if (c != '&') {
      out += static_cast<char>(c);
      continue;
    }
    char ent[12];
    std::size_t n = 0;
    for (int d = in_.get(); d != ';'; d = in_.get()) {
      if (d == InStream::kEof || n == sizeof ent) fail("malformed entity reference");
      ent[n++] = static_cast<char>(d);
    }
    const std::string_view e(ent, n);
    if (e == "lt") {
      out += '<';
    } else if (e == "gt") {
      out += '>';
    } else if (e == "amp") {
      out += '&';
    } else if (e == "quot") {
      out += '"';
    } else if (e == "apos") {
      out += '\'';
    } else if (n >= 2 && e[0] == '#') {
      const bool hex = e[1] == 'x' || e[1] == 'X';
      std::uint32_t cp = 0;
      const char* b = e.data() + (hex ? 2 : 1);
      auto r = std::from_chars(b, e.data() + n, cp, hex ? 16 : 10);
      if (r.ec != std::errc() || r.ptr != e.data() + n || cp > 0x10FFFF) fail("malformed character reference");
      append_utf8(out, cp);
    } else {
      fail("unknown entity '&" + std::string(e) + ";'");
    }
  }
}

void XmlPull::skip_until(std::string_view terminator) {
  std::size_t matched = 0;
  while (matched < terminator.size()) {
    const int c = in_.get();
    if (c == InStream::kEof) fail("unterminated markup");
    if (c == static_cast<unsigned char>(terminator[matched])) {
      ++matched;
    } else {
      matched = c == static_cast<unsigned char>(terminator[0]) ? 1 : 0;
    }
  }
}

XmlPull::Event XmlPull::next() {
  while (true) {
    skip_ws();
    pos_ = {in_.offset(), in_.line()};
    const int c = in_.get();
    if (c == InStream::kEof) return Event::eof;
    if (c != '<') fail("unexpected text content");
    const int d = in_.peek();
    if (d == '?') {
      skip_until("?>");
      continue;
    }
    if (d == '!') {
      in_.get();
      if (in_.get() != '-' || in_.get() != '-') fail("unsupported markup declaration");
      skip_until("-->");
      continue;
    }
    if (d == '/') {
      in_.get();
      read_name(name_);
      skip_ws();
      expect('>');
      return Event::end;
    }
    read_name(name_);
    n_attrs_ = 0;
    self_closing_ = false;
    while (true) {
      skip_ws();
      const int e = in_.peek();
      if (e == '/') {
        in_.get();
        expect('>');
        self_closing_ = true;
        break;
      }
      if (e == '>') {
        in_.get();
        break;
      }
      if (e == InStream::kEof) fail("unterminated start tag");
      if (n_attrs_ == attrs_.size()) attrs_.emplace_back();
      XmlAttr& a = attrs_[n_attrs_++];
      read_name(a.name);
      skip_ws();
      expect('=');
      skip_ws();
      read_value(a.value);
    }
    return Event::start;
  }
}

namespace {

std::string_view strip_prefix(std::string_view s) {
  const auto colon = s.find(':');
  return colon == std::string_view::npos ? s : s.substr(colon + 1);
}

// Splits a space separated reference list; spaces escaped by a backslash
// belong to the path. A bare '/' stands for the root.
template <class F>
void for_each_path(std::string_view v, F&& f) {
  std::size_t start = 0;
  for (std::size_t i = 0; i <= v.size(); ++i) {
    if (i < v.size() && v[i] == '\\') {
      ++i;
      continue;
    }
    if (i == v.size() || v[i] == ' ') {
      if (i > start) f(v.substr(start, i - start));
      start = i + 1;
    }
  }
}

}  // namespace

void apply_xmi_start(ModelBuilder& b, std::string_view tag, const XmlAttr* attrs, std::size_t n, bool root) {
  if (root) {
    for (std::size_t i = 0; i < n; ++i) {
      if (attrs[i].name == "xmlns:mm") b.check_metamodel(attrs[i].value);
    }
    b.begin_root(strip_prefix(tag));
  } else {
    const SlotIndex slot = b.feature(tag);
    std::string_view cls;
    for (std::size_t i = 0; i < n; ++i) {
      if (attrs[i].name == "xsi:type") cls = strip_prefix(attrs[i].value);
    }
    b.begin_child(slot, cls);
  }
  bool has_refs = false;
  for (std::size_t i = 0; i < n; ++i) {
    const XmlAttr& a = attrs[i];
    const std::string_view name = a.name;
    if (name.starts_with("xmlns")) {
      if (!root) b.fail(ErrorKind::syntax, "namespace declaration on a nested element");
      continue;
    }
    if (name == "xsi:type") {
      if (root) b.fail(ErrorKind::syntax, "xsi:type on the root element");
      continue;
    }
    if (name == "mm:key") {
      if (root) b.fail(ErrorKind::syntax, "mm:key on the root element");
      b.set_key(a.value);
      continue;
    }
    const SlotIndex slot = b.feature(name);
    const SlotDef& def = b.current_class().slot(slot);
    if (def.is_attribute()) {
      b.attribute_text(slot, a.value);
    } else if (def.containment) {
      b.fail(ErrorKind::type_mismatch, "containment '" + def.name + "' given as an XML attribute");
    } else {
      has_refs = true;
    }
  }
  if (!has_refs) return;
  for (std::size_t i = 0; i < n; ++i) {
    const XmlAttr& a = attrs[i];
    if (a.name.find(':') != std::string::npos || a.name.starts_with("xmlns")) continue;
    const SlotIndex slot = b.feature(a.name);
    const SlotDef& def = b.current_class().slot(slot);
    if (!def.is_reference()) continue;
    if (def.many()) {
      for_each_path(a.value, [&](std::string_view p) { b.reference(slot, p == "/" ? std::string_view() : p); });
    } else {
      b.reference(slot, a.value);
    }
  }
}

Model read_xmi(std::shared_ptr<const DispatchTable> table, InStream& in) {
  SourcePos pos;
  ModelBuilder b(std::move(table), pos);
  XmlPull xml(in, pos);
  std::vector<std::string> open;
  while (true) {
    const XmlPull::Event ev = xml.next();
    if (ev == XmlPull::Event::eof) break;
    if (ev == XmlPull::Event::start) {
      if (b.has_root() && open.empty()) b.fail(ErrorKind::syntax, "content after the root element");
      apply_xmi_start(b, xml.name(), xml.attrs(), xml.attr_count(), open.empty());
      if (xml.self_closing()) {
        b.end();
      } else {
        open.push_back(xml.name());
      }
    } else {
      if (open.empty() || open.back() != xml.name()) b.fail(ErrorKind::syntax, "mismatched end tag '</" + xml.name() + ">'");
      open.pop_back();
      b.end();
    }
  }
  if (!open.empty()) b.fail(ErrorKind::syntax, "unexpected end of input inside <" + open.back() + ">");
  return b.finish();
}

}  // namespace kmf::detail
