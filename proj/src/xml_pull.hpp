#pragma once

// Minimal pull tokenizer for the XMI dialect: prolog, comments, start/end
// tags with attributes, entity references, and whitespace between tags.
// Attribute storage is reused from tag to tag.

#include <string>
#include <string_view>
#include <vector>

#include "io_stream.hpp"
#include "model_builder.hpp"

namespace kmf::detail {

struct XmlAttr {
  std::string name;
  std::string value;
};

class XmlPull {
 public:
  enum class Event { start, end, eof };

  XmlPull(InStream& in, SourcePos& pos) : in_(in), pos_(pos) { name_.reserve(64); }

  Event next();

  const std::string& name() const noexcept { return name_; }
  const XmlAttr* attrs() const noexcept { return attrs_.data(); }
  std::size_t attr_count() const noexcept { return n_attrs_; }
  bool self_closing() const noexcept { return self_closing_; }

 private:
  [[noreturn]] void fail(const std::string& what) const;
  void skip_ws();
  void expect(char c);
  void read_name(std::string& out);
  void read_value(std::string& out);
  void skip_until(std::string_view terminator);

  InStream& in_;
  SourcePos& pos_;
  std::string name_;
  std::vector<XmlAttr> attrs_;
  std::size_t n_attrs_ = 0;
  bool self_closing_ = false;
};

/// Feeds one start tag to the builder: class selection (tag or xsi:type),
/// key, attributes, then references. `root` selects the root form.
void apply_xmi_start(ModelBuilder& b, std::string_view tag, const XmlAttr* attrs, std::size_t n, bool root);

}  // namespace kmf::detail
