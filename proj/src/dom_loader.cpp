// Two-phase baseline loaders: the whole input becomes a generic document
// tree first, then the tree is walked to build the model.

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "io_internal.hpp"
#include "kmf/error.hpp"
#include "model_builder.hpp"
#include "xml_pull.hpp"

namespace kmf::detail {

namespace {

struct XmlNode {
  std::string name;
  std::vector<XmlAttr> attrs;
  std::vector<std::unique_ptr<XmlNode>> children;
  SourcePos pos;
};

class XmiDomLoader {
 public:
  XmiDomLoader(std::shared_ptr<const DispatchTable> table, InStream& in) : b_(std::move(table), pos_), in_(in) {}

  Model run() {
    std::unique_ptr<XmlNode> root = parse();
    if (!root) b_.fail(ErrorKind::syntax, "no root element");
    walk(*root, true);
    return b_.finish();
  }

 private:
  std::unique_ptr<XmlNode> parse() {
    SourcePos scan;
    XmlPull xml(in_, scan);
    std::unique_ptr<XmlNode> root;
    std::vector<XmlNode*> open;
    while (true) {
      const XmlPull::Event ev = xml.next();
      pos_ = scan;
      if (ev == XmlPull::Event::eof) break;
      if (ev == XmlPull::Event::start) {
        auto node = std::make_unique<XmlNode>();
        node->name = xml.name();
        node->attrs.assign(xml.attrs(), xml.attrs() + xml.attr_count());
        node->pos = scan;
        XmlNode* raw = node.get();
        if (open.empty()) {
          if (root) b_.fail(ErrorKind::syntax, "content after the root element");
          root = std::move(node);
        } else {
          open.back()->children.push_back(std::move(node));
        }
        if (!xml.self_closing()) open.push_back(raw);
      } else {
        if (open.empty() || open.back()->name != xml.name()) b_.fail(ErrorKind::syntax, "mismatched end tag '</" + xml.name() + ">'");
        open.pop_back();
      }
    }
    if (!open.empty()) b_.fail(ErrorKind::syntax, "unexpected end of input inside <" + open.back()->name + ">");
    return root;
  }

  void walk(const XmlNode& n, bool root) {
    pos_ = n.pos;
    apply_xmi_start(b_, n.name, n.attrs.data(), n.attrs.size(), root);
    for (const auto& c : n.children) walk(*c, false);
    b_.end();
  }

  SourcePos pos_;
  ModelBuilder b_;
  InStream& in_;
};

using Json = nlohmann::json;

class JsonDomLoader {
 public:
  JsonDomLoader(std::shared_ptr<const DispatchTable> table, InStream& in) : b_(std::move(table), pos_), in_(in) {}

  Model run() {
    std::string text;
    for (int c = in_.get(); c != InStream::kEof; c = in_.get()) text += static_cast<char>(c);
    Json doc;
    try {
      doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
      pos_.offset = e.byte;
      b_.fail(ErrorKind::syntax, e.what());
    }
    if (!doc.is_object()) b_.fail(ErrorKind::syntax, "expected an object");
    auto mm = doc.find("@metamodel");
    if (mm == doc.end() || !mm->is_string()) b_.fail(ErrorKind::syntax, "missing \"@metamodel\"");
    b_.check_metamodel(mm->get_ref<const std::string&>());
    element(doc, kNoSlot, true);
    return b_.finish();
  }

 private:
  static std::string number_text(const Json& v) {
    if (v.is_number_integer()) return v.dump();
    char buf[32];
    return std::string(format_double(v.get<double>(), buf));
  }

  void element(const Json& obj, SlotIndex slot, bool root) {
    auto cls = obj.find("class");
    if (cls == obj.end() || !cls->is_string()) b_.fail(ErrorKind::syntax, "element without \"class\"");
    if (root) {
      b_.begin_root(cls->get_ref<const std::string&>());
    } else {
      b_.begin_child(slot, cls->get_ref<const std::string&>());
    }
    // Key and attributes first, then references, then containments.
    std::vector<std::pair<SlotIndex, const Json*>> refs;
    std::vector<std::pair<SlotIndex, const Json*>> children;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const std::string& name = it.key();
      const Json& v = it.value();
      if (name == "class" || (root && name == "@metamodel")) continue;
      if (name == "@key") {
        if (!v.is_number_integer()) b_.fail(ErrorKind::syntax, "\"@key\" must be an integer");
        b_.set_key(v.dump());
        continue;
      }
      const SlotIndex f = b_.feature(name);
      const SlotDef& def = b_.current_class().slot(f);
      if (def.is_attribute()) {
        if (v.is_string()) {
          b_.attribute_string(f, v.get_ref<const std::string&>());
        } else if (v.is_boolean()) {
          b_.attribute_bool(f, v.get<bool>());
        } else if (v.is_number()) {
          b_.attribute_number(f, number_text(v));
        } else {
          b_.fail(ErrorKind::type_mismatch, "'" + def.name + "' expects " + std::string(to_string(def.type)));
        }
      } else if (def.containment) {
        children.emplace_back(f, &v);
      } else {
        refs.emplace_back(f, &v);
      }
    }
    for (auto [f, v] : refs) {
      const SlotDef& def = b_.current_class().slot(f);
      if (v->is_null() && !def.many()) continue;
      if (def.many() ? !v->is_array() : !v->is_string()) b_.fail(ErrorKind::syntax, "malformed reference '" + def.name + "'");
      if (v->is_string()) {
        b_.reference(f, v->get_ref<const std::string&>());
        continue;
      }
      for (const Json& p : *v) {
        if (!p.is_string()) b_.fail(ErrorKind::syntax, "malformed reference '" + def.name + "'");
        b_.reference(f, p.get_ref<const std::string&>());
      }
    }
    std::sort(children.begin(), children.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto [f, v] : children) {
      const SlotDef& def = b_.current_class().slot(f);
      if (v->is_null() && !def.many()) continue;
      if (def.many()) {
        if (!v->is_array()) b_.fail(ErrorKind::syntax, "'" + def.name + "' must be an array");
        for (const Json& c : *v) {
          if (!c.is_object()) b_.fail(ErrorKind::syntax, "'" + def.name + "' entries must be objects");
          element(c, f, false);
        }
      } else {
        if (!v->is_object()) b_.fail(ErrorKind::syntax, "'" + def.name + "' must be an object");
        element(*v, f, false);
      }
    }
    b_.end();
  }

  SourcePos pos_;
  ModelBuilder b_;
  InStream& in_;
};

}  // namespace

Model read_xmi_dom(std::shared_ptr<const DispatchTable> table, InStream& in) { return XmiDomLoader(std::move(table), in).run(); }

Model read_json_dom(std::shared_ptr<const DispatchTable> table, InStream& in) { return JsonDomLoader(std::move(table), in).run(); }

}  // namespace kmf::detail
