#include "io_internal.hpp"
#include "kmf/error.hpp"
#include "kmf/query.hpp"

namespace kmf::detail {

void append_reference_path(const Model& m, const Element* holder, SlotIndex slot, const Element* target, std::string& out) {
  try {
    append_path_of(m, ElementRef(const_cast<Element*>(target)), out);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::detached) throw;
    throw Error(ErrorKind::unresolved_reference, "dangling reference: '" + holder->cls->name() + "." +
                                                     holder->cls->slot(slot).name + "' targets a '" +
                                                     target->cls->name() + "' element outside the containment tree");
  }
}

namespace {

constexpr std::string_view kXsi = "http://www.w3.org/2001/XMLSchema-instance";

class XmiWriter {
 public:
  XmiWriter(const Model& m, OutStream& out) : m_(m), out_(out) { path_.reserve(256); }

  void run() {
    out_.write("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    const Element* root = m_.root().get();
    if (!root) throw Error(ErrorKind::no_root, "cannot save a model without root");
    element(root, {}, nullptr, false, 0);
  }

 private:
  void indent(std::size_t depth) {
    for (std::size_t i = 0; i < depth; ++i) out_.write("  ");
  }

  void escaped(std::string_view s) {
    for (char c : s) {
      switch (c) {
        case '&': out_.write("&amp;"); break;
        case '<': out_.write("&lt;"); break;
        case '>': out_.write("&gt;"); break;
        case '"': out_.write("&quot;"); break;
        case '\n': out_.write("&#10;"); break;
        case '\r': out_.write("&#13;"); break;
        case '\t': out_.write("&#9;"); break;
        default: out_.put(c);
      }
    }
  }

  void attr_open(std::string_view name) {
    out_.put(' ');
    out_.write(name);
    out_.write("=\"");
  }

  // `relation` empty means the root.
  void element(const Element* e, std::string_view relation, const SlotDef* decl, bool keyed, std::size_t depth) {
    const ClassLayout& cls = *e->cls;
    indent(depth);
    out_.put('<');
    if (relation.empty()) {
      out_.write("mm:");
      out_.write(cls.name());
      attr_open("xmlns:mm");
      escaped(m_.table().metamodel_name());
      out_.put('"');
      attr_open("xmlns:xsi");
      out_.write(kXsi);
      out_.put('"');
    } else {
      out_.write(relation);
      if (decl && decl->target != cls.id()) {
        attr_open("xsi:type");
        out_.write("mm:");
        out_.write(cls.name());
        out_.put('"');
      }
      if (keyed && !cls.has_id()) {
        char buf[32];
        attr_open("mm:key");
        out_.write(format_int(e->auto_key, buf));
        out_.put('"');
      }
    }
    for (SlotIndex i : cls.attribute_slots()) {
      const SlotDef& def = cls.slot(i);
      const Slot& s = e->slots()[i];
      attr_open(def.name);
      char buf[32];
      switch (def.type) {
        case AttrType::string_type: escaped(Atom(s.str).view()); break;
        case AttrType::int_type: out_.write(format_int(s.i, buf)); break;
        case AttrType::float_type: out_.write(format_double(s.f, buf)); break;
        case AttrType::bool_type: out_.write(s.b ? "true" : "false"); break;
      }
      out_.put('"');
    }
    bool has_children = false;
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      const Slot& s = e->slots()[i];
      if (def.containment) {
        has_children |= def.many() ? (s.many && !s.many->entries.empty()) : s.ref != nullptr;
        continue;
      }
      path_.clear();
      if (def.many()) {
        if (!s.many || s.many->entries.empty()) continue;
        for (const auto& entry : s.many->entries) {
          if (!path_.empty()) path_ += ' ';
          const std::size_t at = path_.size();
          append_reference_path(m_, e, i, entry.element, path_);
          // The root's path is empty, which a list cannot hold; a bare '/' is never a valid path.
          if (path_.size() == at) path_ += '/';
        }
      } else {
        if (!s.ref) continue;
        append_reference_path(m_, e, i, s.ref, path_);
      }
      attr_open(def.name);
      escaped(path_);
      out_.put('"');
    }
    if (!has_children) {
      out_.write("/>\n");
      return;
    }
    out_.write(">\n");
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      if (!def.containment) continue;
      const Slot& s = e->slots()[i];
      if (def.many()) {
        if (!s.many) continue;
        for (const auto& entry : s.many->entries) element(entry.element, def.name, &def, true, depth + 1);
      } else if (s.ref) {
        element(s.ref, def.name, &def, false, depth + 1);
      }
    }
    indent(depth);
    out_.write("</");
    if (relation.empty()) {
      out_.write("mm:");
      out_.write(cls.name());
    } else {
      out_.write(relation);
    }
    out_.write(">\n");
  }

  const Model& m_;
  OutStream& out_;
  std::string path_;
};

}  // namespace

void write_xmi(const Model& m, OutStream& out) { XmiWriter(m, out).run(); }

}  // namespace kmf::detail
