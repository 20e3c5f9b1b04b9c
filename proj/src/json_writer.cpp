#include "io_internal.hpp"
#include "kmf/error.hpp"

namespace kmf::detail {

namespace {

class JsonWriter {
 public:
  JsonWriter(const Model& m, OutStream& out, bool pretty) : m_(m), out_(out), pretty_(pretty) { path_.reserve(256); }

  void run() {
    const Element* root = m_.root().get();
    if (!root) throw Error(ErrorKind::no_root, "cannot save a model without root");
    element(root, false, 0);
    out_.put('\n');
  }

 private:
  void newline(std::size_t depth) {
    if (!pretty_) return;
    out_.put('\n');
    for (std::size_t i = 0; i < depth; ++i) out_.write("  ");
  }

  void string(std::string_view s) {
    out_.put('"');
    for (char c : s) {
      const auto u = static_cast<unsigned char>(c);
      switch (c) {
        case '"': out_.write("\\\""); break;
        case '\\': out_.write("\\\\"); break;
        case '\n': out_.write("\\n"); break;
        case '\r': out_.write("\\r"); break;
        case '\t': out_.write("\\t"); break;
        case '\b': out_.write("\\b"); break;
        case '\f': out_.write("\\f"); break;
        default:
          if (u < 0x20) {
            static constexpr char hex[] = "0123456789abcdef";
            out_.write("\\u00");
            out_.put(hex[u >> 4]);
            out_.put(hex[u & 15]);
          } else {
            out_.put(c);
          }
      }
    }
    out_.put('"');
  }

  // Opens a field of the current object.
  void field(std::string_view name, bool& first, std::size_t depth) {
    if (!first) out_.put(',');
    first = false;
    newline(depth);
    string(name);
    out_.put(':');
    if (pretty_) out_.put(' ');
  }

  void element(const Element* e, bool keyed, std::size_t depth) {
    const ClassLayout& cls = *e->cls;
    out_.put('{');
    bool first = true;
    const std::size_t inner = depth + 1;
    if (depth == 0) {
      field("@metamodel", first, inner);
      string(m_.table().metamodel_name());
    }
    field("class", first, inner);
    string(cls.name());
    char buf[32];
    if (keyed && !cls.has_id()) {
      field("@key", first, inner);
      out_.write(format_int(e->auto_key, buf));
    }
    for (SlotIndex i : cls.attribute_slots()) {
      const SlotDef& def = cls.slot(i);
      const Slot& s = e->slots()[i];
      field(def.name, first, inner);
      switch (def.type) {
        case AttrType::string_type: string(Atom(s.str).view()); break;
        case AttrType::int_type: out_.write(format_int(s.i, buf)); break;
        case AttrType::float_type:
          if (!std::isfinite(s.f)) {
            throw Error(ErrorKind::type_mismatch, "JSON cannot represent the non-finite value of '" + cls.name() + "." + def.name + "'");
          }
          out_.write(format_double(s.f, buf));
          break;
        case AttrType::bool_type: out_.write(s.b ? "true" : "false"); break;
      }
    }
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      if (def.containment) continue;
      const Slot& s = e->slots()[i];
      if (def.many()) {
        if (!s.many || s.many->entries.empty()) continue;
        field(def.name, first, inner);
        out_.put('[');
        bool first_item = true;
        for (const auto& entry : s.many->entries) {
          if (!first_item) out_.put(',');
          first_item = false;
          newline(inner + 1);
          path_.clear();
          append_reference_path(m_, e, i, entry.element, path_);
          string(path_);
        }
        newline(inner);
        out_.put(']');
      } else if (s.ref) {
        field(def.name, first, inner);
        path_.clear();
        append_reference_path(m_, e, i, s.ref, path_);
        string(path_);
      }
    }
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      if (!def.containment) continue;
      const Slot& s = e->slots()[i];
      if (def.many()) {
        if (!s.many || s.many->entries.empty()) continue;
        field(def.name, first, inner);
        out_.put('[');
        bool first_item = true;
        for (const auto& entry : s.many->entries) {
          if (!first_item) out_.put(',');
          first_item = false;
          newline(inner + 1);
          element(entry.element, true, inner + 1);
        }
        newline(inner);
        out_.put(']');
      } else if (s.ref) {
        field(def.name, first, inner);
        element(s.ref, false, inner);
      }
    }
    newline(depth);
    out_.put('}');
  }

  const Model& m_;
  OutStream& out_;
  bool pretty_;
  std::string path_;
};

}  // namespace

void write_json(const Model& m, OutStream& out, bool pretty) { JsonWriter(m, out, pretty).run(); }

}  // namespace kmf::detail
