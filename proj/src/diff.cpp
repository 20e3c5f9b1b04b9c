#include <vector>

#include "kmf/error.hpp"
#include "kmf/query.hpp"
#include "model_internal.hpp"

namespace kmf {

std::string_view to_string(DiffKind k) noexcept {
  switch (k) {
    case DiffKind::missing: return "missing";
    case DiffKind::extra: return "extra";
    case DiffKind::attribute_mismatch: return "attribute-mismatch";
    case DiffKind::reference_mismatch: return "reference-mismatch";
  }
  return "?";
}

namespace {

struct Pair {
  const Element* a;
  const Element* b;
  std::string path;
};

std::string child_path(const std::string& parent, std::string_view relation, std::string_view key) {
  std::string out = parent;
  if (!out.empty()) out += '/';
  append_escaped(out, relation);
  out += '[';
  append_escaped(out, key);
  out += ']';
  return out;
}

std::string target_path(const Model& m, const Element* t) {
  try {
    return path_string_of(m, ElementRef(const_cast<Element*>(t)));
  } catch (const Error&) {
    return "<detached " + t->cls->name() + ">";
  }
}

Value slot_value(const Model& m, const Element* e, SlotIndex i) {
  return m.get_attribute(ElementRef(const_cast<Element*>(e)), i);
}

class Differ {
 public:
  Differ(const Model& a, const Model& b, DiffReport& out) : a_(a), b_(b), out_(out) {}

  void run() {
    const Element* ra = a_.root().get();
    const Element* rb = b_.root().get();
    if (!ra && !rb) return;
    if (!rb) return add("", DiffKind::missing, "root '" + ra->cls->name() + "'");
    if (!ra) return add("", DiffKind::extra, "root '" + rb->cls->name() + "'");
    stack_.push_back({ra, rb, ""});
    while (!stack_.empty()) {
      Pair p = std::move(stack_.back());
      stack_.pop_back();
      compare(p);
    }
  }

 private:
  void add(std::string path, DiffKind kind, std::string detail) {
    out_.differences.push_back({std::move(path), kind, std::move(detail)});
  }

  void compare(const Pair& p) {
    const ClassLayout& cls = *p.a->cls;
    if (p.a->cls->id() != p.b->cls->id()) {
      add(p.path, DiffKind::attribute_mismatch, "class '" + cls.name() + "' vs '" + p.b->cls->name() + "'");
      return;
    }
    for (SlotIndex i : cls.attribute_slots()) {
      Value va = slot_value(a_, p.a, i);
      Value vb = slot_value(b_, p.b, i);
      if (!(va == vb)) add(p.path, DiffKind::attribute_mismatch, cls.slot(i).name + ": " + va.display() + " vs " + vb.display());
    }
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      if (def.containment) {
        compare_children(p, i);
      } else {
        compare_refs(p, i);
      }
    }
  }

  void compare_children(const Pair& p, SlotIndex i) {
    const SlotDef& def = p.a->cls->slot(i);
    const Slot& sa = p.a->slots()[i];
    const Slot& sb = p.b->slots()[i];
    char buf[24];
    if (!def.many()) {
      if (!sa.ref && !sb.ref) return;
      if (!sb.ref) return add(p.path, DiffKind::missing, def.name + " child '" + sa.ref->cls->name() + "'");
      if (!sa.ref) return add(p.path, DiffKind::extra, def.name + " child '" + sb.ref->cls->name() + "'");
      stack_.push_back({sa.ref, sb.ref, child_path(p.path, def.name, detail::key_text(sa.ref, buf))});
      return;
    }
    const RelationshipStore* a = sa.many;
    const RelationshipStore* b = sb.many;
    if (a == b) return;  // shared store: identical contents
    std::size_t matched = 0;
    if (a) {
      for (const auto& entry : a->entries) {
        const std::string_view key = detail::key_view(entry.key);
        const Element* other = lookup(b_, b, key);
        if (!other) {
          add(child_path(p.path, def.name, key), DiffKind::missing, "'" + entry.element->cls->name() + "'");
          continue;
        }
        ++matched;
        if (other == entry.element && entry.element->read_only()) continue;  // same frozen subtree
        stack_.push_back({entry.element, other, child_path(p.path, def.name, key)});
      }
    }
    if (b && matched != b->entries.size()) {
      for (const auto& entry : b->entries) {
        const std::string_view key = detail::key_view(entry.key);
        if (!lookup(a_, a, key)) add(child_path(p.path, def.name, key), DiffKind::extra, "'" + entry.element->cls->name() + "'");
      }
    }
  }

  static const Element* lookup(const Model& m, const RelationshipStore* s, std::string_view key) {
    if (!s) return nullptr;
    const InternedString* k = &detail::kEmptyKey;
    if (!key.empty()) {
      auto atom = m.pool().find(key);
      if (!atom) return nullptr;
      k = atom->get();
    }
    Element* const* hit = s->index.find(k);
    return hit ? *hit : nullptr;
  }

  void compare_refs(const Pair& p, SlotIndex i) {
    const SlotDef& def = p.a->cls->slot(i);
    auto ra = m_refs(a_, p.a, i);
    auto rb = m_refs(b_, p.b, i);
    if (ra == rb) return;
    add(p.path, DiffKind::reference_mismatch, def.name + ": [" + join(ra) + "] vs [" + join(rb) + "]");
  }

  static std::vector<std::string> m_refs(const Model& m, const Element* e, SlotIndex i) {
    std::vector<std::string> out;
    const Slot& s = e->slots()[i];
    if (e->cls->slot(i).many()) {
      if (s.many) {
        for (const auto& entry : s.many->entries) out.push_back(target_path(m, entry.element));
      }
    } else if (s.ref) {
      out.push_back(target_path(m, s.ref));
    }
    return out;
  }

  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += ' ';
      out += s;
    }
    return out;
  }

  const Model& a_;
  const Model& b_;
  DiffReport& out_;
  std::vector<Pair> stack_;
};

}  // namespace

DiffReport deep_equal(const Model& a, const Model& b) {
  if (&a.table() != &b.table() && !(a.table() == b.table())) {
    throw Error(ErrorKind::table_mismatch, "models use different dispatch tables ('" + a.table().metamodel_name() +
                                               "' vs '" + b.table().metamodel_name() + "')");
  }
  DiffReport report;
  Differ(a, b, report).run();
  report.equal = report.differences.empty();
  return report;
}

}  // namespace kmf
