#include <algorithm>
#include <bit>
#include <functional>

#include "kmf/dispatch.hpp"
#include "kmf/error.hpp"

namespace kmf {

std::uint64_t NameIndex::hash(std::string_view key) noexcept {
  // FNV-1a: stable across platforms, so tables are reproducible byte for byte.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

NameIndex::NameIndex(const std::vector<std::string_view>& keys) {
  if (keys.empty()) return;
  const std::size_t size = std::bit_ceil(keys.size() * 2);
  buckets_.assign(size, -1);
  hashes_.reserve(keys.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const std::uint64_t h = hash(keys[k]);
    hashes_.push_back(h);
    std::size_t i = h & (size - 1);
    while (buckets_[i] >= 0) i = (i + 1) & (size - 1);
    buckets_[i] = static_cast<std::int32_t>(k);
  }
}

SlotIndex ClassLayout::find_slot(std::string_view name) const noexcept {
  const int i = names_.find(name, [this](std::size_t k) -> std::string_view { return slots_[k].name; });
  return i < 0 ? kNoSlot : static_cast<SlotIndex>(i);
}

const ClassLayout* DispatchTable::try_find_class(std::string_view name) const noexcept {
  const int i = names_.find(name, [this](std::size_t k) -> std::string_view { return classes_[k].name(); });
  return i < 0 ? nullptr : &classes_[static_cast<std::size_t>(i)];
}

const ClassLayout& DispatchTable::find_class(std::string_view name) const {
  if (const ClassLayout* c = try_find_class(name)) return *c;
  throw Error(ErrorKind::unknown_class,
              "unknown class '" + std::string(name) + "' in metamodel '" + name_ + "'");
}

bool operator==(const DispatchTable& a, const DispatchTable& b) {
  return a.name_ == b.name_ && a.classes_ == b.classes_ && a.names_ == b.names_;
}

std::string DispatchTable::canonical_dump() const {
  std::string out = "metamodel " + name_ + "\n";
  for (const ClassLayout& c : classes_) {
    out += "class " + std::to_string(c.id()) + " " + c.name();
    if (c.super() != kNoClass) out += " super=" + std::to_string(c.super());
    if (c.has_id()) out += " id_slot=" + std::to_string(c.id_slot());
    out += " capacity=" + std::to_string(c.capacity()) + "\n";
    for (std::size_t i = 0; i < c.slot_count(); ++i) {
      const SlotDef& s = c.slot(static_cast<SlotIndex>(i));
      out += "  " + std::to_string(i) + " " + s.name;
      if (s.is_attribute()) {
        out += " attr " + std::string(to_string(s.type));
        if (s.is_id) out += " id";
      } else {
        out += " ref " + std::to_string(s.target) + " [" + std::to_string(s.lower) + "..";
        out += s.upper == kUnbounded ? std::string("*") : std::to_string(s.upper);
        out += "]";
        if (s.containment) out += " containment";
        if (s.opposite != kNoSlot) out += " opposite=" + std::to_string(s.opposite);
      }
      out += " from=" + std::to_string(s.declared_in) + "\n";
    }
  }
  return out;
}

std::shared_ptr<const DispatchTable> compile_dispatch(const Metamodel& m) {
  const ValidationReport report = validate_metamodel(m);
  if (!report.ok()) {
    std::string msg = "metamodel '" + m.name + "' is not compilable:";
    for (const Diagnostic& d : report.errors) {
      msg += "\n  " + std::to_string(d.loc.line) + ":" + std::to_string(d.loc.column) + ": " + d.message;
    }
    throw Error(ErrorKind::invalid_metamodel, msg);
  }
  if (m.classes.size() >= kNoClass) throw Error(ErrorKind::invalid_metamodel, "too many classes");

  std::shared_ptr<DispatchTable> table(new DispatchTable());
  table->name_ = m.name;
  const std::size_t n = m.classes.size();
  table->classes_.resize(n);

  auto class_id = [&](const std::string& name) {
    for (std::size_t i = 0; i < n; ++i) {
      if (m.classes[i].name == name) return static_cast<ClassId>(i);
    }
    return kNoClass;
  };

  std::vector<bool> done(n, false);
  std::function<void(ClassId)> build = [&](ClassId id) {
    if (done[id]) return;
    const ClassDef& def = m.classes[id];
    ClassLayout& c = table->classes_[id];
    c.id_ = id;
    c.name_ = def.name;
    c.ancestors_.assign(n, false);
    c.ancestors_[id] = true;
    if (def.super) {
      c.super_ = class_id(*def.super);
      build(c.super_);
      const ClassLayout& parent = table->classes_[c.super_];
      c.slots_ = parent.slots_;
      for (std::size_t k = 0; k < n; ++k) {
        if (parent.ancestors_[k]) c.ancestors_[k] = true;
      }
    }
    for (const AttributeDef& a : def.attributes) {
      SlotDef s;
      s.name = a.name;
      s.kind = SlotKind::attribute;
      s.type = a.type;
      s.is_id = a.is_id;
      s.declared_in = id;
      c.slots_.push_back(std::move(s));
    }
    for (const ReferenceDef& r : def.references) {
      SlotDef s;
      s.name = r.name;
      s.kind = SlotKind::reference;
      s.target = class_id(r.target);
      s.lower = r.lower;
      s.upper = r.upper;
      s.containment = r.containment;
      s.declared_in = id;
      c.slots_.push_back(std::move(s));
    }
    if (c.slots_.size() >= kNoSlot) throw Error(ErrorKind::invalid_metamodel, "too many features in " + def.name);
    done[id] = true;
  };
  for (std::size_t i = 0; i < n; ++i) build(static_cast<ClassId>(i));

  for (std::size_t i = 0; i < n; ++i) {
    ClassLayout& c = table->classes_[i];
    std::vector<std::string_view> keys;
    for (std::size_t k = 0; k < c.slots_.size(); ++k) {
      SlotDef& s = c.slots_[k];
      keys.push_back(s.name);
      const auto idx = static_cast<SlotIndex>(k);
      if (s.is_attribute()) {
        c.attribute_slots_.push_back(idx);
        if (s.is_id) c.id_slot_ = idx;
      } else {
        c.reference_slots_.push_back(idx);
      }
    }
    c.names_ = NameIndex(keys);
    c.capacity_ = c.slots_.size();
  }
  // Opposites resolve against the target layout; the index is valid for every
  // subclass of the target because layouts extend their parents.
  for (std::size_t i = 0; i < n; ++i) {
    const ClassDef& def = m.classes[i];
    ClassLayout& c = table->classes_[i];
    for (const ReferenceDef& r : def.references) {
      if (!r.opposite) continue;
      SlotDef& s = c.slots_[c.find_slot(r.name)];
      s.opposite = table->classes_[s.target].find_slot(*r.opposite);
    }
  }
  // Inherited slot copies must see the resolved opposites too.
  for (std::size_t i = 0; i < n; ++i) {
    ClassLayout& c = table->classes_[i];
    for (SlotDef& s : c.slots_) {
      if (s.declared_in != c.id_) s.opposite = table->classes_[s.declared_in].slots_[c.find_slot(s.name)].opposite;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (table->classes_[k].ancestors_[i]) {
        table->classes_[i].capacity_ = std::max(table->classes_[i].capacity_, table->classes_[k].slots_.size());
      }
    }
  }
  std::vector<std::string_view> class_keys;
  for (const ClassLayout& c : table->classes_) class_keys.push_back(c.name_);
  table->names_ = NameIndex(class_keys);
  return table;
}

}  // namespace kmf
