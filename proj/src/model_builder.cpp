#include "model_builder.hpp"

#include <algorithm>
#include <charconv>

#include "kmf/error.hpp"
#include "kmf/query.hpp"

namespace kmf::detail {

ModelBuilder::ModelBuilder(std::shared_ptr<const DispatchTable> table, const SourcePos& pos)
    : table_(table), pos_(pos), model_(std::move(table)) {
  rel_buf_.reserve(64);
  key_buf_.reserve(64);
}

void ModelBuilder::fail(ErrorKind kind, const std::string& detail) const {
  throw LoadError(kind, pos_.offset, pos_.line, detail);
}

void ModelBuilder::check_metamodel(std::string_view name) const {
  if (name != table_->metamodel_name()) {
    fail(ErrorKind::table_mismatch, "model declares metamodel '" + std::string(name) + "', expected '" + table_->metamodel_name() + "'");
  }
}

ModelBuilder::Frame& ModelBuilder::push(const ClassLayout& cls, SlotIndex slot) {
  if (depth_ == frames_.size()) frames_.emplace_back();
  Frame& f = frames_[depth_++];
  f.cls = &cls;
  f.e = nullptr;
  f.slot = slot;
  f.has_key = false;
  f.key = 0;
  f.values.assign(cls.slot_count(), Slot{});
  f.set.assign(cls.slot_count(), 0);
  return f;
}

void ModelBuilder::begin_root(std::string_view class_name) {
  if (root_seen_) fail(ErrorKind::syntax, "more than one root element");
  const ClassLayout* cls = table_->try_find_class(class_name);
  if (!cls) fail(ErrorKind::unknown_class, "unknown class '" + std::string(class_name) + "'");
  root_seen_ = true;
  push(*cls, kNoSlot);
}

void ModelBuilder::begin_child(SlotIndex slot, std::string_view class_name) {
  materialize();
  const ClassLayout& parent = current_class();
  const SlotDef& def = parent.slot(slot);
  if (!def.is_reference() || !def.containment) {
    fail(ErrorKind::unknown_feature, "'" + parent.name() + "." + def.name + "' is not a containment relationship");
  }
  const ClassLayout* cls = &table_->layout(def.target);
  if (!class_name.empty()) {
    cls = table_->try_find_class(class_name);
    if (!cls) fail(ErrorKind::unknown_class, "unknown class '" + std::string(class_name) + "'");
    if (!cls->conforms_to(def.target)) {
      fail(ErrorKind::type_mismatch, "'" + cls->name() + "' does not conform to the target of '" + parent.name() + "." + def.name + "'");
    }
  }
  push(*cls, slot);
}

void ModelBuilder::end() {
  materialize();
  --depth_;
}

SlotIndex ModelBuilder::feature(std::string_view name) const {
  const ClassLayout& cls = frames_[depth_ - 1].cls[0];
  const SlotIndex slot = cls.find_slot(name);
  if (slot == kNoSlot) fail(ErrorKind::unknown_feature, "class '" + cls.name() + "' has no feature '" + std::string(name) + "'");
  return slot;
}

void ModelBuilder::set_key(std::string_view text) {
  Frame& f = top();
  if (f.e) fail(ErrorKind::syntax, "key must precede references and contained elements");
  std::uint32_t v = 0;
  auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) fail(ErrorKind::syntax, "invalid key '" + std::string(text) + "'");
  f.has_key = true;
  f.key = v;
}

void ModelBuilder::store_value(SlotIndex slot, Slot value) {
  Frame& f = top();
  const SlotDef& def = f.cls->slot(slot);
  if (!def.is_attribute()) fail(ErrorKind::type_mismatch, "'" + f.cls->name() + "." + def.name + "' is not an attribute");
  if (f.set[slot]) fail(ErrorKind::syntax, "attribute '" + def.name + "' given twice");
  f.set[slot] = 1;
  if (f.e) {
    if (def.is_id) fail(ErrorKind::syntax, "id attribute '" + def.name + "' must precede references and contained elements");
    f.e->slots()[slot] = value;
  } else {
    f.values[slot] = value;
  }
}

void ModelBuilder::attribute_string(SlotIndex slot, std::string_view text) {
  const SlotDef& def = current_class().slot(slot);
  if (def.is_attribute() && def.type != AttrType::string_type) {
    fail(ErrorKind::type_mismatch, "'" + def.name + "' expects " + std::string(to_string(def.type)) + ", got a string");
  }
  Slot s{};
  s.str = model_.pool().intern(text).get();
  store_value(slot, s);
}

void ModelBuilder::attribute_bool(SlotIndex slot, bool value) {
  const SlotDef& def = current_class().slot(slot);
  if (def.is_attribute() && def.type != AttrType::bool_type) {
    fail(ErrorKind::type_mismatch, "'" + def.name + "' expects " + std::string(to_string(def.type)) + ", got a bool");
  }
  Slot s{};
  s.b = value;
  store_value(slot, s);
}

void ModelBuilder::attribute_number(SlotIndex slot, std::string_view text) {
  const SlotDef& def = current_class().slot(slot);
  if (def.is_attribute() && def.type != AttrType::int_type && def.type != AttrType::float_type) {
    fail(ErrorKind::type_mismatch, "'" + def.name + "' expects " + std::string(to_string(def.type)) + ", got a number");
  }
  attribute_text(slot, text);
}

void ModelBuilder::attribute_text(SlotIndex slot, std::string_view text) {
  const SlotDef& def = current_class().slot(slot);
  if (!def.is_attribute()) fail(ErrorKind::type_mismatch, "'" + def.name + "' is not an attribute");
  Slot s{};
  const char* b = text.data();
  const char* e = b + text.size();
  bool ok = true;
  switch (def.type) {
    case AttrType::string_type: s.str = model_.pool().intern(text).get(); break;
    case AttrType::int_type: {
      auto r = std::from_chars(b, e, s.i);
      ok = r.ec == std::errc() && r.ptr == e;
      break;
    }
    case AttrType::float_type: {
      auto r = std::from_chars(b, e, s.f);
      ok = r.ec == std::errc() && r.ptr == e;
      break;
    }
    case AttrType::bool_type:
      if (text == "true") {
        s.b = true;
      } else if (text != "false") {
        ok = false;
      }
      break;
  }
  if (!ok) fail(ErrorKind::type_mismatch, "'" + std::string(text) + "' is not a valid " + std::string(to_string(def.type)) + " for '" + def.name + "'");
  store_value(slot, s);
}

const InternedString* ModelBuilder::intern_key(std::string_view text) {
  return key_ptr(model_.pool().intern(text));
}

Element* ModelBuilder::adopt(Element* p, const ClassLayout& cls) {
  p->cls = &cls;
  p->flags.fetch_and(static_cast<std::uint8_t>(~element_flags::unborn), std::memory_order_relaxed);
  --unborn_;
  return p;
}

Element* ModelBuilder::materialize() {
  Frame& f = top();
  if (f.e) return f.e;
  const ClassLayout& cls = *f.cls;
  Element* e = nullptr;
  if (depth_ == 1) {
    e = ModelAccess::new_element(model_, cls, cls.slot_count());
    retain(e);
    ModelAccess::root(model_) = e;
  } else {
    Element* parent = frames_[depth_ - 2].e;
    const SlotDef& def = parent->cls->slot(f.slot);
    Slot& ps = parent->slots()[f.slot];
    if (def.many()) {
      const InternedString* key;
      std::uint32_t auto_key = 0;
      if (cls.has_id()) {
        const Slot& id = f.values[cls.id_slot()];
        if (cls.slot(cls.id_slot()).type == AttrType::string_type) {
          key = key_ptr(Atom(id.str));
        } else {
          char buf[24];
          auto r = std::to_chars(buf, buf + sizeof buf, id.i);
          key = intern_key(std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)));
        }
      } else {
        auto_key = f.has_key ? f.key : (ps.many ? ps.many->next_auto : 0);
        for (;; ++auto_key) {
          char buf[24];
          auto r = std::to_chars(buf, buf + sizeof buf, auto_key);
          key = intern_key(std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)));
          // An implicit key skips ids already present; an explicit one must match.
          if (f.has_key || !ps.many) break;
          Element* const* hit = ps.many->index.find(key);
          if (!hit || ((*hit)->has_flag(element_flags::unborn) && !(*hit)->cls->has_id())) break;
        }
      }
      if (!ps.many) ps.many = RelationshipStore::create();
      RelationshipStore& store = *ps.many;
      if (def.upper != kUnbounded && store.entries.size() >= def.upper) {
        fail(ErrorKind::multiplicity, "'" + parent->cls->name() + "." + def.name + "' holds more than " + std::to_string(def.upper) + " elements");
      }
      if (Element* const* hit = store.index.find(key)) {
        if (!(*hit)->has_flag(element_flags::unborn)) {
          fail(ErrorKind::duplicate_id, "duplicate key '" + std::string(key->view()) + "' in '" + parent->cls->name() + "." + def.name + "'");
        }
        e = adopt(*hit, cls);
      } else {
        e = ModelAccess::new_element(model_, cls, cls.slot_count());
        store.index.insert(key, e);
      }
      store.entries.push_back({e, key});
      if (!cls.has_id()) {
        e->auto_key = auto_key;
        store.next_auto = std::max(store.next_auto, auto_key + 1);
      }
      retain(e);
    } else {
      if (Element* existing = ps.ref) {
        if (!existing->has_flag(element_flags::unborn)) {
          fail(ErrorKind::multiplicity, "'" + parent->cls->name() + "." + def.name + "' given more than one element");
        }
        const InternedString* expected = *single_keys_.find(existing);
        char buf[24];
        const std::string_view got = cls.has_id() ? key_text_of(cls, f.values, buf) : std::string_view("0");
        if (got != expected->view()) {
          fail(ErrorKind::unresolved_reference, "unresolved reference to '" + placeholder_path(existing) + "'");
        }
        e = adopt(existing, cls);  // already retained by the slot
      } else {
        e = ModelAccess::new_element(model_, cls, cls.slot_count());
        ps.ref = e;
        retain(e);
      }
    }
    e->container = parent;
    e->container_slot = f.slot;
  }
  for (SlotIndex i : cls.attribute_slots()) e->slots()[i] = f.values[i];
  f.e = e;
  return e;
}

std::string_view ModelBuilder::key_text_of(const ClassLayout& cls, const std::vector<Slot>& values, char (&buf)[24]) {
  const Slot& id = values[cls.id_slot()];
  if (cls.slot(cls.id_slot()).type == AttrType::string_type) return Atom(id.str).view();
  auto r = std::to_chars(buf, buf + sizeof buf, id.i);
  return {buf, static_cast<std::size_t>(r.ptr - buf)};
}

Element* ModelBuilder::placeholder(Element* parent, SlotIndex slot, const InternedString* key) {
  const SlotDef& def = parent->cls->slot(slot);
  const ClassLayout& cls = table_->layout(def.target);
  Element* e = ModelAccess::new_element(model_, cls, cls.capacity());
  e->flags.store(element_flags::unborn, std::memory_order_relaxed);
  e->container = parent;
  e->container_slot = slot;
  Slot& ps = parent->slots()[slot];
  if (def.many()) {
    if (!ps.many) ps.many = RelationshipStore::create();
    ps.many->index.insert(key, e);
  } else {
    ps.ref = e;
    retain(e);
    single_keys_.insert(e, key);
  }
  ++unborn_;
  return e;
}

namespace {

// Reads one escaped path component up to `stop`; false on malformed input.
bool read_component(std::string_view path, std::size_t& i, char stop, std::string& out) {
  out.clear();
  while (i < path.size() && path[i] != stop) {
    char c = path[i];
    if (c == '\\') {
      if (++i == path.size()) return false;
      c = path[i];
    } else if (c == '/' || c == '[' || c == ']') {
      return false;
    }
    out += c;
    ++i;
  }
  if (i == path.size()) return false;
  ++i;
  return true;
}

}  // namespace

Element* ModelBuilder::resolve(std::string_view path) {
  Element* cur = ModelAccess::root(model_);
  std::size_t i = 0;
  while (i < path.size()) {
    if (!read_component(path, i, '[', rel_buf_) || rel_buf_.empty() || !read_component(path, i, ']', key_buf_)) {
      fail(ErrorKind::syntax, "malformed reference path '" + std::string(path) + "'");
    }
    if (i < path.size()) {
      if (path[i] != '/' || i + 1 == path.size()) fail(ErrorKind::syntax, "malformed reference path '" + std::string(path) + "'");
      ++i;
    }
    const SlotIndex slot = cur->cls->find_slot(rel_buf_);
    if (slot == kNoSlot || !cur->cls->slot(slot).is_reference()) {
      if (cur->has_flag(element_flags::unborn)) return nullptr;
      fail(ErrorKind::unresolved_reference, "unresolved reference '" + std::string(path) + "': no relation '" + rel_buf_ + "'");
    }
    const SlotDef& def = cur->cls->slot(slot);
    if (!def.containment) return nullptr;
    const Slot& s = cur->slots()[slot];
    if (def.many()) {
      const InternedString* key = key_buf_.empty() ? &kEmptyKey : intern_key(key_buf_);
      Element* const* hit = s.many ? s.many->index.find(key) : nullptr;
      cur = hit ? *hit : placeholder(cur, slot, key);
    } else if (Element* r = s.ref) {
      std::string_view have;
      char buf[24];
      if (r->has_flag(element_flags::unborn)) {
        have = (*single_keys_.find(r))->view();
      } else {
        have = r->cls->has_id() ? key_text(r, buf) : std::string_view("0");
      }
      if (have != key_buf_) fail(ErrorKind::unresolved_reference, "unresolved reference '" + std::string(path) + "'");
      cur = r;
    } else {
      cur = placeholder(cur, slot, intern_key(key_buf_));
    }
  }
  return cur;
}

void ModelBuilder::reference(SlotIndex slot, std::string_view path) {
  Element* holder = materialize();
  const SlotDef& def = holder->cls->slot(slot);
  if (!def.is_reference() || def.containment) {
    fail(ErrorKind::type_mismatch, "'" + holder->cls->name() + "." + def.name + "' is not a non-containment reference");
  }
  Element* target = resolve(path);
  Slot& s = holder->slots()[slot];
  if (!def.many()) {
    if (s.ref || top().set[slot]) fail(ErrorKind::syntax, "reference '" + def.name + "' given twice");
    top().set[slot] = 1;
    s.ref = target;
    if (!target) deferred_.push_back({holder, slot, 0, std::string(path)});
    return;
  }
  if (!s.many) s.many = RelationshipStore::create();
  if (def.upper != kUnbounded && s.many->entries.size() >= def.upper) {
    fail(ErrorKind::multiplicity, "'" + holder->cls->name() + "." + def.name + "' holds more than " + std::to_string(def.upper) + " elements");
  }
  if (!target) deferred_.push_back({holder, slot, s.many->entries.size(), std::string(path)});
  s.many->entries.push_back({target, nullptr});
}

std::string ModelBuilder::placeholder_path(const Element* e) const {
  std::vector<std::string> steps;
  for (const Element* cur = e; cur->container; cur = cur->container) {
    const Element* parent = cur->container;
    const SlotDef& def = parent->cls->slot(cur->container_slot);
    std::string key;
    if (def.many()) {
      parent->slots()[cur->container_slot].many->index.for_each([&](const InternedString* k, Element* v) {
        if (v == cur) key = std::string(k->view());
      });
    } else if (cur->has_flag(element_flags::unborn)) {
      key = std::string((*single_keys_.find(cur))->view());
    } else {
      char buf[24];
      key = cur->cls->has_id() ? std::string(key_text(cur, buf)) : "0";
    }
    std::string step;
    append_escaped(step, def.name);
    step += '[';
    append_escaped(step, key);
    step += ']';
    steps.push_back(std::move(step));
  }
  std::string out;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    if (!out.empty()) out += '/';
    out += *it;
  }
  return out;
}

void ModelBuilder::index_references() {
  auto& watches = ModelAccess::watches(model_);
  for (Element* e : ModelAccess::owned(model_)) {
    const ClassLayout& cls = *e->cls;
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      if (def.containment) continue;
      Slot& s = e->slots()[i];
      auto check = [&](const Element* t) {
        if (!t->cls->conforms_to(def.target)) {
          fail(ErrorKind::type_mismatch, "'" + cls.name() + "." + def.name + "' references a '" + t->cls->name() + "' element");
        }
      };
      if (!def.many()) {
        if (s.ref) check(s.ref);
        continue;
      }
      if (!s.many) continue;
      RelationshipStore& store = *s.many;
      store.index.reserve(store.entries.size());
      // Ids first, so automatic keys can step around them.
      for (auto& entry : store.entries) {
        Element* t = entry.element;
        check(t);
        if (!t->cls->has_id()) continue;
        entry.key = ModelAccess::index_key(model_, t);
        watches.push_back({t, ModelAccess::Watch{e, i}});
        if (!store.index.insert(entry.key, t)) {
          fail(ErrorKind::duplicate_id, "duplicate key '" + std::string(entry.key->view()) + "' in '" + cls.name() + "." + def.name + "'");
        }
      }
      std::uint32_t next = 0;
      for (auto& entry : store.entries) {
        if (entry.element->cls->has_id()) continue;
        do {
          char buf[24];
          auto r = std::to_chars(buf, buf + sizeof buf, next++);
          entry.key = intern_key(std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)));
        } while (!store.index.insert(entry.key, entry.element));
      }
      store.next_auto = next;
    }
  }
  std::sort(watches.begin(), watches.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
}

Model ModelBuilder::finish() {
  if (!root_seen_) fail(ErrorKind::syntax, "no root element");
  if (depth_ != 0) fail(ErrorKind::syntax, "unexpected end of input");
  if (unborn_ != 0) {
    for (const Element* e : ModelAccess::owned(model_)) {
      if (e->has_flag(element_flags::unborn)) {
        fail(ErrorKind::unresolved_reference, "unresolved reference to '" + placeholder_path(e) + "'");
      }
    }
  }
  for (const Deferred& d : deferred_) {
    ElementRef t;
    try {
      t = find_by_path(model_, d.path);
    } catch (const Error&) {
    }
    if (!t) fail(ErrorKind::unresolved_reference, "unresolved reference '" + d.path + "'");
    Slot& s = d.holder->slots()[d.slot];
    if (d.holder->cls->slot(d.slot).many()) {
      s.many->entries[d.position].element = t.get();
    } else {
      s.ref = t.get();
    }
  }
  index_references();
  return std::move(model_);
}

}  // namespace kmf::detail
