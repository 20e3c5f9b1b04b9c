#include <algorithm>
#include <charconv>
#include <cstring>
#include <new>

#include "kmf/error.hpp"
#include "model_internal.hpp"

namespace kmf {

// ---------------------------------------------------------------------------
// Storage primitives

namespace detail {

const InternedString kEmptyKey{0, 0, {'\0'}};

std::uint64_t& scan_counter() noexcept {
  thread_local std::uint64_t count = 0;
  return count;
}

Element* allocate_element(const ClassLayout& cls, std::size_t capacity) {
  const std::size_t bytes = sizeof(Element) + capacity * sizeof(Slot);
  void* mem = alloc::model_allocate(bytes);
  std::memset(mem, 0, bytes);
  auto* e = new (mem) Element{};
  e->cls = &cls;
  e->container_slot = kNoSlot;
  e->refs.store(1, std::memory_order_relaxed);
  return e;
}

namespace {

void destroy_one(Element* e, std::vector<Element*>& pending) noexcept {
  const ClassLayout& cls = *e->cls;
  for (SlotIndex i : cls.reference_slots()) {
    const SlotDef& def = cls.slot(i);
    Slot& s = e->slots()[i];
    if (def.many()) {
      RelationshipStore* store = s.many;
      if (!store) continue;
      if (store->refs.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        if (def.containment) {
          for (const auto& entry : store->entries) pending.push_back(entry.element);
        }
        store->destroy();
      }
    } else if (def.containment && s.ref) {
      pending.push_back(s.ref);
    }
  }
  e->~Element();
  alloc::model_deallocate(e);
}

}  // namespace

void release(Element* e) noexcept {
  if (e->refs.fetch_sub(1, std::memory_order_acq_rel) != 1) return;
  std::vector<Element*> pending;
  destroy_one(e, pending);
  while (!pending.empty()) {
    Element* next = pending.back();
    pending.pop_back();
    if (next->refs.fetch_sub(1, std::memory_order_acq_rel) == 1) destroy_one(next, pending);
  }
}

void release_store(RelationshipStore* s, bool containment) noexcept {
  if (s->refs.fetch_sub(1, std::memory_order_acq_rel) != 1) return;
  if (containment) {
    for (const auto& entry : s->entries) release(entry.element);
  }
  s->destroy();
}

Element* ModelAccess::new_element(Model& m, const ClassLayout& cls, std::size_t capacity) {
  // Grow ahead of the allocation so push_back cannot throw and leak `e`.
  if (m.owned_.size() == m.owned_.capacity()) m.owned_.reserve(std::max<std::size_t>(16, m.owned_.size() * 2));
  Element* e = allocate_element(cls, capacity);
  m.owned_.push_back(e);
  return e;
}

bool ModelAccess::container(const Model& m, const Element* e, Element*& parent, SlotIndex& slot) noexcept {
  if (!m.shared_parents_.empty() && e->has_flag(element_flags::shared)) {
    auto it = std::lower_bound(m.shared_parents_.begin(), m.shared_parents_.end(), e,
                               [](const auto& p, const Element* k) { return p.first < k; });
    if (it != m.shared_parents_.end() && it->first == e) {
      parent = it->second.parent.get();
      slot = it->second.slot;
      return parent != nullptr;
    }
  }
  parent = e->container;
  slot = e->container_slot;
  return parent != nullptr;
}

const InternedString* ModelAccess::index_key(Model& m, const Element* e) {
  const ClassLayout& cls = *e->cls;
  if (cls.has_id() && cls.slot(cls.id_slot()).type == AttrType::string_type) {
    return key_ptr(Atom(e->slots()[cls.id_slot()].str));
  }
  char buf[24];
  return key_ptr(m.pool().intern(key_text(e, buf)));
}

RelationshipStore* ModelAccess::writable_store(Element* e, SlotIndex slot) {
  Slot& s = e->slots()[slot];
  if (!s.many) {
    s.many = RelationshipStore::create();
    return s.many;
  }
  if (s.many->refs.load(std::memory_order_acquire) == 1) return s.many;
  RelationshipStore* copy = s.many->copy();
  if (e->cls->slot(slot).containment) {
    for (const auto& entry : copy->entries) retain(entry.element);
  }
  release_store(s.many, e->cls->slot(slot).containment);
  s.many = copy;
  return copy;
}

void ModelAccess::add_watch(Model& m, Element* target, Element* holder, SlotIndex slot) {
  auto& w = m.watches_;
  auto it = std::upper_bound(w.begin(), w.end(), target, [](const Element* k, const auto& p) { return k < p.first; });
  w.insert(it, {target, Model::Watch{holder, slot}});
}

void ModelAccess::remove_watch(Model& m, Element* target, Element* holder, SlotIndex slot) {
  auto& w = m.watches_;
  auto range = std::equal_range(w.begin(), w.end(), std::pair<Element*, Model::Watch>{target, {}},
                                [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto it = range.first; it != range.second; ++it) {
    if (it->second.holder == holder && it->second.slot == slot) {
      w.erase(it);
      return;
    }
  }
}

}  // namespace detail

RelationshipStore* RelationshipStore::create() {
  return new (alloc::model_allocate(sizeof(RelationshipStore))) RelationshipStore();
}

RelationshipStore* RelationshipStore::copy() const {
  RelationshipStore* s = create();
  s->next_auto = next_auto;
  s->entries = entries;
  s->index = index;
  return s;
}

void RelationshipStore::destroy() noexcept {
  this->~RelationshipStore();
  alloc::model_deallocate(this);
}

// ---------------------------------------------------------------------------
// Value

std::string Value::display() const {
  switch (type()) {
    case AttrType::string_type: {
      std::string out = "\"";
      for (char c : as_string()) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      return out + "\"";
    }
    case AttrType::int_type: return std::to_string(as_int());
    case AttrType::float_type: {
      char buf[32];
      auto r = std::to_chars(buf, buf + sizeof buf, as_float());
      return std::string(buf, r.ptr);
    }
    case AttrType::bool_type: return as_bool() ? "true" : "false";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Model

using detail::ModelAccess;

namespace {

std::string describe(const Element* e) { return "'" + e->cls->name() + "' element"; }

void check_mutable(const Element* e) {
  if (e->read_only()) throw Error(ErrorKind::read_only, "read-only violation on " + describe(e));
}

std::string feature_name(const Element* e, SlotIndex slot) { return e->cls->name() + "." + e->cls->slot(slot).name; }

Element* parent_of(const Model& m, const Element* e) {
  Element* parent = nullptr;
  SlotIndex slot = kNoSlot;
  ModelAccess::container(m, e, parent, slot);
  return parent;
}

// Non-containment many-slot bookkeeping: key selection, duplicate detection,
// id watches.

// First automatic key of `s` not taken by an id-keyed entry.
const InternedString* free_auto_key(Model& m, const RelationshipStore* s, std::uint32_t& next) {
  next = s ? s->next_auto : 0;
  for (;; ++next) {
    char buf[24];
    auto r = std::to_chars(buf, buf + sizeof buf, next);
    const InternedString* key = detail::key_ptr(m.pool().intern(std::string_view(buf, static_cast<std::size_t>(r.ptr - buf))));
    if (!s || !s->index.find(key)) return key;
  }
}

const InternedString* plain_key(Model& m, const Element* holder, SlotIndex slot, const Element* target,
                                std::uint32_t* auto_key = nullptr) {
  if (target->cls->has_id()) return ModelAccess::index_key(m, target);
  std::uint32_t next;
  const InternedString* key = free_auto_key(m, holder->slots()[slot].many, next);
  if (auto_key) *auto_key = next;
  return key;
}

bool store_holds(const RelationshipStore* s, const Element* target) {
  if (!s) return false;
  return std::any_of(s->entries.begin(), s->entries.end(), [&](const auto& en) { return en.element == target; });
}

void check_plain_insert(Model& m, Element* holder, SlotIndex slot, const Element* target) {
  check_mutable(holder);
  const SlotDef& def = holder->cls->slot(slot);
  const RelationshipStore* s = holder->slots()[slot].many;
  const std::size_t size = s ? s->entries.size() : 0;
  if (def.upper != kUnbounded && size >= def.upper) {
    throw Error(ErrorKind::multiplicity, feature_name(holder, slot) + " is full");
  }
  if (store_holds(s, target)) {
    throw Error(ErrorKind::duplicate_id, feature_name(holder, slot) + " already holds this " + describe(target));
  }
  if (s && target->cls->has_id() && s->index.find(plain_key(m, holder, slot, target))) {
    throw Error(ErrorKind::duplicate_id, "duplicate key in " + feature_name(holder, slot));
  }
}

void plain_insert(Model& m, Element* holder, SlotIndex slot, Element* target) {
  std::uint32_t auto_key = 0;
  const InternedString* key = plain_key(m, holder, slot, target, &auto_key);
  RelationshipStore* s = ModelAccess::writable_store(holder, slot);
  s->entries.push_back({target, key});
  s->index.insert(key, target);
  if (target->cls->has_id()) {
    ModelAccess::add_watch(m, target, holder, slot);
  } else {
    s->next_auto = auto_key + 1;
  }
}

void plain_remove(Model& m, Element* holder, SlotIndex slot, Element* target) {
  const RelationshipStore* current = holder->slots()[slot].many;
  if (!store_holds(current, target)) return;
  RelationshipStore* s = ModelAccess::writable_store(holder, slot);
  auto it = std::find_if(s->entries.begin(), s->entries.end(), [&](const auto& en) { return en.element == target; });
  s->index.erase(it->key);
  s->entries.erase(it);
  if (target->cls->has_id()) ModelAccess::remove_watch(m, target, holder, slot);
}

}  // namespace

Model::Model(std::shared_ptr<const DispatchTable> table, std::shared_ptr<InternPool> pool)
    : table_(std::move(table)), pool_(pool ? std::move(pool) : std::make_shared<InternPool>()) {}

Model::~Model() { release_all(); }

void Model::release_all() noexcept {
  if (root_) detail::release(root_);
  root_ = nullptr;
  for (Element* e : owned_) detail::release(e);
  owned_.clear();
  shared_parents_.clear();
  watches_.clear();
  frozen_edges_.clear();
}

Model::Model(Model&& other) noexcept
    : table_(std::move(other.table_)),
      pool_(std::move(other.pool_)),
      root_(std::exchange(other.root_, nullptr)),
      owned_(std::move(other.owned_)),
      shared_parents_(std::move(other.shared_parents_)),
      watches_(std::move(other.watches_)),
      frozen_edges_(std::move(other.frozen_edges_)) {
  other.owned_.clear();
}

Model& Model::operator=(Model&& other) noexcept {
  if (this == &other) return *this;
  release_all();
  table_ = std::move(other.table_);
  pool_ = std::move(other.pool_);
  root_ = std::exchange(other.root_, nullptr);
  owned_ = std::move(other.owned_);
  shared_parents_ = std::move(other.shared_parents_);
  watches_ = std::move(other.watches_);
  frozen_edges_ = std::move(other.frozen_edges_);
  other.owned_.clear();
  return *this;
}

Model create_model(std::shared_ptr<const DispatchTable> table) { return Model(std::move(table)); }

void Model::set_root(ElementRef ref) {
  Element* e = ref.get();
  if (e && parent_of(*this, e)) {
    throw Error(ErrorKind::second_container, "a contained " + describe(e) + " cannot become the root");
  }
  if (e) detail::retain(e);
  if (root_) detail::release(root_);
  root_ = e;
}

ElementRef Model::create_element(std::string_view class_name) { return create_element(table_->find_class(class_name)); }

ElementRef Model::create_element(const ClassLayout& cls) {
  return ElementRef(ModelAccess::new_element(*this, cls, cls.slot_count()));
}

std::size_t Model::element_count() const {
  if (!root_) return 0;
  std::size_t count = 0;
  std::vector<const Element*> stack{root_};
  while (!stack.empty()) {
    const Element* e = stack.back();
    stack.pop_back();
    ++count;
    const ClassLayout& cls = *e->cls;
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      if (!def.containment) continue;
      const Slot& s = e->slots()[i];
      if (def.many()) {
        if (s.many) {
          for (const auto& en : s.many->entries) stack.push_back(en.element);
        }
      } else if (s.ref) {
        stack.push_back(s.ref);
      }
    }
  }
  return count;
}

SlotIndex Model::resolve(const Element* e, std::string_view feature) const {
  const SlotIndex slot = e->cls->find_slot(feature);
  if (slot == kNoSlot) {
    throw Error(ErrorKind::unknown_feature, "class '" + e->cls->name() + "' has no feature '" + std::string(feature) + "'");
  }
  return slot;
}

const SlotDef& Model::attribute_slot(const Element* e, SlotIndex slot) const {
  if (slot >= e->cls->slot_count() || !e->cls->slot(slot).is_attribute()) {
    throw Error(ErrorKind::unknown_feature, "no attribute slot " + std::to_string(slot) + " in '" + e->cls->name() + "'");
  }
  return e->cls->slot(slot);
}

const SlotDef& Model::reference_slot(const Element* e, SlotIndex slot) const {
  if (slot >= e->cls->slot_count() || !e->cls->slot(slot).is_reference()) {
    throw Error(ErrorKind::unknown_feature, "no reference slot " + std::to_string(slot) + " in '" + e->cls->name() + "'");
  }
  return e->cls->slot(slot);
}

// --- attributes -------------------------------------------------------------

void Model::set_attribute(ElementRef e, std::string_view feature, const Value& v) {
  check_mutable(e.get());
  set_attribute(e, resolve(e.get(), feature), v);
}

void Model::set_attribute(ElementRef ref, SlotIndex slot, const Value& v) {
  Element* e = ref.get();
  check_mutable(e);
  const SlotDef& def = attribute_slot(e, slot);
  if (v.type() != def.type) {
    throw Error(ErrorKind::type_mismatch, feature_name(e, slot) + " expects " + std::string(to_string(def.type)) +
                                              ", got " + std::string(to_string(v.type())));
  }
  Slot next{};
  switch (def.type) {
    case AttrType::string_type: next.str = pool_->intern(v.as_string()).get(); break;
    case AttrType::int_type: next.i = v.as_int(); break;
    case AttrType::float_type: next.f = v.as_float(); break;
    case AttrType::bool_type: next.b = v.as_bool(); break;
  }
  if (!def.is_id) {
    e->slots()[slot] = next;
    return;
  }

  // Id change: every relationship indexing this element by id must accept
  // the new key before anything is modified.
  const InternedString* old_key = ModelAccess::index_key(*this, e);
  const Slot saved = e->slots()[slot];
  e->slots()[slot] = next;
  const InternedString* new_key = ModelAccess::index_key(*this, e);
  e->slots()[slot] = saved;
  if (old_key == new_key) {
    e->slots()[slot] = next;
    return;
  }

  Element* parent = nullptr;
  SlotIndex cslot = kNoSlot;
  const bool in_store = ModelAccess::container(*this, e, parent, cslot) && parent->cls->slot(cslot).many();
  if (in_store && parent->slots()[cslot].many->index.find(new_key)) {
    throw Error(ErrorKind::duplicate_id, "key '" + std::string(new_key->view()) + "' already used in " +
                                             feature_name(parent, cslot));
  }
  auto watched = std::equal_range(watches_.begin(), watches_.end(), std::pair<Element*, Watch>{e, {}},
                                  [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto it = watched.first; it != watched.second; ++it) {
    const Watch& w = it->second;
    check_mutable(w.holder);
    if (w.holder->slots()[w.slot].many->index.find(new_key)) {
      throw Error(ErrorKind::duplicate_id, "key '" + std::string(new_key->view()) + "' already used in " +
                                               feature_name(w.holder, w.slot));
    }
  }

  auto rekey = [&](Element* holder, SlotIndex s) {
    RelationshipStore* store = ModelAccess::writable_store(holder, s);
    store->index.erase(old_key);
    store->index.insert(new_key, e);
    for (auto& en : store->entries) {
      if (en.element == e) {
        en.key = new_key;
        break;
      }
    }
  };
  if (in_store) rekey(parent, cslot);
  for (auto it = watched.first; it != watched.second; ++it) rekey(it->second.holder, it->second.slot);
  e->slots()[slot] = next;
}

Value Model::get_attribute(ElementRef e, std::string_view feature) const {
  return get_attribute(e, resolve(e.get(), feature));
}

Value Model::get_attribute(ElementRef ref, SlotIndex slot) const {
  const Element* e = ref.get();
  const SlotDef& def = attribute_slot(e, slot);
  const Slot& s = e->slots()[slot];
  switch (def.type) {
    case AttrType::string_type: return Value(Atom(s.str).view());
    case AttrType::int_type: return Value(s.i);
    case AttrType::float_type: return Value(s.f);
    case AttrType::bool_type: return Value(s.b);
  }
  return Value(std::string_view());
}

Atom Model::get_atom(ElementRef ref, std::string_view feature) const {
  const Element* e = ref.get();
  const SlotIndex slot = resolve(e, feature);
  if (attribute_slot(e, slot).type != AttrType::string_type) {
    throw Error(ErrorKind::type_mismatch, feature_name(e, slot) + " is not a string attribute");
  }
  return Atom(e->slots()[slot].str);
}

// --- references -------------------------------------------------------------

namespace {

void check_attachable(const Model& m, const Element* parent, const Element* child) {
  if (child == m.root().get()) {
    throw Error(ErrorKind::containment_cycle, "the model root cannot be contained");
  }
  if (parent_of(m, child)) {
    throw Error(ErrorKind::second_container, describe(child) + " already has a container");
  }
  for (const Element* a = parent; a; a = parent_of(m, a)) {
    if (a == child) throw Error(ErrorKind::containment_cycle, "containing " + describe(child) + " would create a cycle");
  }
}

void check_conforms(const Element* holder, SlotIndex slot, const Element* target) {
  const SlotDef& def = holder->cls->slot(slot);
  if (!target->cls->conforms_to(def.target)) {
    throw Error(ErrorKind::conformance, feature_name(holder, slot) + " cannot hold " + describe(target));
  }
}

}  // namespace

void Model::add_ref(ElementRef e, std::string_view feature, ElementRef target) {
  check_mutable(e.get());
  add_ref(e, resolve(e.get(), feature), target);
}

void Model::add_ref(ElementRef ref, SlotIndex slot, ElementRef target_ref) {
  Element* e = ref.get();
  Element* t = target_ref.get();
  check_mutable(e);
  const SlotDef& def = reference_slot(e, slot);
  if (!t) throw Error(ErrorKind::conformance, "cannot add a null reference to " + feature_name(e, slot));
  if (!def.many()) {
    if (e->slots()[slot].ref) throw Error(ErrorKind::multiplicity, feature_name(e, slot) + " is already set");
    set_single_ref(ref, slot, target_ref);
    return;
  }
  if (def.containment || def.opposite != kNoSlot) check_mutable(t);
  check_conforms(e, slot, t);

  if (!def.containment) {
    check_plain_insert(*this, e, slot, t);
  } else {
    check_attachable(*this, e, t);
    const RelationshipStore* s = e->slots()[slot].many;
    const std::size_t size = s ? s->entries.size() : 0;
    if (def.upper != kUnbounded && size >= def.upper) throw Error(ErrorKind::multiplicity, feature_name(e, slot) + " is full");
  }

  // Opposite side is validated before anything changes.
  Element* displaced = nullptr;
  if (def.opposite != kNoSlot) {
    const SlotDef& opp = t->cls->slot(def.opposite);
    if (opp.many()) {
      check_plain_insert(*this, t, def.opposite, e);
    } else {
      displaced = t->slots()[def.opposite].ref;
      if (displaced == e) displaced = nullptr;
      if (displaced) check_mutable(displaced);
    }
  }

  if (def.containment) {
    std::uint32_t auto_key = 0;
    if (!t->cls->has_id()) {
      free_auto_key(*this, e->slots()[slot].many, auto_key);
      t->auto_key = auto_key;
    }
    const InternedString* key = ModelAccess::index_key(*this, t);
    const RelationshipStore* s = e->slots()[slot].many;
    if (s && s->index.find(key)) {
      throw Error(ErrorKind::duplicate_id, "key '" + std::string(key->view()) + "' already used in " + feature_name(e, slot));
    }
    RelationshipStore* store = ModelAccess::writable_store(e, slot);
    store->entries.push_back({t, key});
    store->index.insert(key, t);
    if (!t->cls->has_id()) store->next_auto = auto_key + 1;
    t->container = e;
    t->container_slot = slot;
    detail::retain(t);
  } else {
    plain_insert(*this, e, slot, t);
  }

  if (def.opposite != kNoSlot) {
    const SlotDef& opp = t->cls->slot(def.opposite);
    if (opp.many()) {
      plain_insert(*this, t, def.opposite, e);
    } else {
      if (displaced) plain_remove(*this, displaced, slot, t);
      t->slots()[def.opposite].ref = e;
    }
  }
}

void Model::remove_ref(ElementRef e, std::string_view feature, ElementRef target) {
  check_mutable(e.get());
  remove_ref(e, resolve(e.get(), feature), target);
}

void Model::remove_ref(ElementRef ref, SlotIndex slot, ElementRef target_ref) {
  Element* e = ref.get();
  Element* t = target_ref.get();
  check_mutable(e);
  const SlotDef& def = reference_slot(e, slot);
  if (!t) return;
  if (!def.many()) {
    if (e->slots()[slot].ref == t) set_single_ref(ref, slot, ElementRef());
    return;
  }
  if (!store_holds(e->slots()[slot].many, t)) return;
  if (def.containment || def.opposite != kNoSlot) check_mutable(t);

  if (def.containment) {
    RelationshipStore* store = ModelAccess::writable_store(e, slot);
    auto it = std::find_if(store->entries.begin(), store->entries.end(), [&](const auto& en) { return en.element == t; });
    store->index.erase(it->key);
    store->entries.erase(it);
    t->container = nullptr;
    t->container_slot = kNoSlot;
    detail::release(t);
  } else {
    plain_remove(*this, e, slot, t);
  }
  if (def.opposite != kNoSlot) {
    const SlotDef& opp = t->cls->slot(def.opposite);
    if (opp.many()) {
      plain_remove(*this, t, def.opposite, e);
    } else if (t->slots()[def.opposite].ref == e) {
      t->slots()[def.opposite].ref = nullptr;
    }
  }
}

void Model::set_single_ref(ElementRef e, std::string_view feature, ElementRef target) {
  check_mutable(e.get());
  set_single_ref(e, resolve(e.get(), feature), target);
}

void Model::set_single_ref(ElementRef ref, SlotIndex slot, ElementRef target_ref) {
  Element* e = ref.get();
  Element* t = target_ref.get();
  check_mutable(e);
  const SlotDef& def = reference_slot(e, slot);
  if (def.many()) throw Error(ErrorKind::multiplicity, feature_name(e, slot) + " is many-valued; use add_ref");
  Element* old = e->slots()[slot].ref;
  if (old == t) return;

  if (t) {
    if (def.containment || def.opposite != kNoSlot) check_mutable(t);
    check_conforms(e, slot, t);
    if (def.containment) check_attachable(*this, e, t);
  }
  if (old && (def.containment || def.opposite != kNoSlot)) check_mutable(old);
  Element* displaced = nullptr;
  if (t && def.opposite != kNoSlot) {
    const SlotDef& opp = t->cls->slot(def.opposite);
    if (opp.many()) {
      check_plain_insert(*this, t, def.opposite, e);
    } else {
      displaced = t->slots()[def.opposite].ref;
      if (displaced == e) displaced = nullptr;
      if (displaced) check_mutable(displaced);
    }
  }

  if (old) {
    if (def.containment) {
      e->slots()[slot].ref = nullptr;
      old->container = nullptr;
      old->container_slot = kNoSlot;
      detail::release(old);
    }
    if (def.opposite != kNoSlot) {
      const SlotDef& opp = old->cls->slot(def.opposite);
      if (opp.many()) {
        plain_remove(*this, old, def.opposite, e);
      } else if (old->slots()[def.opposite].ref == e) {
        old->slots()[def.opposite].ref = nullptr;
      }
    }
  }
  e->slots()[slot].ref = t;
  if (!t) return;
  if (def.containment) {
    t->container = e;
    t->container_slot = slot;
    if (!t->cls->has_id()) t->auto_key = 0;
    detail::retain(t);
  }
  if (def.opposite != kNoSlot) {
    const SlotDef& opp = t->cls->slot(def.opposite);
    if (opp.many()) {
      plain_insert(*this, t, def.opposite, e);
    } else {
      if (displaced) displaced->slots()[slot].ref = nullptr;
      t->slots()[def.opposite].ref = e;
    }
  }
}

std::vector<ElementRef> Model::get_refs(ElementRef e, std::string_view feature) const {
  return get_refs(e, resolve(e.get(), feature));
}

std::vector<ElementRef> Model::get_refs(ElementRef ref, SlotIndex slot) const {
  const Element* e = ref.get();
  const SlotDef& def = reference_slot(e, slot);
  std::vector<ElementRef> out;
  const Slot& s = e->slots()[slot];
  if (def.many()) {
    if (s.many) {
      out.reserve(s.many->entries.size());
      for (const auto& en : s.many->entries) out.emplace_back(en.element);
    }
  } else if (s.ref) {
    out.emplace_back(s.ref);
  }
  return out;
}

ElementRef Model::get_ref(ElementRef ref, std::string_view feature) const {
  const Element* e = ref.get();
  const SlotIndex slot = resolve(e, feature);
  const SlotDef& def = reference_slot(e, slot);
  if (def.many()) throw Error(ErrorKind::multiplicity, feature_name(e, slot) + " is many-valued; use get_refs");
  return ElementRef(e->slots()[slot].ref);
}

// --- freezing ---------------------------------------------------------------

void Model::set_read_only(ElementRef ref) {
  Element* top = ref.get();
  if (!top || top->read_only()) return;

  // Pre-order collection of the not yet frozen part of the subtree; already
  // frozen subtrees are complete and keep their sizes.
  std::vector<Element*> order;
  std::vector<Element*> stack{top};
  while (!stack.empty()) {
    Element* e = stack.back();
    stack.pop_back();
    order.push_back(e);
    const ClassLayout& cls = *e->cls;
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      if (!def.containment) continue;
      const Slot& s = e->slots()[i];
      if (def.many()) {
        if (!s.many) continue;
        for (const auto& en : s.many->entries) {
          if (!en.element->read_only()) stack.push_back(en.element);
        }
      } else if (s.ref && !s.ref->read_only()) {
        stack.push_back(s.ref);
      }
    }
  }

  std::vector<FrozenEdge> edges;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Element* e = *it;
    std::uint32_t size = 1;
    const ClassLayout& cls = *e->cls;
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      const Slot& s = e->slots()[i];
      if (def.many()) {
        if (!s.many) continue;
        for (const auto& en : s.many->entries) {
          if (def.containment) {
            size += en.element->frozen_size;
          } else {
            edges.push_back({e, en.element});
          }
        }
      } else if (s.ref) {
        if (def.containment) {
          size += s.ref->frozen_size;
        } else {
          edges.push_back({e, s.ref});
        }
      }
    }
    e->frozen_size = size;
    e->flags.fetch_or(element_flags::read_only, std::memory_order_release);
  }
  for (const FrozenEdge& edge : edges) {
    if (!edge.to->read_only()) frozen_edges_.push_back(edge);
  }
}

std::size_t Model::frozen_to_mutable_references() const {
  return static_cast<std::size_t>(
      std::count_if(frozen_edges_.begin(), frozen_edges_.end(), [](const FrozenEdge& f) { return !f.to->read_only(); }));
}

std::optional<ContainerLink> Model::container_of(ElementRef e) const {
  Element* parent = nullptr;
  SlotIndex slot = kNoSlot;
  if (!ModelAccess::container(*this, e.get(), parent, slot)) return std::nullopt;
  return ContainerLink{ElementRef(parent), slot};
}

std::string Model::key_of(ElementRef e) const {
  if (!container_of(e)) return {};
  char buf[24];
  return std::string(detail::key_text(e.get(), buf));
}

}  // namespace kmf
