#include "kmf/clone.hpp"

#include <algorithm>
#include <chrono>

#include "kmf/error.hpp"
#include "model_internal.hpp"

namespace kmf {

namespace {

using detail::ModelAccess;

[[noreturn]] void dangling(const Element* holder, SlotIndex slot) {
  throw Error(ErrorKind::detached, "'" + holder->cls->name() + "." + holder->cls->slot(slot).name +
                                       "' references an element outside the containment tree");
}

class Cloner {
 public:
  Cloner(const Model& src, bool partial) : src_(src), partial_(partial), out_(src.table_ptr(), src.pool_ptr()) {}

  CloneResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    alloc::Scope scope;
    {
      if (partial_) check_frozen_edges();
      const Element* root = src_.root().get();
      if (root) {
        if (partial_ && root->read_only()) {
          share_root(root);
        } else {
          Element* copy = copy_of(root);
          ModelAccess::root(out_) = copy;
          detail::retain(copy);
          traverse();
          patch();
        }
      }
      finish();
      map_ = {};
      stack_ = {};
      patch_list_ = {};
      watch_list_ = {};
    }
    stats_.bytes_allocated = scope.model_net();
    stats_.duration_ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count());
    return {std::move(out_), stats_};
  }

 private:
  void check_frozen_edges() {
    for (const auto& edge : ModelAccess::frozen_edges(src_)) {
      if (!edge.to->read_only()) {
        throw Error(ErrorKind::shared_mutable_reference,
                    "read-only '" + edge.from->cls->name() + "' element references mutable '" + edge.to->cls->name() +
                        "' element; freeze the target or clone in full");
      }
    }
  }

  void share_root(const Element* root) {
    Element* e = const_cast<Element*>(root);
    e->flags.fetch_or(element_flags::shared, std::memory_order_acq_rel);
    detail::retain(e);
    ModelAccess::root(out_) = e;
    ++stats_.visits;
    stats_.elements_shared += e->frozen_size;
  }

  Element* copy_of(const Element* s) {
    ++stats_.visits;
    ++stats_.elements_copied;
    const ClassLayout& cls = *s->cls;
    Element* d = ModelAccess::new_element(out_, cls, cls.slot_count());
    for (SlotIndex i : cls.attribute_slots()) d->slots()[i] = s->slots()[i];
    d->auto_key = s->auto_key;
    d->frozen_size = s->frozen_size;
    d->flags.store(s->flags.load(std::memory_order_acquire) & element_flags::read_only, std::memory_order_relaxed);
    map_.insert(s, d);
    stack_.push_back({s, d});
    return d;
  }

  void share(Element* child, Element* parent, SlotIndex slot) {
    ++stats_.visits;
    child->flags.fetch_or(element_flags::shared, std::memory_order_acq_rel);
    stats_.elements_shared += child->frozen_size;
    ModelAccess::shared_parents(out_).push_back({child, ContainerLink{ElementRef(parent), slot}});
    shared_roots_.insert(child, true);
  }

  void traverse() {
    while (!stack_.empty()) {
      auto [s, d] = stack_.back();
      stack_.pop_back();
      const ClassLayout& cls = *s->cls;
      bool needs_patch = false;
      for (SlotIndex i : cls.reference_slots()) {
        const SlotDef& def = cls.slot(i);
        const Slot& ss = s->slots()[i];
        if (!def.containment) {
          needs_patch |= ss.ref != nullptr;  // same bits for `many`
          continue;
        }
        if (!def.many()) {
          if (!ss.ref) continue;
          Element* child = ss.ref;
          if (partial_ && child->read_only()) {
            share(child, d, i);
            detail::retain(child);
            d->slots()[i].ref = child;
          } else {
            Element* c = copy_of(child);
            attach(c, d, i);
            d->slots()[i].ref = c;
          }
          continue;
        }
        RelationshipStore* store = ss.many;
        if (!store) continue;
        if (partial_ && all_read_only(*store)) {
          detail::retain_store(store);
          d->slots()[i].many = store;
          for (const auto& entry : store->entries) share(entry.element, d, i);
          continue;
        }
        RelationshipStore* copy = RelationshipStore::create();
        d->slots()[i].many = copy;
        copy->next_auto = store->next_auto;
        copy->entries.reserve(store->entries.size());
        copy->index.reserve(store->entries.size());
        for (const auto& entry : store->entries) {
          Element* child = entry.element;
          Element* c;
          if (partial_ && child->read_only()) {
            share(child, d, i);
            detail::retain(child);
            c = child;
          } else {
            c = copy_of(child);
            attach(c, d, i);
          }
          copy->entries.push_back({c, entry.key});
          copy->index.insert(entry.key, c);
        }
      }
      if (needs_patch) patch_list_.push_back({s, d});
    }
  }

  static void attach(Element* c, Element* parent, SlotIndex slot) {
    c->container = parent;
    c->container_slot = slot;
    detail::retain(c);
  }

  static bool all_read_only(const RelationshipStore& s) {
    if (s.entries.empty()) return false;
    return std::all_of(s.entries.begin(), s.entries.end(), [](const auto& e) { return e.element->read_only(); });
  }

  // Read-only targets keep their identity; they must lie inside a subtree this
  // clone shares.
  Element* map_target(const Element* holder, SlotIndex slot, Element* t) {
    if (Element* const* hit = map_.find(t)) return *hit;
    if (partial_ && t->read_only() && inside_shared_zone(t)) return t;
    dangling(holder, slot);
  }

  bool inside_shared_zone(const Element* t) {
    if (t == ModelAccess::root(out_)) return true;
    for (const Element* cur = t; cur;) {
      if (shared_roots_.find(cur)) return true;
      Element* parent = nullptr;
      SlotIndex slot = kNoSlot;
      if (!ModelAccess::container(src_, cur, parent, slot)) return false;
      cur = parent;
    }
    return false;
  }

  void patch() {
    for (auto [s, d] : patch_list_) {
      const ClassLayout& cls = *s->cls;
      for (SlotIndex i : cls.reference_slots()) {
        const SlotDef& def = cls.slot(i);
        if (def.containment) continue;
        const Slot& ss = s->slots()[i];
        if (!def.many()) {
          if (ss.ref) d->slots()[i].ref = map_target(s, i, ss.ref);
          continue;
        }
        RelationshipStore* store = ss.many;
        if (!store) continue;
        if (partial_ && all_read_only(*store)) {
          for (const auto& entry : store->entries) map_target(s, i, entry.element);
          detail::retain_store(store);
          d->slots()[i].many = store;
          continue;
        }
        RelationshipStore* copy = RelationshipStore::create();
        d->slots()[i].many = copy;
        copy->next_auto = store->next_auto;
        copy->entries.reserve(store->entries.size());
        copy->index.reserve(store->entries.size());
        for (const auto& entry : store->entries) {
          Element* t = map_target(s, i, entry.element);
          copy->entries.push_back({t, entry.key});
          copy->index.insert(entry.key, t);
          if (t->cls->has_id() && !t->read_only()) watch_list_.push_back({t, d, i});
        }
      }
    }
  }

  void finish() {
    auto& sp = ModelAccess::shared_parents(out_);
    std::sort(sp.begin(), sp.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& w = ModelAccess::watches(out_);
    w.reserve(watch_list_.size());
    std::sort(watch_list_.begin(), watch_list_.end(), [](const WatchItem& a, const WatchItem& b) { return a.target < b.target; });
    for (const WatchItem& item : watch_list_) ModelAccess::add_watch(out_, item.target, item.holder, item.slot);
    if (!partial_) {
      for (const auto& edge : ModelAccess::frozen_edges(src_)) {
        Element* const* from = map_.find(edge.from);
        Element* const* to = map_.find(edge.to);
        if (from && to) ModelAccess::frozen_edges(out_).push_back({*from, *to});
      }
    }
  }

  struct Work {
    const Element* src;
    Element* dst;
  };
  struct WatchItem {
    Element* target;
    Element* holder;
    SlotIndex slot;
  };

  const Model& src_;
  bool partial_;
  Model out_;
  CloneStats stats_;
  detail::PtrMap<const Element*, Element*> map_;
  detail::PtrMap<const Element*, bool> shared_roots_;
  std::vector<Work> stack_;
  std::vector<Work> patch_list_;
  std::vector<WatchItem> watch_list_;
};

}  // namespace

CloneResult clone_full(const Model& m) { return Cloner(m, false).run(); }

CloneResult clone_partial(const Model& m) { return Cloner(m, true).run(); }

}  // namespace kmf
