#pragma once

// Internals shared by the model, clone, query and io implementations.

#include <charconv>
#include <cstring>
#include <string_view>
#include <vector>

#include "kmf/alloc.hpp"
#include "kmf/model.hpp"
#include "ptr_map.hpp"

namespace kmf {

/// Multi-valued reference slot: ordered entries plus a hash index from key to
/// element. Reference counted so a partial clone can share a store whose
/// entries are all read-only; writers copy it first when it is shared.
class RelationshipStore {
 public:
  struct Entry {
    Element* element;
    const InternedString* key;
  };

  std::atomic<std::uint32_t> refs{1};
  std::uint32_t next_auto = 0;
  std::vector<Entry, alloc::ModelAllocator<Entry>> entries;
  detail::PtrMap<const InternedString*, Element*, alloc::ModelAllocator<std::byte>> index;

  static RelationshipStore* create();
  RelationshipStore* copy() const;
  void destroy() noexcept;
};

namespace detail {

/// Index key used for the empty string (the null atom cannot be a map key).
extern const InternedString kEmptyKey;

inline const InternedString* key_ptr(Atom a) noexcept { return a.get() ? a.get() : &kEmptyKey; }
inline std::string_view key_view(const InternedString* k) noexcept { return k->view(); }

Element* allocate_element(const ClassLayout& cls, std::size_t capacity);
inline void retain(Element* e) noexcept { e->refs.fetch_add(1, std::memory_order_relaxed); }
/// Drops one reference; frees the element (and, transitively, whatever only
/// it kept alive through containment) when it was the last.
void release(Element* e) noexcept;
void release_store(RelationshipStore* s, bool containment) noexcept;
inline void retain_store(RelationshipStore* s) noexcept { s->refs.fetch_add(1, std::memory_order_relaxed); }

/// Key text of an element at its containment position: the id value, or the
/// automatic key. Integer forms are rendered into `buf`.
inline std::string_view key_text(const Element* e, char (&buf)[24]) noexcept {
  const ClassLayout& cls = *e->cls;
  if (cls.has_id()) {
    const Slot& s = e->slots()[cls.id_slot()];
    if (cls.slot(cls.id_slot()).type == AttrType::string_type) {
      return s.str ? s.str->view() : std::string_view();
    }
    auto r = std::to_chars(buf, buf + sizeof buf, s.i);
    return {buf, static_cast<std::size_t>(r.ptr - buf)};
  }
  auto r = std::to_chars(buf, buf + sizeof buf, e->auto_key);
  return {buf, static_cast<std::size_t>(r.ptr - buf)};
}

/// Counts relationship entries inspected by linear scans on this thread.
std::uint64_t& scan_counter() noexcept;

struct ModelAccess {
  using Watch = Model::Watch;
  static Element*& root(Model& m) noexcept { return m.root_; }
  static auto& owned(Model& m) noexcept { return m.owned_; }
  static auto& shared_parents(Model& m) noexcept { return m.shared_parents_; }
  static auto& watches(Model& m) noexcept { return m.watches_; }
  static auto& frozen_edges(Model& m) noexcept { return m.frozen_edges_; }
  static const auto& frozen_edges(const Model& m) noexcept { return m.frozen_edges_; }
  static const auto& owned(const Model& m) noexcept { return m.owned_; }

  /// Creates an element owned by `m` with room for any subclass of `cls`.
  static Element* new_element(Model& m, const ClassLayout& cls, std::size_t capacity);
  /// Container link as seen from `m` (shared elements keep per-model links).
  static bool container(const Model& m, const Element* e, Element*& parent, SlotIndex& slot) noexcept;
  /// Key atom for an element at its containment position; interns integer
  /// forms.
  static const InternedString* index_key(Model& m, const Element* e);
  /// Copy-on-write access to a many-slot store, creating it when empty.
  static RelationshipStore* writable_store(Element* e, SlotIndex slot);
  static void add_watch(Model& m, Element* target, Element* holder, SlotIndex slot);
  static void remove_watch(Model& m, Element* target, Element* holder, SlotIndex slot);
};

}  // namespace detail
}  // namespace kmf
