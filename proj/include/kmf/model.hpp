#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kmf/dispatch.hpp"
#include "kmf/element.hpp"
#include "kmf/intern.hpp"

namespace kmf {

namespace detail {
struct ModelAccess;
}

/// Attribute value. Strings are views; values read from a model point into
/// its intern pool and stay valid as long as the pool does.
class Value {
 public:
  Value(std::string_view s) noexcept : v_(s) {}
  Value(const char* s) noexcept : v_(std::string_view(s)) {}
  Value(const std::string& s) noexcept : v_(std::string_view(s)) {}
  Value(std::int64_t i) noexcept : v_(i) {}
  Value(int i) noexcept : v_(static_cast<std::int64_t>(i)) {}
  Value(double f) noexcept : v_(f) {}
  Value(bool b) noexcept : v_(b) {}

  AttrType type() const noexcept { return static_cast<AttrType>(v_.index()); }
  std::string_view as_string() const { return std::get<std::string_view>(v_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  double as_float() const { return std::get<double>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }

  /// Text used in diagnostics and the CLI.
  std::string display() const;

  friend bool operator==(const Value&, const Value&) = default;

 private:
  std::variant<std::string_view, std::int64_t, double, bool> v_;
};

struct ContainerLink {
  ElementRef parent;
  SlotIndex slot = kNoSlot;
};

/// The runtime object graph for one dispatch table.
///
/// Single writer: mutation is not thread-safe. Read-only elements may be
/// shared with other models (see clone_partial) and read from any thread.
/// Every mutator rejects read-only elements before checking anything else.
class Model {
 public:
  explicit Model(std::shared_ptr<const DispatchTable> table, std::shared_ptr<InternPool> pool = nullptr);
  ~Model();
  Model(Model&& other) noexcept;
  Model& operator=(Model&& other) noexcept;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const DispatchTable& table() const noexcept { return *table_; }
  const std::shared_ptr<const DispatchTable>& table_ptr() const noexcept { return table_; }
  InternPool& pool() const noexcept { return *pool_; }
  const std::shared_ptr<InternPool>& pool_ptr() const noexcept { return pool_; }

  ElementRef root() const noexcept { return ElementRef(root_); }
  /// The new root must not be contained. The previous root stays owned by
  /// the model, detached.
  void set_root(ElementRef e);

  /// Throws Error(unknown_class).
  ElementRef create_element(std::string_view class_name);
  ElementRef create_element(const ClassLayout& cls);

  /// Elements created by (or copied into) this model, contained or not.
  std::size_t owned_count() const noexcept { return owned_.size(); }
  /// Elements reachable from the root through containment.
  std::size_t element_count() const;

  // Attributes. Errors: unknown_feature, type_mismatch, read_only,
  // duplicate_id (an id change colliding inside a relationship).
  void set_attribute(ElementRef e, std::string_view feature, const Value& v);
  void set_attribute(ElementRef e, SlotIndex slot, const Value& v);
  Value get_attribute(ElementRef e, std::string_view feature) const;
  Value get_attribute(ElementRef e, SlotIndex slot) const;
  /// Interned handle of a string attribute; equal strings give equal atoms.
  Atom get_atom(ElementRef e, std::string_view feature) const;

  // References. Errors: unknown_feature, conformance, second_container,
  // containment_cycle, read_only, duplicate_id, multiplicity.
  void add_ref(ElementRef e, std::string_view feature, ElementRef target);
  void add_ref(ElementRef e, SlotIndex slot, ElementRef target);
  void remove_ref(ElementRef e, std::string_view feature, ElementRef target);
  void remove_ref(ElementRef e, SlotIndex slot, ElementRef target);
  /// Single-valued references only; a null target clears the slot.
  void set_single_ref(ElementRef e, std::string_view feature, ElementRef target);
  void set_single_ref(ElementRef e, SlotIndex slot, ElementRef target);
  /// Snapshot copy; later mutations do not affect it.
  std::vector<ElementRef> get_refs(ElementRef e, std::string_view feature) const;
  std::vector<ElementRef> get_refs(ElementRef e, SlotIndex slot) const;
  /// Single-valued reference target (null when unset).
  ElementRef get_ref(ElementRef e, std::string_view feature) const;

  /// Freezes `e` and its containment descendants. Irreversible, idempotent.
  void set_read_only(ElementRef e);

  /// Container of `e` as seen from this model.
  std::optional<ContainerLink> container_of(ElementRef e) const;

  /// Key of `e` inside its containing relationship: the id value, or the
  /// automatic key when its class has no id attribute.
  std::string key_of(ElementRef e) const;

  /// Number of (frozen element, mutable target) reference pairs recorded at
  /// freeze time whose target is still mutable.
  std::size_t frozen_to_mutable_references() const;

 private:
  friend struct detail::ModelAccess;

  struct Watch {
    Element* holder;
    SlotIndex slot;
  };
  struct FrozenEdge {
    Element* from;
    Element* to;
  };

  SlotIndex resolve(const Element* e, std::string_view feature) const;
  const SlotDef& attribute_slot(const Element* e, SlotIndex slot) const;
  const SlotDef& reference_slot(const Element* e, SlotIndex slot) const;
  void release_all() noexcept;

  std::shared_ptr<const DispatchTable> table_;
  std::shared_ptr<InternPool> pool_;
  Element* root_ = nullptr;
  std::vector<Element*, alloc::ModelAllocator<Element*>> owned_;
  // Container links for elements shared in from another model, sorted by element.
  std::vector<std::pair<Element*, ContainerLink>, alloc::ModelAllocator<std::pair<Element*, ContainerLink>>>
      shared_parents_;
  // Non-containment many-slots that index an element by its id value.
  std::vector<std::pair<Element*, Watch>, alloc::ModelAllocator<std::pair<Element*, Watch>>> watches_;
  std::vector<FrozenEdge, alloc::ModelAllocator<FrozenEdge>> frozen_edges_;
};

/// Fresh empty model with its own intern pool.
Model create_model(std::shared_ptr<const DispatchTable> table);

enum class DiffKind : std::uint8_t { missing, extra, attribute_mismatch, reference_mismatch };

std::string_view to_string(DiffKind k) noexcept;

struct Difference {
  std::string path;
  DiffKind kind;
  std::string detail;
};

struct DiffReport {
  bool equal = true;
  std::vector<Difference> differences;
};

/// Structural comparison: containment tree shape, classes, attribute values,
/// and non-containment targets compared by path. Element identity is
/// ignored. `missing` means present in `a` only, `extra` present in `b` only.
/// Throws Error(table_mismatch) when the tables differ.
DiffReport deep_equal(const Model& a, const Model& b);

}  // namespace kmf
