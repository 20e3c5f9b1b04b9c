#pragma once

// Compiled, closed-world form of a metamodel. Every class gets a dense id and
// a flat slot layout (superclass slots first, then own attributes, then own
// references), so a subclass layout always extends its superclass layout.
// Name lookups go through small open-addressing tables built once; unknown
// names are errors, never a fallback to anything dynamic.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "kmf/metamodel.hpp"

namespace kmf {

using ClassId = std::uint16_t;
using SlotIndex = std::uint16_t;

inline constexpr ClassId kNoClass = 0xFFFF;
inline constexpr SlotIndex kNoSlot = 0xFFFF;

enum class SlotKind : std::uint8_t { attribute, reference };

struct SlotDef {
  std::string name;
  SlotKind kind = SlotKind::attribute;
  AttrType type = AttrType::string_type;
  bool is_id = false;
  ClassId target = kNoClass;
  std::uint32_t lower = 0;
  std::uint32_t upper = 1;
  bool containment = false;
  SlotIndex opposite = kNoSlot;
  ClassId declared_in = kNoClass;

  bool is_attribute() const noexcept { return kind == SlotKind::attribute; }
  bool is_reference() const noexcept { return kind == SlotKind::reference; }
  bool many() const noexcept { return kind == SlotKind::reference && upper != 1; }

  friend bool operator==(const SlotDef&, const SlotDef&) = default;
};

/// Open-addressing string matcher built once from a fixed key set.
class NameIndex {
 public:
  NameIndex() = default;
  explicit NameIndex(const std::vector<std::string_view>& keys);

  /// Position of `key` in the construction list, or -1. `name_at(i)` must
  /// return the i-th construction key.
  template <class NameAt>
  int find(std::string_view key, NameAt&& name_at) const noexcept {
    if (buckets_.empty()) return -1;
    const std::uint64_t h = hash(key);
    const std::size_t mask = buckets_.size() - 1;
    for (std::size_t i = h & mask;; i = (i + 1) & mask) {
      const std::int32_t v = buckets_[i];
      if (v < 0) return -1;
      if (hashes_[static_cast<std::size_t>(v)] == h && name_at(static_cast<std::size_t>(v)) == key) return v;
    }
  }

  static std::uint64_t hash(std::string_view key) noexcept;

  friend bool operator==(const NameIndex&, const NameIndex&) = default;

 private:
  std::vector<std::int32_t> buckets_;
  std::vector<std::uint64_t> hashes_;
};

class DispatchTable;

class ClassLayout {
 public:
  ClassId id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  ClassId super() const noexcept { return super_; }

  std::size_t slot_count() const noexcept { return slots_.size(); }
  const SlotDef& slot(SlotIndex i) const noexcept { return slots_[i]; }
  const std::vector<SlotDef>& slots() const noexcept { return slots_; }

  /// kNoSlot when the class has no feature of that name.
  SlotIndex find_slot(std::string_view name) const noexcept;

  SlotIndex id_slot() const noexcept { return id_slot_; }
  bool has_id() const noexcept { return id_slot_ != kNoSlot; }

  /// Largest slot count among this class and its subclasses.
  std::size_t capacity() const noexcept { return capacity_; }

  const std::vector<SlotIndex>& attribute_slots() const noexcept { return attribute_slots_; }
  const std::vector<SlotIndex>& reference_slots() const noexcept { return reference_slots_; }

  /// True when this class is `other` or one of its subclasses.
  bool conforms_to(ClassId other) const noexcept { return other < ancestors_.size() && ancestors_[other]; }

  friend bool operator==(const ClassLayout&, const ClassLayout&) = default;

 private:
  friend class DispatchTable;
  friend std::shared_ptr<const DispatchTable> compile_dispatch(const Metamodel& m);

  ClassId id_ = kNoClass;
  std::string name_;
  ClassId super_ = kNoClass;
  std::vector<SlotDef> slots_;
  SlotIndex id_slot_ = kNoSlot;
  std::size_t capacity_ = 0;
  std::vector<SlotIndex> attribute_slots_;
  std::vector<SlotIndex> reference_slots_;
  std::vector<bool> ancestors_;
  NameIndex names_;
};

class DispatchTable {
 public:
  DispatchTable(const DispatchTable&) = delete;
  DispatchTable& operator=(const DispatchTable&) = delete;

  const std::string& metamodel_name() const noexcept { return name_; }
  std::size_t class_count() const noexcept { return classes_.size(); }
  const ClassLayout& layout(ClassId id) const noexcept { return classes_[id]; }

  /// nullptr when the name is not a class of the metamodel.
  const ClassLayout* try_find_class(std::string_view name) const noexcept;
  /// Throws Error(unknown_class).
  const ClassLayout& find_class(std::string_view name) const;

  /// Stable textual rendering of every table entry; equal tables render
  /// identically.
  std::string canonical_dump() const;

  friend bool operator==(const DispatchTable& a, const DispatchTable& b);

 private:
  DispatchTable() = default;
  friend std::shared_ptr<const DispatchTable> compile_dispatch(const Metamodel& m);

  std::string name_;
  std::vector<ClassLayout> classes_;
  NameIndex names_;
};

/// Throws Error(invalid_metamodel) listing the validation errors when the
/// metamodel is not compilable.
std::shared_ptr<const DispatchTable> compile_dispatch(const Metamodel& m);

}  // namespace kmf
