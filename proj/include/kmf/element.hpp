#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <string_view>

#include "kmf/dispatch.hpp"
#include "kmf/intern.hpp"

namespace kmf {

class RelationshipStore;

/// One slot of an element. Which member is live is decided by the class
/// layout; all-zero bits are the default for every kind ("" / 0 / 0.0 /
/// false / no reference / empty relationship).
union Slot {
  const InternedString* str;
  std::int64_t i;
  double f;
  bool b;
  struct Element* ref;
  RelationshipStore* many;
};

static_assert(sizeof(Slot) == 8);

namespace element_flags {
inline constexpr std::uint8_t read_only = 1;
inline constexpr std::uint8_t shared = 2;
// Created ahead of its definition while loading a stream (forward reference).
inline constexpr std::uint8_t unborn = 4;
}  // namespace element_flags

/// Runtime instance. Allocated as a header immediately followed by its slot
/// array in one block; only Model and the library internals create or
/// mutate them.
struct Element {
  const ClassLayout* cls;
  // Container in the model that created the element. Models that share this
  // element through a partial clone keep their own container link.
  Element* container;
  std::atomic<std::uint32_t> refs;
  // Key inside the containing relationship when the class has no id attribute.
  std::uint32_t auto_key;
  // Number of elements in the frozen subtree rooted here; valid once read-only.
  std::uint32_t frozen_size;
  SlotIndex container_slot;
  std::atomic<std::uint8_t> flags;

  Slot* slots() noexcept { return reinterpret_cast<Slot*>(this + 1); }
  const Slot* slots() const noexcept { return reinterpret_cast<const Slot*>(this + 1); }

  bool has_flag(std::uint8_t f) const noexcept { return (flags.load(std::memory_order_acquire) & f) != 0; }
  bool read_only() const noexcept { return has_flag(element_flags::read_only); }
};

static_assert(sizeof(Element) % alignof(Slot) == 0);

/// Non-owning handle to an element; valid while a model holding the element
/// is alive.
class ElementRef {
 public:
  constexpr ElementRef() noexcept = default;
  explicit constexpr ElementRef(Element* e) noexcept : e_(e) {}

  Element* get() const noexcept { return e_; }
  explicit operator bool() const noexcept { return e_ != nullptr; }

  const ClassLayout& layout() const noexcept { return *e_->cls; }
  std::string_view class_name() const noexcept { return e_->cls->name(); }
  bool read_only() const noexcept { return e_->read_only(); }
  bool shared() const noexcept { return e_->has_flag(element_flags::shared); }

  friend constexpr bool operator==(ElementRef a, ElementRef b) noexcept { return a.e_ == b.e_; }
  friend auto operator<=>(ElementRef a, ElementRef b) noexcept { return std::compare_three_way()(a.e_, b.e_); }

 private:
  Element* e_ = nullptr;
};

}  // namespace kmf

template <>
struct std::hash<kmf::ElementRef> {
  std::size_t operator()(kmf::ElementRef r) const noexcept { return std::hash<kmf::Element*>()(r.get()); }
};
