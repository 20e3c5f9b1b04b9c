#pragma once

// Flyweight storage for string attribute values. Equal strings interned in the
// same pool yield the same Atom; the empty string is the null Atom so that a
// zero-filled slot already holds the default "".

#include <cstddef>
#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <string_view>
#include <vector>

#include "kmf/alloc.hpp"

namespace kmf {

struct InternedString {
  std::uint64_t hash;
  std::uint32_t size;
  char data[1];  // size + 1 bytes, NUL terminated

  std::string_view view() const noexcept { return {data, size}; }
};

class Atom {
 public:
  constexpr Atom() noexcept = default;
  explicit constexpr Atom(const InternedString* s) noexcept : s_(s) {}

  std::string_view view() const noexcept { return s_ ? s_->view() : std::string_view(); }
  const InternedString* get() const noexcept { return s_; }
  bool empty() const noexcept { return s_ == nullptr; }

  friend constexpr bool operator==(Atom a, Atom b) noexcept { return a.s_ == b.s_; }

 private:
  const InternedString* s_ = nullptr;
};

/// Thread-safe; lookups take a shared lock, insertions an exclusive one.
/// Strings live until the pool is destroyed.
class InternPool {
 public:
  InternPool() = default;
  ~InternPool();
  InternPool(const InternPool&) = delete;
  InternPool& operator=(const InternPool&) = delete;

  Atom intern(std::string_view s);
  /// The atom for `s` if it was interned before.
  std::optional<Atom> find(std::string_view s) const;

  std::size_t size() const;
  std::size_t bytes() const;

  static std::uint64_t hash(std::string_view s) noexcept;

 private:
  const InternedString* lookup(std::string_view s, std::uint64_t h) const noexcept;
  void grow();

  mutable std::shared_mutex mutex_;
  std::vector<const InternedString*, alloc::ModelAllocator<const InternedString*>> table_;
  std::size_t size_ = 0;
  std::size_t bytes_ = 0;
};

}  // namespace kmf
