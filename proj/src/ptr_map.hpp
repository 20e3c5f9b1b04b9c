#pragma once

// Open-addressing hash map keyed by non-null pointers. Linear probing with
// backward-shift deletion, so there are no tombstones and the table never
// degrades under add/remove churn.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace kmf::detail {

template <class K, class V, class Alloc = std::allocator<std::byte>>
class PtrMap {
 public:
  struct Entry {
    K key;
    V value;
  };

  PtrMap() = default;

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  void reserve(std::size_t n) {
    const std::size_t want = capacity_for(n);
    if (want > slots_.size()) rehash(want);
  }

  void clear() noexcept {
    slots_.clear();
    size_ = 0;
  }

  const V* find(K key) const noexcept {
    if (slots_.empty()) return nullptr;
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t i = bucket(key, mask);; i = (i + 1) & mask) {
      const Entry& e = slots_[i];
      if (e.key == key) return &e.value;
      if (e.key == K()) return nullptr;
    }
  }

  V* find(K key) noexcept { return const_cast<V*>(static_cast<const PtrMap*>(this)->find(key)); }

  /// False (and no change) when the key is already present.
  bool insert(K key, V value) {
    if ((size_ + 1) * 4 > slots_.size() * 3) rehash(slots_.empty() ? 8 : slots_.size() * 2);
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t i = bucket(key, mask);; i = (i + 1) & mask) {
      Entry& e = slots_[i];
      if (e.key == key) return false;
      if (e.key == K()) {
        e.key = key;
        e.value = value;
        ++size_;
        return true;
      }
    }
  }

  void insert_or_assign(K key, V value) {
    if (V* v = find(key)) {
      *v = value;
    } else {
      insert(key, value);
    }
  }

  bool erase(K key) noexcept {
    if (slots_.empty()) return false;
    const std::size_t mask = slots_.size() - 1;
    std::size_t i = bucket(key, mask);
    for (;; i = (i + 1) & mask) {
      if (slots_[i].key == key) break;
      if (slots_[i].key == K()) return false;
    }
    // Backward shift: pull later members of the probe run into the hole.
    std::size_t hole = i;
    for (std::size_t j = (i + 1) & mask; slots_[j].key != K(); j = (j + 1) & mask) {
      const std::size_t home = bucket(slots_[j].key, mask);
      const bool movable = hole <= j ? (home <= hole || home > j) : (home <= hole && home > j);
      if (movable) {
        slots_[hole] = slots_[j];
        hole = j;
      }
    }
    slots_[hole] = Entry{};
    --size_;
    return true;
  }

  template <class F>
  void for_each(F&& f) const {
    for (const Entry& e : slots_) {
      if (e.key != K()) f(e.key, e.value);
    }
  }

  template <class F>
  void for_each_mut(F&& f) {
    for (Entry& e : slots_) {
      if (e.key != K()) f(e.key, e.value);
    }
  }

 private:
  using EntryAlloc = typename std::allocator_traits<Alloc>::template rebind_alloc<Entry>;

  static std::size_t capacity_for(std::size_t n) {
    if (n == 0) return 0;
    return std::bit_ceil((n * 4 + 2) / 3 + 1);
  }

  static std::size_t bucket(K key, std::size_t mask) noexcept {
    auto x = reinterpret_cast<std::uintptr_t>(key);
    x ^= x >> 17;
    x *= 0x9E3779B97F4A7C15ull;
    return static_cast<std::size_t>(x >> 29) & mask;
  }

  void rehash(std::size_t size) {
    std::vector<Entry, EntryAlloc> next(size, Entry{});
    const std::size_t mask = size - 1;
    for (const Entry& e : slots_) {
      if (e.key == K()) continue;
      std::size_t i = bucket(e.key, mask);
      while (next[i].key != K()) i = (i + 1) & mask;
      next[i] = e;
    }
    slots_.swap(next);
  }

  std::vector<Entry, EntryAlloc> slots_;
  std::size_t size_ = 0;
};

}  // namespace kmf::detail
