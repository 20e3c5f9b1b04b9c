#pragma once

// Allocation accounting.
//
// Every heap allocation made through the global operator new is counted per
// thread. Storage owned by a Model (elements, relationship stores, intern
// pool nodes) additionally goes through model_allocate(), so the difference
// between the two counters is the transient, non-model memory of whatever
// code is running. Sizes are malloc usable sizes, not requested sizes.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <new>

namespace kmf::alloc {

struct Snapshot {
  std::int64_t live = 0;
  std::int64_t model_live = 0;
  std::uint64_t total = 0;
  std::uint64_t count = 0;
};

/// Counters of the calling thread.
Snapshot snapshot() noexcept;

void* model_allocate(std::size_t bytes);
void model_deallocate(void* p) noexcept;

/// Measures allocation on the calling thread between construction and the
/// query. Scopes nest.
class Scope {
 public:
  Scope() noexcept;
  ~Scope();
  Scope(const Scope&) = delete;
  Scope& operator=(const Scope&) = delete;

  /// Bytes still live that were allocated inside the scope, net of frees.
  std::int64_t net() const noexcept;
  /// Same, restricted to model-owned storage.
  std::int64_t model_net() const noexcept;
  /// Highest live total reached inside the scope, relative to its start.
  std::int64_t peak() const noexcept;
  /// Highest non-model live total reached inside the scope, relative to its start.
  std::int64_t transient_peak() const noexcept;
  /// Bytes requested inside the scope, ignoring frees.
  std::uint64_t total() const noexcept;
  std::uint64_t count() const noexcept;

 private:
  Snapshot start_;
  std::int64_t saved_peak_;
  std::int64_t saved_transient_peak_;
};

template <class T>
struct ModelAllocator {
  using value_type = T;

  ModelAllocator() noexcept = default;
  template <class U>
  ModelAllocator(const ModelAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) throw std::bad_array_new_length();
    return static_cast<T*>(model_allocate(n * sizeof(T)));
  }
  void deallocate(T* p, std::size_t) noexcept { model_deallocate(p); }

  template <class U>
  bool operator==(const ModelAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace kmf::alloc
