#include "kmf/alloc.hpp"

#include <malloc.h>

#include <algorithm>
#include <cstdlib>
#include <new>

namespace {

// Plain aggregate so the thread_local needs no dynamic initialisation; it is
// touched from inside operator new.
struct Counters {
  std::int64_t live;
  std::int64_t model_live;
  std::int64_t peak;
  std::int64_t transient_peak;
  std::uint64_t total;
  std::uint64_t count;
};

thread_local Counters counters;

inline void note_peaks(Counters& c) noexcept {
  if (c.live > c.peak) c.peak = c.live;
  const std::int64_t transient = c.live - c.model_live;
  if (transient > c.transient_peak) c.transient_peak = transient;
}

inline void record_alloc(void* p) noexcept {
  Counters& c = counters;
  const auto size = static_cast<std::int64_t>(malloc_usable_size(p));
  c.live += size;
  c.total += static_cast<std::uint64_t>(size);
  ++c.count;
  note_peaks(c);
}

inline void record_free(void* p) noexcept { counters.live -= static_cast<std::int64_t>(malloc_usable_size(p)); }

void* checked_malloc(std::size_t n) {
  void* p = std::malloc(n == 0 ? 1 : n);
  if (p == nullptr) throw std::bad_alloc();
  record_alloc(p);
  return p;
}

void* checked_aligned(std::size_t n, std::align_val_t al) {
  auto align = static_cast<std::size_t>(al);
  if (align < sizeof(void*)) align = sizeof(void*);
  std::size_t size = n == 0 ? align : (n + align - 1) / align * align;
  void* p = std::aligned_alloc(align, size);
  if (p == nullptr) throw std::bad_alloc();
  record_alloc(p);
  return p;
}

inline void release(void* p) noexcept {
  if (p == nullptr) return;
  record_free(p);
  std::free(p);
}

}  // namespace

void* operator new(std::size_t n) { return checked_malloc(n); }
void* operator new[](std::size_t n) { return checked_malloc(n); }
void* operator new(std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return checked_malloc(n);
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return checked_malloc(n);
  } catch (...) {
    return nullptr;
  }
}
void* operator new(std::size_t n, std::align_val_t al) { return checked_aligned(n, al); }
void* operator new[](std::size_t n, std::align_val_t al) { return checked_aligned(n, al); }

void operator delete(void* p) noexcept { release(p); }
void operator delete[](void* p) noexcept { release(p); }
void operator delete(void* p, std::size_t) noexcept { release(p); }
void operator delete[](void* p, std::size_t) noexcept { release(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { release(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { release(p); }
void operator delete(void* p, std::align_val_t) noexcept { release(p); }
void operator delete[](void* p, std::align_val_t) noexcept { release(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { release(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { release(p); }

namespace kmf::alloc {

Snapshot snapshot() noexcept {
  const Counters& c = counters;
  return Snapshot{c.live, c.model_live, c.total, c.count};
}

void* model_allocate(std::size_t bytes) {
  void* p = std::malloc(bytes == 0 ? 1 : bytes);
  if (p == nullptr) throw std::bad_alloc();
  Counters& c = counters;
  const auto size = static_cast<std::int64_t>(malloc_usable_size(p));
  c.model_live += size;
  c.live += size;
  c.total += static_cast<std::uint64_t>(size);
  ++c.count;
  note_peaks(c);
  return p;
}

void model_deallocate(void* p) noexcept {
  if (p == nullptr) return;
  Counters& c = counters;
  const auto size = static_cast<std::int64_t>(malloc_usable_size(p));
  c.model_live -= size;
  c.live -= size;
  std::free(p);
}

Scope::Scope() noexcept : start_(snapshot()) {
  Counters& c = counters;
  saved_peak_ = c.peak;
  saved_transient_peak_ = c.transient_peak;
  c.peak = c.live;
  c.transient_peak = c.live - c.model_live;
}

Scope::~Scope() {
  Counters& c = counters;
  c.peak = std::max(c.peak, saved_peak_);
  c.transient_peak = std::max(c.transient_peak, saved_transient_peak_);
}

std::int64_t Scope::net() const noexcept { return counters.live - start_.live; }
std::int64_t Scope::model_net() const noexcept { return counters.model_live - start_.model_live; }
std::int64_t Scope::peak() const noexcept { return counters.peak - start_.live; }
std::int64_t Scope::transient_peak() const noexcept {
  return counters.transient_peak - (start_.live - start_.model_live);
}
std::uint64_t Scope::total() const noexcept { return counters.total - start_.total; }
std::uint64_t Scope::count() const noexcept { return counters.count - start_.count; }

}  // namespace kmf::alloc
