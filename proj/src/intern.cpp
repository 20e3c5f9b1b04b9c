#include <cstring>
#include <mutex>

#include "kmf/intern.hpp"

namespace kmf {

std::uint64_t InternPool::hash(std::string_view s) noexcept {
  // FNV-1a followed by a final avalanche; the low bits index the table.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

InternPool::~InternPool() {
  for (const InternedString* s : table_) {
    if (s) alloc::model_deallocate(const_cast<InternedString*>(s));
  }
}

const InternedString* InternPool::lookup(std::string_view s, std::uint64_t h) const noexcept {
  if (table_.empty()) return nullptr;
  const std::size_t mask = table_.size() - 1;
  for (std::size_t i = h & mask;; i = (i + 1) & mask) {
    const InternedString* e = table_[i];
    if (!e) return nullptr;
    if (e->hash == h && e->view() == s) return e;
  }
}

void InternPool::grow() {
  const std::size_t size = table_.empty() ? 64 : table_.size() * 2;
  decltype(table_) next(size, nullptr);
  for (const InternedString* e : table_) {
    if (!e) continue;
    std::size_t i = e->hash & (size - 1);
    while (next[i]) i = (i + 1) & (size - 1);
    next[i] = e;
  }
  table_.swap(next);
}

Atom InternPool::intern(std::string_view s) {
  if (s.empty()) return Atom();
  const std::uint64_t h = hash(s);
  {
    std::shared_lock lock(mutex_);
    if (const InternedString* e = lookup(s, h)) return Atom(e);
  }
  std::unique_lock lock(mutex_);
  if (const InternedString* e = lookup(s, h)) return Atom(e);
  if ((size_ + 1) * 2 > table_.size()) grow();
  const std::size_t bytes = offsetof(InternedString, data) + s.size() + 1;
  auto* e = static_cast<InternedString*>(alloc::model_allocate(bytes));
  e->hash = h;
  e->size = static_cast<std::uint32_t>(s.size());
  std::memcpy(e->data, s.data(), s.size());
  e->data[s.size()] = '\0';
  std::size_t i = h & (table_.size() - 1);
  while (table_[i]) i = (i + 1) & (table_.size() - 1);
  table_[i] = e;
  ++size_;
  bytes_ += bytes;
  return Atom(e);
}

std::optional<Atom> InternPool::find(std::string_view s) const {
  if (s.empty()) return Atom();
  std::shared_lock lock(mutex_);
  if (const InternedString* e = lookup(s, hash(s))) return Atom(e);
  return std::nullopt;
}

std::size_t InternPool::size() const {
  std::shared_lock lock(mutex_);
  return size_;
}

std::size_t InternPool::bytes() const {
  std::shared_lock lock(mutex_);
  return bytes_;
}

}  // namespace kmf
