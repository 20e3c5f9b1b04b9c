#pragma once

#include <cstddef>
#include <cstdint>

#include "kmf/model.hpp"

namespace kmf {

struct CloneStats {
  std::size_t elements_copied = 0;
  std::size_t elements_shared = 0;
  std::uint64_t duration_ns = 0;
  // Model-owned bytes retained by the clone, from the allocation counters.
  // Approximate: malloc usable sizes, excluding the intern pool it shares.
  std::int64_t bytes_allocated = 0;
  // Source elements visited by the traversal.
  std::size_t visits = 0;
};

struct CloneResult {
  Model model;
  CloneStats stats;
};

/// Copies every reachable element in one traversal. Read-only flags are kept,
/// the intern pool is shared. Throws Error(detached) when a non-containment
/// reference points outside the containment tree.
CloneResult clone_full(const Model& m);

/// Copies mutable elements and shares read-only subtrees (and relationship
/// stores whose entries are all read-only) with the source. The clone keeps
/// what it shares alive on its own. Throws Error(shared_mutable_reference)
/// when a read-only element references a mutable one, Error(detached) as
/// for clone_full.
CloneResult clone_partial(const Model& m);

}  // namespace kmf
