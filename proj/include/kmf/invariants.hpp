#pragma once

#include <string>
#include <vector>

#include "kmf/model.hpp"

namespace kmf {

/// Brute-force structural audit of a model. Checks, over everything
/// reachable from the root: single container per element with container
/// links matching the tree, relationship entries and key index agreeing,
/// indexed keys equal to current ids, read-only closure over containment,
/// shared elements being read-only, and symmetric opposites.
/// Returns one message per violation; empty means consistent.
std::vector<std::string> check_invariants(const Model& m);

}  // namespace kmf
