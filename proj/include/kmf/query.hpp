#pragma once

// Path language: `rel[key]/rel[key]/...`, each step naming a relationship of
// the current element and the key of one of its targets. Backslash escapes
// `\`, `/`, `[`, `]` and space inside names and keys.

#include <string>
#include <string_view>
#include <vector>

#include "kmf/model.hpp"

namespace kmf {

struct PathStep {
  std::string relation;
  std::string key;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct Path {
  std::vector<PathStep> steps;

  bool empty() const noexcept { return steps.empty(); }
  friend bool operator==(const Path&, const Path&) = default;
};

/// Throws ParseError(syntax) on a malformed step or an empty relation name.
Path parse_path(std::string_view text);
std::string format_path(const Path& p);
void append_escaped(std::string& out, std::string_view raw);

/// One hash lookup per step, no list scans. Returns a null ref when a key is
/// absent. Throws Error(no_root) or Error(unknown_relation).
ElementRef find_by_path(const Model& m, const Path& p);
ElementRef find_by_path(const Model& m, std::string_view path);

/// Baseline with the same contract, resolving every step by a linear scan.
ElementRef find_by_scan(const Model& m, const Path& p);

/// Containment path of `e` from the root of `m`. Throws Error(detached).
Path path_of(const Model& m, ElementRef e);
/// Same, formatted and appended to `out`.
void append_path_of(const Model& m, ElementRef e, std::string& out);
std::string path_string_of(const Model& m, ElementRef e);

/// Relationship entries inspected by find_by_scan on this thread.
std::uint64_t scan_count() noexcept;

}  // namespace kmf
