#include "kmf/query.hpp"

#include <algorithm>

#include "kmf/error.hpp"
#include "model_internal.hpp"

namespace kmf {

namespace {

bool needs_escape(char c) noexcept { return c == '\\' || c == '/' || c == '[' || c == ']' || c == ' '; }

[[noreturn]] void malformed(std::string_view text, std::size_t pos, const std::string& what) {
  throw ParseError(ErrorKind::syntax, 1, static_cast<std::uint32_t>(pos + 1),
                   what + " in path '" + std::string(text) + "'");
}

// Key of `e` as seen from a single-valued slot: the id, or "0".
std::string_view single_key(const Element* e, char (&buf)[24]) noexcept {
  if (e->cls->has_id()) return detail::key_text(e, buf);
  buf[0] = '0';
  return {buf, 1};
}

SlotIndex relation_slot(const Element* e, const std::string& relation) {
  const SlotIndex slot = e->cls->find_slot(relation);
  if (slot == kNoSlot || !e->cls->slot(slot).is_reference()) {
    throw Error(ErrorKind::unknown_relation, "class '" + e->cls->name() + "' has no relation '" + relation + "'");
  }
  return slot;
}

const Element* start(const Model& m) {
  if (!m.root()) throw Error(ErrorKind::no_root, "model has no root");
  return m.root().get();
}

}  // namespace

std::uint64_t scan_count() noexcept { return detail::scan_counter(); }

void append_escaped(std::string& out, std::string_view raw) {
  for (char c : raw) {
    if (needs_escape(c)) out += '\\';
    out += c;
  }
}

Path parse_path(std::string_view text) {
  Path p;
  if (text.empty()) return p;
  std::size_t i = 0;
  auto read_until = [&](char stop, std::string& out) {
    while (i < text.size() && text[i] != stop) {
      if (text[i] == '\\') {
        if (i + 1 >= text.size()) malformed(text, i, "dangling escape");
        out += text[i + 1];
        i += 2;
        continue;
      }
      if (text[i] == '/' || text[i] == '[' || text[i] == ']') return false;
      out += text[i++];
    }
    return i < text.size();
  };
  while (true) {
    PathStep step;
    const std::size_t step_start = i;
    if (!read_until('[', step.relation)) malformed(text, i, "expected '['");
    if (step.relation.empty()) malformed(text, step_start, "empty relation name");
    ++i;
    if (!read_until(']', step.key)) malformed(text, i, "expected ']'");
    ++i;
    p.steps.push_back(std::move(step));
    if (i == text.size()) break;
    if (text[i] != '/') malformed(text, i, "expected '/'");
    ++i;
    if (i == text.size()) malformed(text, i, "empty step");
  }
  return p;
}

std::string format_path(const Path& p) {
  std::string out;
  for (const PathStep& s : p.steps) {
    if (!out.empty()) out += '/';
    append_escaped(out, s.relation);
    out += '[';
    append_escaped(out, s.key);
    out += ']';
  }
  return out;
}

ElementRef find_by_path(const Model& m, const Path& p) {
  const Element* cur = start(m);
  for (const PathStep& step : p.steps) {
    const SlotIndex slot = relation_slot(cur, step.relation);
    const Slot& s = cur->slots()[slot];
    if (cur->cls->slot(slot).many()) {
      if (!s.many) return {};
      const InternedString* key = &detail::kEmptyKey;
      if (!step.key.empty()) {
        auto atom = m.pool().find(step.key);
        if (!atom) return {};
        key = atom->get();
      }
      Element* const* hit = s.many->index.find(key);
      if (!hit) return {};
      cur = *hit;
    } else {
      if (!s.ref) return {};
      char buf[24];
      if (single_key(s.ref, buf) != step.key) return {};
      cur = s.ref;
    }
  }
  return ElementRef(const_cast<Element*>(cur));
}

ElementRef find_by_path(const Model& m, std::string_view path) { return find_by_path(m, parse_path(path)); }

ElementRef find_by_scan(const Model& m, const Path& p) {
  const Element* cur = start(m);
  auto& scans = detail::scan_counter();
  for (const PathStep& step : p.steps) {
    const SlotIndex slot = relation_slot(cur, step.relation);
    const Slot& s = cur->slots()[slot];
    const Element* next = nullptr;
    char buf[24];
    if (cur->cls->slot(slot).many()) {
      if (s.many) {
        for (const auto& entry : s.many->entries) {
          ++scans;
          const std::string_view k =
              entry.element->cls->has_id() ? detail::key_text(entry.element, buf) : detail::key_view(entry.key);
          if (k == step.key) {
            next = entry.element;
            break;
          }
        }
      }
    } else if (s.ref && single_key(s.ref, buf) == step.key) {
      next = s.ref;
    }
    if (!next) return {};
    cur = next;
  }
  return ElementRef(const_cast<Element*>(cur));
}

namespace {

template <class Emit>
void walk_up(const Model& m, const Element* e, Emit&& emit) {
  const Element* cur = e;
  while (true) {
    Element* parent = nullptr;
    SlotIndex slot = kNoSlot;
    if (!detail::ModelAccess::container(m, cur, parent, slot)) break;
    emit(parent, slot, cur);
    cur = parent;
  }
  if (cur != m.root().get()) {
    throw Error(ErrorKind::detached, "'" + e->cls->name() + "' element is not reachable from the model root");
  }
}

}  // namespace

Path path_of(const Model& m, ElementRef e) {
  Path p;
  walk_up(m, e.get(), [&](const Element* parent, SlotIndex slot, const Element* child) {
    char buf[24];
    const bool many = parent->cls->slot(slot).many();
    std::string_view key = many ? detail::key_text(child, buf) : single_key(child, buf);
    p.steps.push_back({parent->cls->slot(slot).name, std::string(key)});
  });
  std::reverse(p.steps.begin(), p.steps.end());
  return p;
}

void append_path_of(const Model& m, ElementRef e, std::string& out) {
  // Steps are gathered leaf first; collect their positions, then emit in
  // root-first order without building a Path.
  constexpr std::size_t kInline = 32;
  struct Link {
    const Element* parent;
    SlotIndex slot;
    const Element* child;
  };
  Link inline_links[kInline];
  std::vector<Link> overflow;
  std::size_t n = 0;
  walk_up(m, e.get(), [&](const Element* parent, SlotIndex slot, const Element* child) {
    if (n < kInline) {
      inline_links[n] = {parent, slot, child};
    } else {
      if (overflow.empty()) overflow.assign(inline_links, inline_links + kInline);
      overflow.push_back({parent, slot, child});
    }
    ++n;
  });
  const Link* links = overflow.empty() ? inline_links : overflow.data();
  for (std::size_t i = n; i-- > 0;) {
    const Link& l = links[i];
    if (i + 1 != n) out += '/';
    append_escaped(out, l.parent->cls->slot(l.slot).name);
    out += '[';
    char buf[24];
    const bool many = l.parent->cls->slot(l.slot).many();
    append_escaped(out, many ? detail::key_text(l.child, buf) : single_key(l.child, buf));
    out += ']';
  }
}

std::string path_string_of(const Model& m, ElementRef e) {
  std::string out;
  append_path_of(m, e, out);
  return out;
}

}  // namespace kmf
