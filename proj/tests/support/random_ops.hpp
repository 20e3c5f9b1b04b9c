#pragma once

// Random mutation driver shared by the property tests.

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kmf/error.hpp"
#include "kmf/model.hpp"

namespace kmf::test {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
inline bool chance(Rng& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

inline std::string random_text(Rng& rng, std::size_t max_len = 6) {
  static constexpr char kChars[] = "ab/[] \\xyz09\"<&\n";
  std::string s;
  const std::size_t n = pick(rng, max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s += kChars[pick(rng, sizeof kChars - 1)];
  return s;
}

inline std::vector<ElementRef> reachable(const Model& m) {
  std::vector<ElementRef> out;
  if (!m.root()) return out;
  std::vector<ElementRef> stack{m.root()};
  while (!stack.empty()) {
    ElementRef e = stack.back();
    stack.pop_back();
    out.push_back(e);
    for (SlotIndex i : e.layout().reference_slots()) {
      if (!e.layout().slot(i).containment) continue;
      for (ElementRef c : m.get_refs(e, i)) stack.push_back(c);
    }
  }
  return out;
}

/// Everything observable about the reachable part of a model, identity
/// included, as a string.
inline std::string fingerprint(const Model& m) {
  std::ostringstream os;
  for (ElementRef e : reachable(m)) {
    os << e.get() << ' ' << e.class_name() << ' ' << int(e.read_only()) << ' ' << m.key_of(e) << '{';
    for (SlotIndex i : e.layout().attribute_slots()) os << m.get_attribute(e, i).display() << ';';
    for (SlotIndex i : e.layout().reference_slots()) {
      os << '[';
      for (ElementRef t : m.get_refs(e, i)) os << t.get() << ',';
      os << ']';
    }
    os << "}\n";
  }
  return os.str();
}

inline Value random_value(Rng& rng, AttrType t) {
  switch (t) {
    case AttrType::string_type:
      return Value(std::string_view());  // replaced by caller (needs storage)
    case AttrType::int_type:
      return Value(static_cast<std::int64_t>(pick(rng, 8)));
    case AttrType::float_type:
      return Value(static_cast<double>(pick(rng, 1000)) / 8.0);
    case AttrType::bool_type:
      return Value(chance(rng, 0.5));
  }
  return Value(0);
}

/// Applies one random mutation. Returns false when the model rejected it
/// (an Error was thrown).
inline bool random_mutation(Model& m, Rng& rng, std::vector<ElementRef>& pool, ErrorKind* kind = nullptr) {
  std::vector<ElementRef> live = reachable(m);
  if (live.empty()) return true;
  ElementRef e = chance(rng, 0.15) && !pool.empty() ? pool[pick(rng, pool.size())] : live[pick(rng, live.size())];
  const ClassLayout& cls = e.layout();
  const DispatchTable& table = m.table();
  std::string text = random_text(rng, 3);
  try {
    const auto op = pick(rng, 10);
    if (op <= 2 && !cls.attribute_slots().empty()) {
      const SlotIndex s = cls.attribute_slots()[pick(rng, cls.attribute_slots().size())];
      AttrType t = cls.slot(s).type;
      if (chance(rng, 0.05)) t = static_cast<AttrType>(pick(rng, 4));  // maybe the wrong type
      Value v = t == AttrType::string_type ? Value(text) : random_value(rng, t);
      m.set_attribute(e, s, v);
    } else if (op <= 7 && !cls.reference_slots().empty()) {
      const SlotIndex s = cls.reference_slots()[pick(rng, cls.reference_slots().size())];
      const SlotDef& def = cls.slot(s);
      auto current = m.get_refs(e, s);
      if (!current.empty() && chance(rng, 0.3)) {
        ElementRef victim = current[pick(rng, current.size())];
        if (def.many()) {
          m.remove_ref(e, s, victim);
        } else {
          m.set_single_ref(e, s, ElementRef());
        }
      } else {
        ElementRef target;
        const double r = std::uniform_real_distribution<double>(0, 1)(rng);
        if (r < 0.5) {
          std::vector<ClassId> ok;
          for (ClassId c = 0; c < table.class_count(); ++c) {
            if (table.layout(c).conforms_to(def.target)) ok.push_back(c);
          }
          target = m.create_element(table.layout(ok[pick(rng, ok.size())]));
          if (target.layout().has_id()) {
            const SlotIndex id = target.layout().id_slot();
            if (target.layout().slot(id).type == AttrType::string_type) {
              m.set_attribute(target, id, text);
            } else {
              m.set_attribute(target, id, static_cast<std::int64_t>(pick(rng, 8)));
            }
          }
          pool.push_back(target);
        } else if (r < 0.95) {
          target = live[pick(rng, live.size())];
        } else {
          target = pool.empty() ? live[0] : pool[pick(rng, pool.size())];
        }
        if (def.many()) {
          m.add_ref(e, s, target);
        } else {
          m.set_single_ref(e, s, target);
        }
      }
    } else if (op == 8 && chance(rng, 0.3)) {
      m.set_read_only(e);
    } else {
      ElementRef fresh = m.create_element(table.layout(static_cast<ClassId>(pick(rng, table.class_count()))));
      pool.push_back(fresh);
    }
    return true;
  } catch (const Error& err) {
    if (kind) *kind = err.kind();
    return false;
  }
}

}  // namespace kmf::test
