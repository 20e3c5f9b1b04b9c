#include "kmf/invariants.hpp"

#include <unordered_set>

#include "kmf/query.hpp"
#include "model_internal.hpp"

namespace kmf {

namespace {

bool holds(const Element* holder, SlotIndex slot, const Element* target) {
  const Slot& s = holder->slots()[slot];
  if (!holder->cls->slot(slot).many()) return s.ref == target;
  if (!s.many) return false;
  for (const auto& entry : s.many->entries) {
    if (entry.element == target) return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> check_invariants(const Model& m) {
  std::vector<std::string> out;
  const Element* root = m.root().get();
  if (!root) return out;

  std::unordered_set<const Element*> seen;
  std::vector<const Element*> stack{root};
  auto where = [&](const Element* e) {
    try {
      return "'" + e->cls->name() + "' at '" + path_string_of(m, ElementRef(const_cast<Element*>(e))) + "'";
    } catch (const std::exception&) {
      return "'" + e->cls->name() + "' (unreachable)";
    }
  };
  auto visit_child = [&](const Element* parent, SlotIndex slot, const Element* child) {
    Element* p = nullptr;
    SlotIndex s = kNoSlot;
    detail::ModelAccess::container(m, child, p, s);
    if (p != parent || s != slot) out.push_back("container link of " + where(child) + " does not match the tree");
    if (parent->read_only() && !child->read_only()) out.push_back("mutable child " + where(child) + " under a read-only element");
    if (!seen.insert(child).second) {
      out.push_back(where(child) + " is contained more than once");
      return;
    }
    stack.push_back(child);
  };
  seen.insert(root);

  while (!stack.empty()) {
    const Element* e = stack.back();
    stack.pop_back();
    const ClassLayout& cls = *e->cls;
    if (e->has_flag(element_flags::shared) && !e->read_only()) out.push_back("shared element " + where(e) + " is mutable");
    if (e->has_flag(element_flags::unborn)) out.push_back("placeholder element " + where(e) + " was never defined");
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      const Slot& s = e->slots()[i];
      std::vector<const Element*> targets;
      if (def.many()) {
        if (s.many) {
          const RelationshipStore& store = *s.many;
          if (store.index.size() != store.entries.size()) {
            out.push_back("index of " + where(e) + "." + def.name + " has " + std::to_string(store.index.size()) +
                          " keys for " + std::to_string(store.entries.size()) + " entries");
          }
          for (const auto& entry : store.entries) {
            Element* const* hit = store.index.find(entry.key);
            if (!hit || *hit != entry.element) {
              out.push_back("entry '" + std::string(entry.key->view()) + "' of " + where(e) + "." + def.name + " is not indexed");
            }
            char buf[24];
            const bool keyed = entry.element->cls->has_id() || def.containment;
            if (keyed && detail::key_text(entry.element, buf) != entry.key->view()) {
              out.push_back("stale key '" + std::string(entry.key->view()) + "' in " + where(e) + "." + def.name);
            }
            targets.push_back(entry.element);
          }
          if (def.upper != kUnbounded && store.entries.size() > def.upper) {
            out.push_back(where(e) + "." + def.name + " exceeds its upper bound");
          }
        }
      } else if (s.ref) {
        targets.push_back(s.ref);
      }
      for (const Element* t : targets) {
        if (!t->cls->conforms_to(def.target)) out.push_back(where(e) + "." + def.name + " holds a non-conforming element");
        if (def.containment) {
          visit_child(e, i, t);
        } else if (def.opposite != kNoSlot && !holds(t, def.opposite, e)) {
          out.push_back("opposite of " + where(e) + "." + def.name + " is not symmetric");
        }
      }
    }
  }
  return out;
}

}  // namespace kmf
