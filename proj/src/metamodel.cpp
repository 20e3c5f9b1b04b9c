#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "kmf/metamodel.hpp"

namespace kmf {

std::string_view to_string(AttrType t) noexcept {
  switch (t) {
    case AttrType::string_type: return "string";
    case AttrType::int_type: return "int";
    case AttrType::float_type: return "float";
    case AttrType::bool_type: return "bool";
  }
  return "string";
}

const ClassDef* Metamodel::find_class(std::string_view n) const noexcept {
  for (const ClassDef& c : classes) {
    if (c.name == n) return &c;
  }
  return nullptr;
}

bool same_structure(const Metamodel& a, const Metamodel& b) {
  if (a.name != b.name || a.classes.size() != b.classes.size()) return false;
  for (std::size_t i = 0; i < a.classes.size(); ++i) {
    const ClassDef& x = a.classes[i];
    const ClassDef& y = b.classes[i];
    if (x.name != y.name || x.super != y.super || x.attributes.size() != y.attributes.size() ||
        x.references.size() != y.references.size()) {
      return false;
    }
    for (std::size_t k = 0; k < x.attributes.size(); ++k) {
      const auto& p = x.attributes[k];
      const auto& q = y.attributes[k];
      if (p.name != q.name || p.type != q.type || p.is_id != q.is_id) return false;
    }
    for (std::size_t k = 0; k < x.references.size(); ++k) {
      const auto& p = x.references[k];
      const auto& q = y.references[k];
      if (p.name != q.name || p.target != q.target || p.lower != q.lower || p.upper != q.upper ||
          p.containment != q.containment || p.opposite != q.opposite) {
        return false;
      }
    }
  }
  return true;
}

namespace {

struct Flat {
  // Ancestors from the root of the hierarchy down to the class itself.
  std::vector<const ClassDef*> chain;
  bool cyclic = false;
};

const ReferenceDef* find_reference(const Flat& f, std::string_view name) {
  for (const ClassDef* c : f.chain) {
    for (const ReferenceDef& r : c->references) {
      if (r.name == name) return &r;
    }
  }
  return nullptr;
}

bool is_ancestor_or_self(const Flat& f, std::string_view name) {
  return std::any_of(f.chain.begin(), f.chain.end(), [&](const ClassDef* c) { return c->name == name; });
}

}  // namespace

ValidationReport validate_metamodel(const Metamodel& m) {
  ValidationReport report;
  auto error = [&](SourceLocation loc, std::string msg) { report.errors.push_back({loc, std::move(msg)}); };

  std::unordered_map<std::string, const ClassDef*> by_name;
  for (const ClassDef& c : m.classes) {
    if (!by_name.emplace(c.name, &c).second) error(c.loc, "duplicate class '" + c.name + "'");
  }
  auto lookup = [&](const std::string& n) -> const ClassDef* {
    auto it = by_name.find(n);
    return it == by_name.end() ? nullptr : it->second;
  };

  // Inheritance: resolve chains and report each cycle once.
  std::unordered_map<const ClassDef*, Flat> flat;
  std::set<std::vector<std::string>> reported_cycles;
  for (const ClassDef& c : m.classes) {
    Flat f;
    std::vector<const ClassDef*> path;
    const ClassDef* cur = &c;
    while (cur) {
      auto again = std::find(path.begin(), path.end(), cur);
      if (again != path.end()) {
        f.cyclic = true;
        std::vector<const ClassDef*> cycle(again, path.end());
        if (cycle.front() == &c) {
          auto first = std::min_element(cycle.begin(), cycle.end(),
                                        [](const ClassDef* x, const ClassDef* y) { return x->loc < y->loc; });
          std::rotate(cycle.begin(), first, cycle.end());
          std::vector<std::string> names;
          for (const ClassDef* k : cycle) names.push_back(k->name);
          if (reported_cycles.insert(names).second) {
            std::string text;
            for (const auto& n : names) text += n + " <: ";
            text += names.front();
            error(cycle.front()->loc, "cyclic inheritance " + text);
          }
        }
        break;
      }
      path.push_back(cur);
      if (!cur->super) break;
      const ClassDef* next = lookup(*cur->super);
      if (!next) {
        error(cur->super_loc, "class '" + cur->name + "' extends undeclared class '" + *cur->super + "'");
        break;
      }
      cur = next;
    }
    if (!f.cyclic) f.chain.assign(path.rbegin(), path.rend());
    flat.emplace(&c, std::move(f));
  }

  for (const ClassDef& c : m.classes) {
    const Flat& f = flat.at(&c);
    std::size_t ids = 0;
    std::set<std::string> seen_inherited;
    std::map<std::string, SourceLocation> names;
    for (const ClassDef* k : f.chain) {
      const bool own = k == &c;
      for (const AttributeDef& a : k->attributes) {
        if (a.is_id) ++ids;
        if (!own) continue;
        if (a.is_id && a.type != AttrType::string_type && a.type != AttrType::int_type) {
          error(a.loc, "id attribute '" + c.name + "." + a.name + "' must be string or int");
        }
        if (a.name == "class") error(a.loc, "feature name 'class' is reserved");
      }
      for (const ReferenceDef& r : k->references) {
        if (!own) continue;
        if (r.name == "class") error(r.loc, "feature name 'class' is reserved");
      }
      auto note = [&](const std::string& n, SourceLocation loc) {
        auto [it, inserted] = names.emplace(n, loc);
        if (!inserted && own) error(loc, "duplicate feature '" + n + "' in class '" + c.name + "'");
      };
      for (const AttributeDef& a : k->attributes) note(a.name, a.loc);
      for (const ReferenceDef& r : k->references) note(r.name, r.loc);
    }
    if (ids > 1) error(c.loc, "class '" + c.name + "' has " + std::to_string(ids) + " id attributes");

    for (const ReferenceDef& r : c.references) {
      const std::string qualified = c.name + "." + r.name;
      if (r.upper == 0) error(r.loc, "reference '" + qualified + "' has upper bound 0");
      if (r.upper != kUnbounded && r.lower > r.upper) {
        error(r.loc, "reference '" + qualified + "' has lower bound above upper bound");
      }
      const ClassDef* target = lookup(r.target);
      if (!target) {
        error(r.loc, "reference '" + qualified + "' targets undeclared class '" + r.target + "'");
        continue;
      }
      if (!r.opposite) continue;
      if (r.containment) {
        error(r.loc, "containment reference '" + qualified + "' cannot declare an opposite");
        continue;
      }
      const Flat& tf = flat.at(target);
      if (tf.cyclic || f.cyclic) continue;
      const ReferenceDef* o = find_reference(tf, *r.opposite);
      if (!o) {
        error(r.loc, "opposite '" + *r.opposite + "' of '" + qualified + "' is not a reference of '" + r.target + "'");
      } else if (o->containment) {
        error(r.loc, "opposite '" + r.target + "." + *r.opposite + "' of '" + qualified + "' is a containment");
      } else if (o->opposite != r.name) {
        error(r.loc, "opposite '" + r.target + "." + *r.opposite + "' does not point back to '" + qualified + "'");
      } else if (!is_ancestor_or_self(f, o->target)) {
        error(r.loc, "opposite '" + r.target + "." + *r.opposite + "' cannot hold instances of '" + c.name + "'");
      }
    }
    if (!c.super && c.attributes.empty() && c.references.empty()) {
      report.warnings.push_back({c.loc, "class '" + c.name + "' declares no features"});
    }
  }

  auto by_loc = [](const Diagnostic& a, const Diagnostic& b) {
    return a.loc != b.loc ? a.loc < b.loc : a.message < b.message;
  };
  std::stable_sort(report.errors.begin(), report.errors.end(), by_loc);
  std::stable_sort(report.warnings.begin(), report.warnings.end(), by_loc);
  return report;
}

}  // namespace kmf
