#include <doctest.h>

#include <map>
#include <set>

#include "kmf/bench.hpp"
#include "kmf/clone.hpp"
#include "kmf/invariants.hpp"
#include "kmf/io.hpp"
#include "kmf/query.hpp"
#include "random_ops.hpp"
#include "test_util.hpp"

using namespace kmf;
using namespace kmf::test;

namespace {

constexpr int kCases = 1000;

std::shared_ptr<const DispatchTable> table_for_case(int i) { return i % 2 ? cloud_table() : fsm_table(); }

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += x + "\n";
  return s;
}

}  // namespace

TEST_CASE("forest invariant holds under random mutation, and rejected mutations change nothing") {
  int rejected = 0;
  for (int i = 0; i < kCases; ++i) {
    Rng rng(1000 + i);
    Model m = generate_random_model(table_for_case(i), 1 + pick(rng, 40), i);
    std::vector<ElementRef> pool;
    for (int k = 0; k < 25; ++k) {
      const std::string before = fingerprint(m);
      ErrorKind kind{};
      if (!random_mutation(m, rng, pool, &kind)) {
        ++rejected;
        INFO("case " << i << " step " << k << " rejected with " << to_string(kind));
        REQUIRE(fingerprint(m) == before);
      }
      const auto v = check_invariants(m);
      INFO("case " << i << " step " << k);
      REQUIRE_MESSAGE(v.empty(), join(v));
    }
  }
  CHECK(rejected > 0);
}

TEST_CASE("index coherence: every reachable element is found again through its path") {
  for (int i = 0; i < kCases; ++i) {
    Rng rng(2000 + i);
    Model m = generate_random_model(table_for_case(i), 1 + pick(rng, 60), i);
    std::vector<ElementRef> pool;
    for (int k = 0; k < 10; ++k) random_mutation(m, rng, pool);
    for (ElementRef e : reachable(m)) {
      const Path p = path_of(m, e);
      INFO("case " << i << " path " << format_path(p));
      REQUIRE(find_by_path(m, p) == e);
      if (e != m.root()) {
        auto link = m.container_of(e);
        REQUIRE(link);
        CHECK(p.steps.back().key == m.key_of(e));
      }
    }
  }
}

TEST_CASE("snapshot isolation: a clone and its source never see each other's mutations") {
  for (int i = 0; i < kCases; ++i) {
    Rng rng(3000 + i);
    Model src = generate_random_model(table_for_case(i), 1 + pick(rng, 40), i);
    const bool partial = i % 2 == 0;
    if (partial && src.root()) {
      auto live = reachable(src);
      for (int k = 0; k < 3; ++k) {
        ElementRef e = live[pick(rng, live.size())];
        // Freeze only subtrees that do not point at mutable elements.
        Model probe = clone_full(src).model;
        probe.set_read_only(find_by_path(probe, path_of(src, e)));
        if (probe.frozen_to_mutable_references() == 0) src.set_read_only(e);
      }
    }
    CloneResult c = partial ? clone_partial(src) : clone_full(src);
    REQUIRE(deep_equal(src, c.model).equal);
    const std::string src_before = fingerprint(src);
    std::vector<ElementRef> pool;
    for (int k = 0; k < 15; ++k) random_mutation(c.model, rng, pool);
    INFO("case " << i);
    REQUIRE(fingerprint(src) == src_before);
    REQUIRE(check_invariants(src).empty());
    const std::string clone_before = fingerprint(c.model);
    std::vector<ElementRef> pool2;
    for (int k = 0; k < 15; ++k) random_mutation(src, rng, pool2);
    REQUIRE(fingerprint(c.model) == clone_before);
    const auto v = check_invariants(c.model);
    REQUIRE_MESSAGE(v.empty(), join(v));
  }
}

TEST_CASE("read-only monotonicity: frozen elements stay frozen and unchanged") {
  std::size_t attempts = 0;
  for (int i = 0; i < kCases; ++i) {
    Rng rng(4000 + i);
    Model m = generate_random_model(table_for_case(i), 1 + pick(rng, 40), i);
    auto live = reachable(m);
    ElementRef frozen = live[pick(rng, live.size())];
    m.set_read_only(frozen);
    std::vector<ElementRef> subtree;
    for (ElementRef e : reachable(m)) {
      if (e.read_only()) subtree.push_back(e);
    }
    std::vector<ElementRef> pool;
    for (int k = 0; k < 20; ++k) {
      const std::string before = fingerprint(m);
      // Aim directly at a frozen element half of the time.
      ErrorKind kind{};
      bool ok;
      if (chance(rng, 0.5)) {
        std::vector<ElementRef> one{subtree[pick(rng, subtree.size())]};
        Model* mp = &m;
        ElementRef target = one[0];
        ok = true;
        try {
          const ClassLayout& cls = target.layout();
          if (!cls.attribute_slots().empty()) {
            const SlotIndex s = cls.attribute_slots()[0];
            mp->set_attribute(target, s, mp->get_attribute(target, s));
          } else if (!cls.reference_slots().empty()) {
            mp->add_ref(target, cls.reference_slots()[0], mp->create_element(cls));
          } else {
            continue;
          }
        } catch (const Error& e) {
          ok = false;
          kind = e.kind();
        }
        ++attempts;
        INFO("case " << i);
        REQUIRE_FALSE(ok);
        REQUIRE(kind == ErrorKind::read_only);
        REQUIRE(fingerprint(m) == before);
      } else {
        random_mutation(m, rng, pool);
      }
      for (ElementRef e : subtree) REQUIRE(e.read_only());
    }
    // Clones preserve the flag too (random edits may leave references
    // dangling, which no clone accepts).
    if (frozen != m.root() && !m.container_of(frozen)) continue;
    try {
      CloneResult c = clone_full(m);
      ElementRef copy = find_by_path(c.model, path_of(m, frozen));
      REQUIRE(copy);
      CHECK(copy.read_only());
    } catch (const Error& e) {
      REQUIRE(e.kind() == ErrorKind::detached);
    }
  }
  CHECK(attempts > static_cast<std::size_t>(kCases));
}

TEST_CASE("intern pool identity: equal strings share an atom, different strings do not") {
  for (int i = 0; i < kCases; ++i) {
    Rng rng(5000 + i);
    Model m = build_kevoree_example();
    InternPool& pool = m.pool();
    std::map<std::string, Atom> seen;
    std::set<const InternedString*> distinct;
    for (int k = 0; k < 20; ++k) {
      const std::string s = random_text(rng, 4);
      const Atom a = pool.intern(std::string(s));  // fresh buffer each time
      CHECK(a.view() == s);
      auto [it, inserted] = seen.emplace(s, a);
      if (!inserted) REQUIRE(it->second == a);
      if (!s.empty()) distinct.insert(a.get());
      if (!s.empty()) {
        auto found = pool.find(s);
        REQUIRE(found.has_value());
        REQUIRE(*found == a);
      }
    }
    std::size_t nonempty = 0;
    for (auto& [s, a] : seen) nonempty += !s.empty();
    REQUIRE(distinct.size() == nonempty);

    // Through the model API.
    ElementRef a = find_by_path(m, kKevoreePath);
    ElementRef b = find_by_path(m, "nodes[node1]/components[Sensor7]");
    const std::string x = random_text(rng, 3), y = random_text(rng, 3);
    m.set_attribute(a, "typeName", x);
    m.set_attribute(b, "typeName", y);
    REQUIRE((m.get_atom(a, "typeName") == m.get_atom(b, "typeName")) == (x == y));
    // Clones share the pool, so atoms compare across them.
    CloneResult c = clone_full(m);
    REQUIRE(c.model.get_atom(find_by_path(c.model, kKevoreePath), "typeName") == m.get_atom(a, "typeName"));
  }
}

TEST_CASE("path round-trip: format then parse is the identity") {
  for (int i = 0; i < kCases; ++i) {
    Rng rng(6000 + i);
    Path p;
    const std::size_t n = pick(rng, 5);
    for (std::size_t k = 0; k < n; ++k) {
      std::string rel = random_text(rng, 5);
      if (rel.empty()) rel = "r";
      p.steps.push_back({rel, random_text(rng, 6)});
    }
    const std::string text = format_path(p);
    INFO(text);
    REQUIRE(parse_path(text) == p);
    REQUIRE(format_path(parse_path(text)) == text);
  }
  // And through models, with awkward keys.
  for (int i = 0; i < kCases; ++i) {
    Model m = generate_random_model(cloud_table(), 30, 60000 + i);
    for (ElementRef e : reachable(m)) {
      const std::string s = path_string_of(m, e);
      REQUIRE(format_path(parse_path(s)) == s);
      REQUIRE(find_by_path(m, s) == e);
    }
  }
}

TEST_CASE("scan and index lookups agree on random paths") {
  std::size_t hits = 0, misses = 0;
  for (int i = 0; i < kCases; ++i) {
    Rng rng(7000 + i);
    Model m = generate_random_model(table_for_case(i), 1 + pick(rng, 80), i);
    std::vector<ElementRef> pool;
    for (int k = 0; k < 5; ++k) random_mutation(m, rng, pool);
    auto live = reachable(m);
    for (int k = 0; k < 10; ++k) {
      Path p = path_of(m, live[pick(rng, live.size())]);
      if (!p.empty() && chance(rng, 0.3)) p.steps[pick(rng, p.steps.size())].key = random_text(rng, 2);
      ElementRef a, b;
      ErrorKind ka{}, kb{};
      bool ea = false, eb = false;
      try {
        a = find_by_path(m, p);
      } catch (const Error& e) {
        ea = true;
        ka = e.kind();
      }
      try {
        b = find_by_scan(m, p);
      } catch (const Error& e) {
        eb = true;
        kb = e.kind();
      }
      INFO("case " << i << " path " << format_path(p));
      REQUIRE(ea == eb);
      REQUIRE(ka == kb);
      REQUIRE(a == b);
      (a ? hits : misses)++;
    }
  }
  CHECK(hits > 0);
  CHECK(misses > 0);
}

TEST_CASE("serialization round-trip on small random models") {
  for (int i = 0; i < kCases; ++i) {
    Rng rng(8000 + i);
    auto t = table_for_case(i);
    Model m = generate_random_model(t, 1 + pick(rng, 30), i);
    const SerializationOptions o{i % 4 < 2 ? Format::xmi : Format::json, i % 3 == 0, i % 5 == 0};
    const std::string s = save_to_string(m, o);
    Model back = load_from_string(t, s, o);
    INFO("case " << i);
    REQUIRE(deep_equal(m, back).equal);
    REQUIRE(check_invariants(back).empty());
    std::istringstream is(s);
    REQUIRE(deep_equal(m, load_dom_baseline(t, is, o)).equal);
  }
}
