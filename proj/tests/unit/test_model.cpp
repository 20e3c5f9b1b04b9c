#include <doctest.h>

#include "kmf/bench.hpp"
#include "kmf/invariants.hpp"
#include "kmf/model.hpp"
#include "kmf/query.hpp"
#include "test_util.hpp"

using namespace kmf;
using test::error_kind_of;

namespace {

struct Cloud {
  Model m{cloud_table()};
  ElementRef root;
  Cloud() {
    root = m.create_element("ContainerRoot");
    m.set_root(root);
  }
  ElementRef node(std::string_view name, ElementRef host = {}) {
    ElementRef n = m.create_element("ContainerNode");
    m.set_attribute(n, "name", name);
    m.add_ref(host ? host : root, host ? "hosts" : "nodes", n);
    return n;
  }
  ElementRef instance(ElementRef node, std::string_view type = "T") {
    ElementRef i = m.create_element("Instance");
    m.set_attribute(i, "typeName", type);
    m.add_ref(node, "components", i);
    return i;
  }
};

}  // namespace

TEST_CASE("attributes default to zero values and round-trip") {
  Cloud c;
  ElementRef n = c.node("a");
  CHECK(c.m.get_attribute(n, "cpu").as_int() == 0);
  c.m.set_attribute(n, "cpu", 12);
  c.m.set_attribute(n, "memory", std::int64_t{1} << 40);
  CHECK(c.m.get_attribute(n, "cpu").as_int() == 12);
  CHECK(c.m.get_attribute(n, "memory").as_int() == std::int64_t{1} << 40);
  ElementRef i = c.instance(n);
  CHECK(c.m.get_attribute(i, "load").as_float() == 0.0);
  CHECK(c.m.get_attribute(i, "started").as_bool() == false);
  c.m.set_attribute(i, "load", 0.1);
  c.m.set_attribute(i, "started", true);
  CHECK(c.m.get_attribute(i, "load").as_float() == 0.1);
  CHECK(c.m.get_attribute(i, "started").as_bool());
  CHECK(check_invariants(c.m).empty());
}

TEST_CASE("type and feature errors") {
  Cloud c;
  ElementRef n = c.node("a");
  CHECK(error_kind_of([&] { c.m.set_attribute(n, "cpu", "lots"); }) == ErrorKind::type_mismatch);
  CHECK(error_kind_of([&] { c.m.set_attribute(n, "nope", 1); }) == ErrorKind::unknown_feature);
  CHECK(error_kind_of([&] { c.m.get_attribute(n, "hosts"); }) == ErrorKind::unknown_feature);
  CHECK(error_kind_of([&] { c.m.add_ref(n, "cpu", n); }) == ErrorKind::unknown_feature);
  CHECK(error_kind_of([&] { c.m.create_element("Foo"); }) == ErrorKind::unknown_class);
  CHECK(error_kind_of([&] { c.m.add_ref(n, "hosts", c.m.create_element("Instance")); }) == ErrorKind::conformance);
}

TEST_CASE("an element has at most one container") {
  Cloud c;
  ElementRef a = c.node("a");
  ElementRef b = c.node("b");
  ElementRef x = c.node("x", a);
  CHECK(error_kind_of([&] { c.m.add_ref(b, "hosts", x); }) == ErrorKind::second_container);
  c.m.remove_ref(a, "hosts", x);
  CHECK_FALSE(c.m.container_of(x).has_value());
  c.m.add_ref(b, "hosts", x);
  auto link = c.m.container_of(x);
  REQUIRE(link);
  CHECK(link->parent == b);
  CHECK(check_invariants(c.m).empty());
}

TEST_CASE("containment cycles are rejected") {
  Cloud c;
  ElementRef a = c.node("a");
  ElementRef b = c.node("b", a);
  ElementRef d = c.node("d", b);
  ElementRef loose = c.m.create_element("ContainerNode");
  CHECK(error_kind_of([&] { c.m.add_ref(loose, "hosts", loose); }) == ErrorKind::containment_cycle);
  c.m.remove_ref(c.root, "nodes", a);
  CHECK(error_kind_of([&] { c.m.add_ref(d, "hosts", a); }) == ErrorKind::containment_cycle);
  CHECK(check_invariants(c.m).empty());
}

TEST_CASE("ids are unique per relationship, not globally") {
  Cloud c;
  ElementRef a = c.node("a");
  ElementRef b = c.node("b");
  c.node("x", a);
  c.node("x", b);  // same id, different relationship instance
  ElementRef dup = c.m.create_element("ContainerNode");
  c.m.set_attribute(dup, "name", "x");
  CHECK(error_kind_of([&] { c.m.add_ref(a, "hosts", dup); }) == ErrorKind::duplicate_id);
  CHECK_FALSE(c.m.container_of(dup).has_value());
  CHECK(check_invariants(c.m).empty());
}

TEST_CASE("renaming reindexes and rejects collisions") {
  Cloud c;
  ElementRef a = c.node("a");
  ElementRef b = c.node("b");
  c.m.set_attribute(a, "name", "z");
  CHECK(find_by_path(c.m, "nodes[z]") == a);
  CHECK_FALSE(find_by_path(c.m, "nodes[a]"));
  CHECK(error_kind_of([&] { c.m.set_attribute(b, "name", "z"); }) == ErrorKind::duplicate_id);
  CHECK(c.m.get_attribute(b, "name").as_string() == "b");
  CHECK(check_invariants(c.m).empty());
}

TEST_CASE("automatic keys for elements without id") {
  Cloud c;
  ElementRef n = c.node("n");
  ElementRef i0 = c.instance(n);
  ElementRef i1 = c.instance(n);
  CHECK(c.m.key_of(i0) == "0");
  CHECK(c.m.key_of(i1) == "1");
  c.m.remove_ref(n, "components", i0);
  ElementRef i2 = c.instance(n);
  CHECK(c.m.key_of(i2) == "2");
  CHECK(find_by_path(c.m, "nodes[n]/components[1]") == i1);
  CHECK(c.m.key_of(c.root).empty());
}

TEST_CASE("adding the same element twice is a duplicate") {
  Cloud c;
  ElementRef n = c.node("n");
  ElementRef i = c.instance(n);
  ElementRef j = c.instance(n);
  c.m.add_ref(i, "dependsOn", j);
  CHECK(error_kind_of([&] { c.m.add_ref(i, "dependsOn", j); }) == ErrorKind::duplicate_id);
  c.m.remove_ref(i, "dependsOn", c.root);  // absent target: no-op
  CHECK(c.m.get_refs(i, "dependsOn").size() == 1);
}

TEST_CASE("opposites stay symmetric") {
  Model m = generate_flat_fsm(3);
  ElementRef s0 = find_by_path(m, "ownedState[s0]");
  ElementRef s2 = find_by_path(m, "ownedState[s2]");
  ElementRef t = find_by_path(m, "ownedState[s0]/outgoingTransition[0]");
  REQUIRE(t);
  CHECK(m.get_ref(t, "target") == find_by_path(m, "ownedState[s1]"));
  m.set_single_ref(t, "target", s2);
  auto incoming = m.get_refs(s2, "incomingTransition");
  CHECK(std::find(incoming.begin(), incoming.end(), t) != incoming.end());
  CHECK(m.get_refs(find_by_path(m, "ownedState[s1]"), "incomingTransition").empty());
  m.remove_ref(s2, "incomingTransition", t);
  CHECK_FALSE(m.get_ref(t, "target"));
  m.add_ref(s0, "incomingTransition", t);
  CHECK(m.get_ref(t, "target") == s0);
  CHECK(check_invariants(m).empty());
}

TEST_CASE("multiplicity upper bounds") {
  auto t = compile_dispatch(parse_metamodel(
      "metamodel M\nclass R { ref xs : X [0..2] containment }\nclass X { attr k : int id }\n"));
  Model m(t);
  ElementRef r = m.create_element("R");
  m.set_root(r);
  for (int i = 0; i < 2; ++i) {
    ElementRef x = m.create_element("X");
    m.set_attribute(x, "k", i);
    m.add_ref(r, "xs", x);
  }
  ElementRef x = m.create_element("X");
  m.set_attribute(x, "k", 9);
  CHECK(error_kind_of([&] { m.add_ref(r, "xs", x); }) == ErrorKind::multiplicity);
  CHECK(find_by_path(m, "xs[1]"));
}

TEST_CASE("read-only is closed over containment and irreversible") {
  Cloud c;
  ElementRef a = c.node("a");
  ElementRef b = c.node("b", a);
  ElementRef i = c.instance(b);
  c.m.set_read_only(a);
  CHECK(a.read_only());
  CHECK(b.read_only());
  CHECK(i.read_only());
  CHECK_FALSE(c.root.read_only());
  CHECK(error_kind_of([&] { c.m.set_attribute(b, "cpu", 3); }) == ErrorKind::read_only);
  CHECK(error_kind_of([&] { c.m.add_ref(b, "hosts", c.m.create_element("ContainerNode")); }) == ErrorKind::read_only);
  CHECK(error_kind_of([&] { c.m.remove_ref(c.root, "nodes", a); }) == ErrorKind::read_only);
  // Type errors are still reported as read-only first.
  CHECK(error_kind_of([&] { c.m.set_attribute(b, "cpu", "x"); }) == ErrorKind::read_only);
  c.m.set_read_only(a);
  CHECK(a.read_only());
  CHECK(check_invariants(c.m).empty());
}

TEST_CASE("frozen elements pointing at mutable ones are counted") {
  Cloud c;
  ElementRef a = c.node("a");
  ElementRef b = c.node("b");
  ElementRef ia = c.instance(a);
  ElementRef ib = c.instance(b);
  c.m.add_ref(ia, "dependsOn", ib);
  c.m.set_read_only(a);
  CHECK(c.m.frozen_to_mutable_references() == 1);
  c.m.set_read_only(b);
  CHECK(c.m.frozen_to_mutable_references() == 0);
}

TEST_CASE("interned strings share identity") {
  Cloud c;
  ElementRef i = c.instance(c.node("a"));
  ElementRef j = c.instance(c.node("b"));
  std::string s1 = "Fake";
  std::string s2 = "Fa";
  s2 += "ke";
  c.m.set_attribute(i, "typeName", s1);
  c.m.set_attribute(j, "typeName", s2);
  CHECK(c.m.get_atom(i, "typeName") == c.m.get_atom(j, "typeName"));
  CHECK(c.m.get_atom(i, "typeName").view() == "Fake");
  InternPool& pool = c.m.pool();
  CHECK(pool.intern("Fake") == c.m.get_atom(i, "typeName"));
  CHECK(pool.intern("").empty());
}

TEST_CASE("element count and roots") {
  Cloud c;
  c.instance(c.node("a"));
  CHECK(c.m.element_count() == 3);
  ElementRef loose = c.m.create_element("ContainerNode");
  CHECK(c.m.element_count() == 3);
  CHECK(c.m.owned_count() == 4);
  ElementRef n = c.node("b");
  CHECK(error_kind_of([&] { c.m.set_root(n); }) == ErrorKind::second_container);
  c.m.set_root(loose);
  CHECK(c.m.element_count() == 1);
}

TEST_CASE("deep_equal reports each kind of difference") {
  Model a = build_kevoree_example();
  Model b = build_kevoree_example();
  CHECK(deep_equal(a, b).equal);

  ElementRef console = find_by_path(b, kKevoreePath);
  b.set_attribute(console, "load", 0.75);
  auto r = deep_equal(a, b);
  CHECK_FALSE(r.equal);
  REQUIRE(r.differences.size() == 1);
  CHECK(r.differences[0].kind == DiffKind::attribute_mismatch);
  CHECK(r.differences[0].path == kKevoreePath);

  Model c = build_kevoree_example();
  ElementRef node1 = find_by_path(c, "nodes[node1]");
  c.remove_ref(c.root(), "nodes", node1);
  r = deep_equal(a, c);
  REQUIRE_FALSE(r.differences.empty());
  CHECK(r.differences[0].kind == DiffKind::missing);
  r = deep_equal(c, a);
  CHECK(r.differences[0].kind == DiffKind::extra);

  Model d = build_kevoree_example();
  ElementRef dc = find_by_path(d, kKevoreePath);
  d.remove_ref(dc, "dependsOn", find_by_path(d, "nodes[node6]/hosts[node7]/hosts[node8]/hosts[node4]/components[Grapher12]"));
  r = deep_equal(a, d);
  REQUIRE(r.differences.size() == 1);
  CHECK(r.differences[0].kind == DiffKind::reference_mismatch);
  CHECK(to_string(DiffKind::reference_mismatch) == "reference-mismatch");

  Model f = generate_flat_fsm(2);
  CHECK(error_kind_of([&] { deep_equal(a, f); }) == ErrorKind::table_mismatch);
}

TEST_CASE("automatic keys step around ids that look like numbers") {
  Cloud c;
  ElementRef n = c.node("n");
  ElementRef named = c.m.create_element("ComponentInstance");
  c.m.set_attribute(named, "name", "0");
  c.m.add_ref(n, "components", named);
  ElementRef plain = c.instance(n);
  CHECK(c.m.key_of(plain) == "1");
  ElementRef user = c.instance(n);
  c.m.add_ref(user, "dependsOn", named);
  c.m.add_ref(user, "dependsOn", plain);
  CHECK(c.m.get_refs(user, "dependsOn").size() == 2);
  CHECK(check_invariants(c.m).empty());
  ElementRef clash = c.m.create_element("ComponentInstance");
  c.m.set_attribute(clash, "name", "1");
  CHECK(error_kind_of([&] { c.m.add_ref(n, "components", clash); }) == ErrorKind::duplicate_id);
}
