#include <doctest.h>

#include "kmf/bench.hpp"
#include "kmf/clone.hpp"
#include "kmf/invariants.hpp"
#include "kmf/query.hpp"
#include "test_util.hpp"

using namespace kmf;
using test::error_kind_of;

TEST_CASE("full clone is deep-equal and independent") {
  Model src = build_kevoree_example();
  CloneResult r = clone_full(src);
  CHECK(r.stats.elements_copied == src.element_count());
  CHECK(r.stats.elements_shared == 0);
  CHECK(r.stats.bytes_allocated > 0);
  CHECK(deep_equal(src, r.model).equal);
  CHECK(check_invariants(r.model).empty());

  ElementRef orig = find_by_path(src, kKevoreePath);
  ElementRef copy = find_by_path(r.model, kKevoreePath);
  CHECK(orig != copy);
  r.model.set_attribute(copy, "load", 9.0);
  CHECK(src.get_attribute(orig, "load").as_float() == 0.25);
  // Non-containment refs are remapped into the clone.
  auto deps = r.model.get_refs(copy, "dependsOn");
  REQUIRE(deps.size() == 1);
  CHECK(path_string_of(r.model, deps[0]) == path_string_of(src, src.get_refs(orig, "dependsOn")[0]));
  CHECK(deps[0] != src.get_refs(orig, "dependsOn")[0]);
}

TEST_CASE("full clone keeps read-only flags") {
  Model src = build_kevoree_example();
  src.set_read_only(find_by_path(src, "nodes[node6]"));
  CloneResult r = clone_full(src);
  CHECK(find_by_path(r.model, kKevoreePath).read_only());
  CHECK_FALSE(find_by_path(r.model, kKevoreePath).shared());
  CHECK_FALSE(find_by_path(r.model, "nodes[node1]").read_only());
}

TEST_CASE("partial clone shares frozen subtrees") {
  Model src = build_kevoree_example();
  ElementRef node6 = find_by_path(src, "nodes[node6]");
  src.set_read_only(node6);
  CloneResult r = clone_partial(src);
  CHECK(deep_equal(src, r.model).equal);
  CHECK(check_invariants(r.model).empty());
  CHECK(find_by_path(r.model, kKevoreePath) == find_by_path(src, kKevoreePath));
  CHECK(find_by_path(r.model, "nodes[node6]").shared());
  CHECK(r.stats.elements_shared == 8);  // node6, node7, node8, node4, Db1 and three components
  CHECK(r.stats.elements_copied == src.element_count() - 8);
  CHECK(path_string_of(r.model, find_by_path(r.model, kKevoreePath)) == kKevoreePath);
  // The clone's root is its own.
  CHECK(r.model.root() != src.root());
}

TEST_CASE("partial clone of a mutable model copies everything") {
  Model src = build_kevoree_example();
  CloneResult r = clone_partial(src);
  CHECK(r.stats.elements_shared == 0);
  CHECK(r.stats.elements_copied == src.element_count());
}

TEST_CASE("a clone keeps shared elements alive past its source") {
  std::optional<Model> src(build_kevoree_example());
  src->set_read_only(find_by_path(*src, "nodes[node6]"));
  CloneResult r = clone_partial(*src);
  src.reset();
  ElementRef e = find_by_path(r.model, kKevoreePath);
  REQUIRE(e);
  CHECK(r.model.get_attribute(e, "name").as_string() == "FakeConso380");
  CHECK(check_invariants(r.model).empty());
  CloneResult again = clone_partial(r.model);
  CHECK(deep_equal(r.model, again.model).equal);
}

TEST_CASE("shared elements cannot be mutated through the clone") {
  Model src = build_kevoree_example();
  src.set_read_only(find_by_path(src, "nodes[node6]"));
  CloneResult r = clone_partial(src);
  ElementRef e = find_by_path(r.model, kKevoreePath);
  CHECK(error_kind_of([&] { r.model.set_attribute(e, "load", 1.0); }) == ErrorKind::read_only);
  // The mutable part is free.
  ElementRef node1 = find_by_path(r.model, "nodes[node1]");
  r.model.set_attribute(node1, "cpu", 99);
  CHECK(src.get_attribute(find_by_path(src, "nodes[node1]"), "cpu").as_int() == 4);
  // Detaching the shared subtree only affects the clone.
  CHECK(error_kind_of([&] { r.model.remove_ref(r.model.root(), "nodes", find_by_path(r.model, "nodes[node6]")); }) ==
        ErrorKind::read_only);
}

TEST_CASE("read-only element referencing a mutable one blocks partial clone") {
  Model src = build_kevoree_example();
  // Grapher12 (under node4) depends on Db1 (under node7); freeze only node4.
  src.set_read_only(find_by_path(src, "nodes[node6]/hosts[node7]/hosts[node8]/hosts[node4]"));
  CHECK(src.frozen_to_mutable_references() == 1);
  CHECK(error_kind_of([&] { clone_partial(src); }) == ErrorKind::shared_mutable_reference);
  CHECK(deep_equal(src, clone_full(src).model).equal);
  src.set_read_only(find_by_path(src, "nodes[node6]"));
  CHECK(src.frozen_to_mutable_references() == 0);
  CHECK(deep_equal(src, clone_partial(src).model).equal);
}

TEST_CASE("mutable element referencing a shared one") {
  Model src = build_kevoree_example();
  ElementRef sensor = find_by_path(src, "nodes[node1]/components[Sensor7]");
  src.add_ref(sensor, "dependsOn", find_by_path(src, kKevoreePath));
  src.set_read_only(find_by_path(src, "nodes[node6]"));
  CloneResult r = clone_partial(src);
  auto deps = r.model.get_refs(find_by_path(r.model, "nodes[node1]/components[Sensor7]"), "dependsOn");
  REQUIRE(deps.size() == 1);
  CHECK(deps[0] == find_by_path(src, kKevoreePath));
  CHECK(deep_equal(src, r.model).equal);
}

TEST_CASE("dangling references are rejected") {
  Model src = build_kevoree_example();
  ElementRef sensor = find_by_path(src, "nodes[node1]/components[Sensor7]");
  ElementRef loose = src.create_element("Instance");
  src.add_ref(sensor, "dependsOn", loose);
  CHECK(error_kind_of([&] { clone_full(src); }) == ErrorKind::detached);
}

TEST_CASE("partial clone allocates less as more is frozen") {
  CloudParams p;
  p.nodes = 40;
  Model m = generate_cloud_model(p);
  std::int64_t last = clone_partial(m).stats.bytes_allocated;
  for (std::size_t k : {10, 20, 40}) {
    freeze_nodes(m, k);
    const std::int64_t bytes = clone_partial(m).stats.bytes_allocated;
    CHECK(bytes < last);
    last = bytes;
  }
  CHECK(clone_full(m).stats.bytes_allocated > 10 * last);
}

TEST_CASE("clone of an empty model") {
  Model m(fsm_table());
  CloneResult r = clone_full(m);
  CHECK_FALSE(r.model.root());
  CHECK(r.stats.elements_copied == 0);
}
