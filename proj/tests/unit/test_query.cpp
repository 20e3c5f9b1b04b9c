#include <doctest.h>

#include "kmf/bench.hpp"
#include "kmf/error.hpp"
#include "kmf/query.hpp"
#include "test_util.hpp"

using namespace kmf;
using test::error_kind_of;

TEST_CASE("parse and format paths") {
  Path p = parse_path("nodes[node6]/hosts[node7]");
  REQUIRE(p.steps.size() == 2);
  CHECK(p.steps[0] == PathStep{"nodes", "node6"});
  CHECK(p.steps[1] == PathStep{"hosts", "node7"});
  CHECK(format_path(p) == "nodes[node6]/hosts[node7]");
  CHECK(parse_path("").empty());
}

TEST_CASE("escapes round-trip") {
  Path p{{{"r", "a/b[c]\\ d"}}};
  const std::string s = format_path(p);
  CHECK(s == "r[a\\/b\\[c\\]\\\\\\ d]");
  CHECK(parse_path(s) == p);
}

TEST_CASE("malformed paths") {
  for (const char* bad : {"nodes", "nodes[a", "[a]", "nodes[a]hosts[b]", "nodes[a]/", "nodes[a]//hosts[b]", "n[a\\"}) {
    CAPTURE(bad);
    CHECK(error_kind_of([&] { parse_path(bad); }) == ErrorKind::syntax);
  }
  try {
    parse_path("nodes[a]x");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 9);
  }
}

TEST_CASE("the running example resolves") {
  Model m = build_kevoree_example();
  ElementRef e = find_by_path(m, kKevoreePath);
  REQUIRE(e);
  CHECK(m.get_attribute(e, "name").as_string() == "FakeConso380");
  CHECK(find_by_scan(m, parse_path(kKevoreePath)) == e);
  CHECK(path_string_of(m, e) == kKevoreePath);
  CHECK(path_of(m, e) == parse_path(kKevoreePath));
}

TEST_CASE("absent keys and unknown relations") {
  Model m = build_kevoree_example();
  CHECK_FALSE(find_by_path(m, "nodes[missing]"));
  CHECK_FALSE(find_by_scan(m, parse_path("nodes[missing]")));
  CHECK(error_kind_of([&] { find_by_path(m, "bogus[x]"); }) == ErrorKind::unknown_relation);
  CHECK(error_kind_of([&] { find_by_scan(m, parse_path("bogus[x]")); }) == ErrorKind::unknown_relation);
  Model empty(cloud_table());
  CHECK(error_kind_of([&] { find_by_path(empty, "nodes[a]"); }) == ErrorKind::no_root);
  CHECK(find_by_path(m, "") == m.root());
}

TEST_CASE("indexed lookup never scans") {
  Model m = build_kevoree_example();
  const auto before = scan_count();
  for (int i = 0; i < 100; ++i) find_by_path(m, kKevoreePath);
  CHECK(scan_count() == before);
  find_by_scan(m, parse_path(kKevoreePath));
  CHECK(scan_count() > before);
}

TEST_CASE("path through an automatic key") {
  Model m = build_kevoree_example();
  const char* p = "nodes[node6]/hosts[node7]/hosts[node8]/hosts[node4]/components[0]";
  ElementRef e = find_by_path(m, p);
  REQUIRE(e);
  CHECK(e.class_name() == "Instance");
  CHECK(path_string_of(m, e) == p);
}

TEST_CASE("single-valued containment steps") {
  Model m = generate_flat_fsm(2);
  ElementRef a = find_by_path(m, "ownedState[s0]/outgoingTransition[0]/action[0]");
  REQUIRE(a);
  CHECK(m.get_attribute(a, "name").as_string() == "a0");
  CHECK(path_string_of(m, a) == "ownedState[s0]/outgoingTransition[0]/action[0]");
}

TEST_CASE("detached elements have no path") {
  Model m = build_kevoree_example();
  ElementRef loose = m.create_element("ContainerNode");
  CHECK(error_kind_of([&] { path_of(m, loose); }) == ErrorKind::detached);
}

TEST_CASE("steps may follow non-containment references") {
  Model m = build_kevoree_example();
  ElementRef g = find_by_path(m, std::string(kKevoreePath) + "/dependsOn[Grapher12]");
  REQUIRE(g);
  CHECK(m.get_attribute(g, "name").as_string() == "Grapher12");
  CHECK(find_by_scan(m, parse_path(std::string(kKevoreePath) + "/dependsOn[Grapher12]")) == g);
  // The canonical path is the containment one.
  CHECK(path_string_of(m, g) == "nodes[node6]/hosts[node7]/hosts[node8]/hosts[node4]/components[Grapher12]");
}
