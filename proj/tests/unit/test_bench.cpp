#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "kmf/bench.hpp"
#include "kmf/invariants.hpp"
#include "kmf/query.hpp"
#include "test_util.hpp"

using namespace kmf;

TEST_CASE("flat fsm shape") {
  Model m = generate_flat_fsm(100);
  ElementRef root = m.root();
  auto states = m.get_refs(root, "ownedState");
  REQUIRE(states.size() == 100);
  std::size_t transitions = 0, actions = 0;
  for (ElementRef s : states) {
    for (ElementRef t : m.get_refs(s, "outgoingTransition")) {
      ++transitions;
      actions += m.get_ref(t, "action") ? 1 : 0;
    }
  }
  CHECK(transitions == 99);
  CHECK(actions == 99);
  CHECK(m.element_count() == 1 + 100 + 99 + 99);
  CHECK(m.get_ref(root, "initialState") == states.front());
  CHECK(m.get_ref(root, "currentState") == states.front());
  CHECK(m.get_ref(root, "finalState") == states.back());
  CHECK(check_invariants(m).empty());
}

TEST_CASE("one-state fsm") {
  Model m = generate_flat_fsm(1);
  ElementRef s0 = find_by_path(m, "ownedState[s0]");
  REQUIRE(s0);
  CHECK(m.get_ref(m.root(), "initialState") == s0);
  CHECK(m.get_ref(m.root(), "finalState") == s0);
  CHECK(m.get_refs(s0, "outgoingTransition").empty());
}

TEST_CASE("3-state chain found by brute-force walk") {
  Model m = generate_flat_fsm(3);
  std::vector<std::string> order;
  ElementRef cur = m.get_ref(m.root(), "initialState");
  while (cur) {
    order.emplace_back(m.get_attribute(cur, "name").as_string());
    CHECK(find_by_scan(m, path_of(m, cur)) == cur);
    auto out = m.get_refs(cur, "outgoingTransition");
    cur = out.empty() ? ElementRef() : m.get_ref(out[0], "target");
  }
  CHECK(order == std::vector<std::string>{"s0", "s1", "s2"});
}

TEST_CASE("cloud generator arithmetic") {
  for (std::size_t depth : {1, 3, 4}) {
    CloudParams p;
    p.nodes = 40;
    p.depth = depth;
    p.components_per_node = 3;
    p.id_fraction = 0.5;
    Model m = generate_cloud_model(p);
    CHECK(m.element_count() == 1 + p.nodes * (1 + p.components_per_node));
    const std::size_t top = m.get_refs(m.root(), "nodes").size();
    CHECK(top == (p.nodes + depth - 1) / depth);
    CHECK(check_invariants(m).empty());
  }
  CloudParams p;
  CHECK(generate_cloud_model(p).get_refs(generate_cloud_model(p).root(), "nodes").size() == 400);
}

TEST_CASE("id fraction controls keyed components") {
  for (double f : {0.0, 0.28, 1.0}) {
    CloudParams p;
    p.nodes = 50;
    p.id_fraction = f;
    Model m = generate_cloud_model(p);
    std::size_t with_id = 0, total = 0;
    for (ElementRef n : m.get_refs(m.root(), "nodes")) {
      for (ElementRef c : m.get_refs(n, "components")) {
        ++total;
        with_id += c.layout().has_id();
      }
    }
    const double share = static_cast<double>(with_id) / static_cast<double>(total);
    CHECK(share == doctest::Approx(f).epsilon(0.08));
  }
}

TEST_CASE("running example shape reproduced by a depth-4 generator") {
  CloudParams p;
  p.nodes = 4;
  p.depth = 4;
  p.components_per_node = 1;
  Model m = generate_cloud_model(p);
  ElementRef bottom = find_by_path(m, "nodes[node0]/hosts[node1]/hosts[node2]/hosts[node3]");
  REQUIRE(bottom);
  CHECK(m.get_refs(bottom, "components").size() == 1);
}

TEST_CASE("generators are deterministic") {
  const SerializationOptions o{Format::json, false, false};
  CloudParams p;
  p.nodes = 30;
  p.id_fraction = 0.4;
  CHECK(save_to_string(generate_cloud_model(p), o) == save_to_string(generate_cloud_model(p), o));
  p.seed = 2;
  CloudParams q = p;
  q.seed = 3;
  CHECK(save_to_string(generate_cloud_model(p), o) != save_to_string(generate_cloud_model(q), o));
  for (auto t : {fsm_table(), cloud_table()}) {
    CHECK(save_to_string(generate_random_model(t, 500, 9), o) == save_to_string(generate_random_model(t, 500, 9), o));
  }
}

TEST_CASE("random models are consistent and round-trip") {
  for (auto t : {fsm_table(), cloud_table()}) {
    for (std::size_t n : {1, 10, 300}) {
      Model m = generate_random_model(t, n, n);
      CHECK(check_invariants(m).empty());
      CHECK(m.element_count() >= 1);
      CHECK(m.element_count() <= n + 2);
      const SerializationOptions o{Format::xmi, false, false};
      CHECK(deep_equal(m, load_from_string(t, save_to_string(m, o), o)).equal);
    }
  }
}

TEST_CASE("protocol runs every phase the right number of times") {
  const auto path = std::filesystem::temp_directory_path() / "kmf_protocol_test.json";
  save_file(generate_flat_fsm(1000), path.string());
  ProtocolMetrics pm = run_protocol(path.string(), fsm_table());
  std::filesystem::remove(path);
  CHECK(pm.load.size() == 10);
  CHECK(pm.clone.size() == 100);
  CHECK(pm.compare.size() == 1);
  CHECK(pm.save.size() == 10);
  CHECK(pm.compare_equal);
  CHECK(pm.model_elements == 1 + 1000 + 999 + 999);
  for (const auto* v : {&pm.load, &pm.clone, &pm.compare, &pm.save}) {
    for (const Sample& s : *v) {
      CHECK(s.duration_ns > 0);
      CHECK(s.bytes_allocated > 0);
    }
  }
  std::ostringstream csv;
  emit_csv(pm, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "phase,iteration,duration_ns,bytes_allocated,model_elements");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
  }
  CHECK(rows == 121);
}

TEST_CASE("protocol errors name the phase") {
  const auto path = std::filesystem::temp_directory_path() / "kmf_protocol_bad.xmi";
  {
    std::ofstream f(path);
    f << "<?xml version=\"1.0\"?><mm:FSM xmlns:mm=\"fsm\"><ownedState";
  }
  try {
    run_protocol(path.string(), fsm_table());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("load") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("lookup model and benchmark") {
  Model m = generate_lookup_model(3, 10, 1);
  CHECK(m.element_count() == 1 + 10 + 10 + 10);
  LookupResult r = bench_lookup(3, 50, 200);
  CHECK(r.agree);
  CHECK(r.paths == 200);
  CHECK(r.indexed_scans == 0);
  CHECK(r.indexed_ns > 0);
  CHECK(r.scan_ns > r.indexed_ns);
}

TEST_CASE("concurrent clones on a small model") {
  CloudParams p;
  p.nodes = 20;
  Model m = generate_cloud_model(p);
  freeze_nodes(m, 18);
  ConcurrencyReport r = run_concurrent_clones(m, 4, 200, 3);
  CHECK(r.violations.empty());
  CHECK(r.unexpected_errors == 0);
  CHECK(r.shared_zone_unchanged);
  CHECK(r.mutations > 0);
  CHECK(r.rejected_shared > 0);
}

TEST_CASE("freeze helpers") {
  CloudParams p;
  p.nodes = 10;
  Model m = generate_cloud_model(p);
  freeze_components(m);
  for (ElementRef n : m.get_refs(m.root(), "nodes")) {
    CHECK_FALSE(n.read_only());
    for (ElementRef c : m.get_refs(n, "components")) CHECK(c.read_only());
  }
  CloneResult r = clone_partial(m);
  CHECK(r.stats.elements_shared == 10 * p.components_per_node);
}
