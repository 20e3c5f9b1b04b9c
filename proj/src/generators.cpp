#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "kmf/bench.hpp"
#include "kmf/error.hpp"
#include "kmf/metamodel.hpp"

namespace kmf {

std::shared_ptr<const DispatchTable> fsm_table() {
  static const auto table = compile_dispatch(builtin_fsm_metamodel());
  return table;
}

std::shared_ptr<const DispatchTable> cloud_table() {
  static const auto table = compile_dispatch(builtin_cloud_metamodel());
  return table;
}

std::shared_ptr<const DispatchTable> builtin_table(std::string_view name) {
  if (name == "fsm") return fsm_table();
  if (name == "cloud") return cloud_table();
  return nullptr;
}

namespace {

// Portable helpers over the raw engine (distribution objects differ between
// standard libraries).
struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  std::uint64_t below(std::uint64_t n) { return n ? engine() % n : 0; }
  double unit() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
};

std::string indexed(char prefix, std::size_t i) { return prefix + std::to_string(i); }

}  // namespace

Model generate_flat_fsm(std::size_t n_states) {
  if (n_states == 0) throw Error(ErrorKind::multiplicity, "a flat FSM needs at least one state");
  Model m(fsm_table());
  const DispatchTable& t = m.table();
  const ClassLayout& fsm_cls = t.find_class("FSM");
  const ClassLayout& state_cls = t.find_class("State");
  const ClassLayout& tr_cls = t.find_class("Transition");
  const ClassLayout& action_cls = t.find_class("Action");
  const SlotIndex owned = fsm_cls.find_slot("ownedState");
  const SlotIndex state_name = state_cls.find_slot("name");
  const SlotIndex outgoing = state_cls.find_slot("outgoingTransition");
  const SlotIndex input = tr_cls.find_slot("input");
  const SlotIndex output = tr_cls.find_slot("output");
  const SlotIndex source = tr_cls.find_slot("source");
  const SlotIndex target = tr_cls.find_slot("target");
  const SlotIndex action = tr_cls.find_slot("action");
  const SlotIndex action_name = action_cls.find_slot("name");

  ElementRef fsm = m.create_element(fsm_cls);
  m.set_root(fsm);
  m.set_attribute(fsm, "name", "fsm");
  ElementRef first, prev;
  for (std::size_t i = 0; i < n_states; ++i) {
    ElementRef s = m.create_element(state_cls);
    m.set_attribute(s, state_name, indexed('s', i));
    m.add_ref(fsm, owned, s);
    if (prev) {
      ElementRef tr = m.create_element(tr_cls);
      m.set_attribute(tr, input, indexed('i', i - 1));
      m.set_attribute(tr, output, indexed('o', i - 1));
      m.add_ref(prev, outgoing, tr);
      m.set_single_ref(tr, source, prev);
      m.set_single_ref(tr, target, s);
      ElementRef a = m.create_element(action_cls);
      m.set_attribute(a, action_name, indexed('a', i - 1));
      m.set_single_ref(tr, action, a);
    } else {
      first = s;
    }
    prev = s;
  }
  m.set_single_ref(fsm, "initialState", first);
  m.set_single_ref(fsm, "currentState", first);
  m.set_single_ref(fsm, "finalState", prev);
  return m;
}

namespace {

const char* const kTypeNames[] = {"FakeConsole", "Grapher", "Database", "WebServer", "Sensor", "Logger"};

struct CloudSlots {
  const ClassLayout& root;
  const ClassLayout& node;
  const ClassLayout& instance;
  const ClassLayout& component;
  SlotIndex nodes, name, cpu, memory, hosts, components, type_name, started, load, depends_on, comp_name;

  explicit CloudSlots(const DispatchTable& t)
      : root(t.find_class("ContainerRoot")),
        node(t.find_class("ContainerNode")),
        instance(t.find_class("Instance")),
        component(t.find_class("ComponentInstance")),
        nodes(root.find_slot("nodes")),
        name(node.find_slot("name")),
        cpu(node.find_slot("cpu")),
        memory(node.find_slot("memory")),
        hosts(node.find_slot("hosts")),
        components(node.find_slot("components")),
        type_name(instance.find_slot("typeName")),
        started(instance.find_slot("started")),
        load(instance.find_slot("load")),
        depends_on(instance.find_slot("dependsOn")),
        comp_name(component.find_slot("name")) {}
};

}  // namespace

Model generate_cloud_model(const CloudParams& p) {
  Model m(cloud_table());
  const CloudSlots c(m.table());
  Rng rng(p.seed);
  ElementRef root = m.create_element(c.root);
  m.set_root(root);
  const std::size_t depth = std::max<std::size_t>(p.depth, 1);
  std::size_t node_no = 0;
  std::size_t comp_no = 0;
  while (node_no < p.nodes) {
    ElementRef host;
    for (std::size_t level = 0; level < depth && node_no < p.nodes; ++level) {
      ElementRef n = m.create_element(c.node);
      m.set_attribute(n, c.name, indexed('n', node_no).insert(1, "ode"));
      m.set_attribute(n, c.cpu, static_cast<std::int64_t>(1 + rng.below(64)));
      m.set_attribute(n, c.memory, static_cast<std::int64_t>(256 * (1 + rng.below(64))));
      if (host) {
        m.add_ref(host, c.hosts, n);
      } else {
        m.add_ref(root, c.nodes, n);
      }
      ElementRef prev_comp;
      for (std::size_t j = 0; j < p.components_per_node; ++j) {
        const bool with_id = rng.unit() < p.id_fraction;
        ElementRef ci = m.create_element(with_id ? c.component : c.instance);
        if (with_id) m.set_attribute(ci, c.comp_name, "comp" + std::to_string(comp_no));
        ++comp_no;
        m.set_attribute(ci, c.type_name, kTypeNames[rng.below(std::size(kTypeNames))]);
        m.set_attribute(ci, c.started, rng.chance(0.5));
        m.set_attribute(ci, c.load, static_cast<double>(rng.below(1000)) / 10.0);
        m.add_ref(n, c.components, ci);
        if (prev_comp && rng.chance(0.5)) m.add_ref(ci, c.depends_on, prev_comp);
        prev_comp = ci;
      }
      host = n;
      ++node_no;
    }
  }
  return m;
}

Model build_kevoree_example() {
  Model m(cloud_table());
  const CloudSlots c(m.table());
  ElementRef root = m.create_element(c.root);
  m.set_root(root);
  auto node = [&](std::string_view name, std::int64_t cpu, std::int64_t memory, ElementRef host) {
    ElementRef n = m.create_element(c.node);
    m.set_attribute(n, c.name, name);
    m.set_attribute(n, c.cpu, cpu);
    m.set_attribute(n, c.memory, memory);
    if (host) {
      m.add_ref(host, c.hosts, n);
    } else {
      m.add_ref(root, c.nodes, n);
    }
    return n;
  };
  auto component = [&](ElementRef n, std::string_view name, std::string_view type, bool started, double load) {
    ElementRef ci = m.create_element(name.empty() ? c.instance : c.component);
    if (!name.empty()) m.set_attribute(ci, c.comp_name, name);
    m.set_attribute(ci, c.type_name, type);
    m.set_attribute(ci, c.started, started);
    m.set_attribute(ci, c.load, load);
    m.add_ref(n, c.components, ci);
    return ci;
  };
  ElementRef node6 = node("node6", 8, 16384, {});
  ElementRef node7 = node("node7", 4, 8192, node6);
  ElementRef node8 = node("node8", 2, 4096, node7);
  ElementRef node4 = node("node4", 1, 1024, node8);
  ElementRef console = component(node4, "FakeConso380", "FakeConsole", true, 0.25);
  ElementRef grapher = component(node4, "Grapher12", "Grapher", true, 0.5);
  component(node4, "", "Logger", false, 0.0);
  ElementRef db = component(node7, "Db1", "Database", true, 1.5);
  ElementRef node1 = node("node1", 4, 2048, {});
  component(node1, "Sensor7", "Sensor", true, 0.125);
  node("node2", 2, 2048, node1);
  m.add_ref(console, c.depends_on, grapher);
  m.add_ref(grapher, c.depends_on, db);
  return m;
}

void freeze_nodes(Model& m, std::size_t count) {
  auto nodes = m.get_refs(m.root(), "nodes");
  count = std::min(count, nodes.size());
  for (std::size_t i = 0; i < count; ++i) m.set_read_only(nodes[i]);
}

void freeze_components(Model& m) {
  std::vector<ElementRef> stack = m.get_refs(m.root(), "nodes");
  while (!stack.empty()) {
    ElementRef n = stack.back();
    stack.pop_back();
    for (ElementRef ci : m.get_refs(n, "components")) m.set_read_only(ci);
    for (ElementRef h : m.get_refs(n, "hosts")) stack.push_back(h);
  }
}

// --- random models ----------------------------------------------------------

namespace {

// Keys mix plain characters with everything the path and markup syntaxes
// must escape. The suffix keeps them unique.
std::string random_key(Rng& rng, std::size_t unique) {
  static const std::string_view pieces[] = {"a", "b", "Z", "0", "7", " ", "/", "[", "]", "\\", "&", "<", ">",
                                            "\"", "'", "\n", "\t", "\xC3\xA9", "\xE2\x82\xAC", "-", "_", ".", ":", "#"};
  std::string s;
  const std::size_t len = rng.below(6);
  for (std::size_t i = 0; i < len; ++i) s += pieces[rng.below(std::size(pieces))];
  // '~' appears in no piece, so the suffix is unambiguous and the key never
  // looks like an automatic one.
  s += '~';
  s += std::to_string(unique);
  return s;
}

std::string random_text(Rng& rng) {
  if (rng.chance(0.3)) return {};
  return random_key(rng, rng.below(100));
}

std::int64_t random_int(Rng& rng) {
  switch (rng.below(4)) {
    case 0: return 0;
    case 1: return static_cast<std::int64_t>(rng.below(100)) - 50;
    case 2: return static_cast<std::int64_t>(rng.engine());
    default: return static_cast<std::int64_t>(rng.below(1u << 20));
  }
}

double random_float(Rng& rng) {
  switch (rng.below(5)) {
    case 0: return 0.0;
    case 1: return static_cast<double>(rng.below(2000)) / 8.0 - 100.0;
    case 2: return std::ldexp(rng.unit(), static_cast<int>(rng.below(200)) - 100);
    case 3: return -rng.unit() * 1e12;
    default: return rng.unit();
  }
}

Model random_fsm(std::shared_ptr<const DispatchTable> table, std::size_t target, Rng& rng) {
  Model m(std::move(table));
  ElementRef fsm = m.create_element("FSM");
  m.set_root(fsm);
  m.set_attribute(fsm, "name", random_text(rng));
  std::size_t count = 1;
  std::vector<ElementRef> states;
  std::vector<ElementRef> transitions;
  std::size_t unique = 0;
  while (count < target) {
    if (states.empty() || rng.chance(0.4)) {
      ElementRef s = m.create_element("State");
      std::string name = (unique == 0 && rng.chance(0.5)) ? std::string() : random_key(rng, unique);
      ++unique;
      m.set_attribute(s, "name", name);
      m.add_ref(fsm, "ownedState", s);
      states.push_back(s);
      ++count;
    } else {
      ElementRef owner = states[rng.below(states.size())];
      ElementRef t = m.create_element("Transition");
      m.set_attribute(t, "input", random_text(rng));
      m.set_attribute(t, "output", random_text(rng));
      m.add_ref(owner, "outgoingTransition", t);
      if (rng.chance(0.8)) m.set_single_ref(t, "source", owner);
      ++count;
      if (count < target && rng.chance(0.5)) {
        ElementRef a = m.create_element("Action");
        m.set_attribute(a, "name", random_text(rng));
        m.set_single_ref(t, "action", a);
        ++count;
      }
      transitions.push_back(t);
    }
  }
  // Detach a few transitions so automatic keys have gaps.
  std::vector<ElementRef> kept;
  for (ElementRef t : transitions) {
    if (rng.chance(0.05)) {
      ElementRef owner = m.container_of(t)->parent;
      m.remove_ref(owner, "outgoingTransition", t);
    } else {
      kept.push_back(t);
    }
  }
  for (ElementRef t : kept) {
    if (rng.chance(0.8)) m.set_single_ref(t, "target", states[rng.below(states.size())]);
  }
  if (!states.empty()) {
    if (rng.chance(0.9)) m.set_single_ref(fsm, "initialState", states[rng.below(states.size())]);
    if (rng.chance(0.7)) m.set_single_ref(fsm, "finalState", states[rng.below(states.size())]);
    if (rng.chance(0.5)) m.set_single_ref(fsm, "currentState", states[rng.below(states.size())]);
  }
  return m;
}

Model random_cloud(std::shared_ptr<const DispatchTable> table, std::size_t target, Rng& rng) {
  Model m(std::move(table));
  const CloudSlots c(m.table());
  ElementRef root = m.create_element(c.root);
  m.set_root(root);
  std::size_t count = 1;
  std::vector<ElementRef> nodes;
  std::vector<ElementRef> comps;
  std::size_t unique = 0;
  while (count < target) {
    if (nodes.empty() || rng.chance(0.25)) {
      ElementRef n = m.create_element(c.node);
      m.set_attribute(n, c.name, random_key(rng, unique++));
      m.set_attribute(n, c.cpu, random_int(rng));
      m.set_attribute(n, c.memory, random_int(rng));
      if (nodes.empty() || rng.chance(0.3)) {
        m.add_ref(root, c.nodes, n);
      } else {
        m.add_ref(nodes[rng.below(nodes.size())], c.hosts, n);
      }
      nodes.push_back(n);
    } else {
      const bool with_id = rng.chance(0.6);
      ElementRef ci = m.create_element(with_id ? c.component : c.instance);
      if (with_id) m.set_attribute(ci, c.comp_name, random_key(rng, unique++));
      m.set_attribute(ci, c.type_name, random_text(rng));
      m.set_attribute(ci, c.started, rng.chance(0.5));
      m.set_attribute(ci, c.load, random_float(rng));
      m.add_ref(nodes[rng.below(nodes.size())], c.components, ci);
      comps.push_back(ci);
    }
    ++count;
  }
  std::vector<ElementRef> kept;
  for (ElementRef ci : comps) {
    if (rng.chance(0.05)) {
      m.remove_ref(m.container_of(ci)->parent, c.components, ci);
    } else {
      kept.push_back(ci);
    }
  }
  for (ElementRef ci : kept) {
    const std::size_t deps = rng.chance(0.5) ? rng.below(4) : 0;
    for (std::size_t d = 0; d < deps; ++d) {
      ElementRef other = kept[rng.below(kept.size())];
      auto current = m.get_refs(ci, c.depends_on);
      if (std::find(current.begin(), current.end(), other) == current.end()) m.add_ref(ci, c.depends_on, other);
    }
  }
  return m;
}

}  // namespace

Model generate_random_model(std::shared_ptr<const DispatchTable> table, std::size_t target_elements, std::uint64_t seed) {
  Rng rng(seed);
  target_elements = std::max<std::size_t>(target_elements, 1);
  if (table->metamodel_name() == "fsm") return random_fsm(std::move(table), target_elements, rng);
  if (table->metamodel_name() == "cloud") return random_cloud(std::move(table), target_elements, rng);
  throw Error(ErrorKind::unknown_class, "no random generator for metamodel '" + table->metamodel_name() + "'");
}

}  // namespace kmf
