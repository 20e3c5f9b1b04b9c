#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "kmf/alloc.hpp"
#include "kmf/bench.hpp"
#include "kmf/error.hpp"
#include "kmf/invariants.hpp"
#include "kmf/query.hpp"
#include "model_internal.hpp"

namespace kmf {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point t0) {
  const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
  return static_cast<std::uint64_t>(std::max<std::int64_t>(ns, 1));
}

template <class T>
T median(std::vector<T> v) {
  if (v.empty()) return T{};
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

template <class F>
Sample timed(F&& f) {
  alloc::Scope scope;
  const auto t0 = Clock::now();
  f();
  Sample s;
  s.duration_ns = elapsed_ns(t0);
  s.bytes_allocated = static_cast<std::int64_t>(scope.total());
  return s;
}

template <class F>
void phase(const char* name, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + " phase failed: " + e.what());
  }
}

}  // namespace

ProtocolMetrics run_protocol(const std::string& model_file, std::shared_ptr<const DispatchTable> table) {
  constexpr int kWarmup = 3;
  ProtocolMetrics out;
  SerializationOptions opts;
  std::string bytes;
  phase("load", [&] {
    opts = options_for_path(model_file);
    std::ifstream is(model_file, std::ios::binary);
    if (!is) throw Error(ErrorKind::io, "cannot open '" + model_file + "'");
    bytes.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  });
  auto load_once = [&] {
    std::istringstream is(bytes);
    return load(table, is, opts);
  };

  std::optional<Model> model;
  phase("load", [&] {
    for (int i = 0; i < kWarmup; ++i) load_once();
    for (int i = 0; i < 10; ++i) {
      model.reset();
      out.load.push_back(timed([&] { model.emplace(load_once()); }));
    }
  });
  out.model_elements = model->element_count();

  std::optional<Model> last_clone;
  phase("clone", [&] {
    for (int i = 0; i < kWarmup; ++i) clone_full(*model);
    for (int i = 0; i < 100; ++i) {
      last_clone.reset();
      out.clone.push_back(timed([&] { last_clone.emplace(clone_full(*model).model); }));
    }
  });

  phase("compare", [&] {
    for (int i = 0; i < kWarmup; ++i) deep_equal(*model, *last_clone);
    DiffReport report;
    out.compare.push_back(timed([&] { report = deep_equal(*model, *last_clone); }));
    out.compare_equal = report.equal;
  });

  phase("save", [&] {
    std::ostringstream sink;
    for (int i = 0; i < kWarmup; ++i) {
      sink.str({});
      save(*model, sink, opts);
    }
    for (int i = 0; i < 10; ++i) {
      sink.str({});
      out.save.push_back(timed([&] { save(*model, sink, opts); }));
    }
  });
  return out;
}

void emit_csv(const ProtocolMetrics& m, std::ostream& out) {
  out << "phase,iteration,duration_ns,bytes_allocated,model_elements\n";
  auto rows = [&](const char* name, const std::vector<Sample>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      out << name << ',' << i << ',' << v[i].duration_ns << ',' << v[i].bytes_allocated << ',' << m.model_elements << '\n';
    }
  };
  rows("load", m.load);
  rows("clone", m.clone);
  rows("compare", m.compare);
  rows("save", m.save);
}

// --- lookup -----------------------------------------------------------------

Model generate_lookup_model(std::size_t depth, std::size_t fanout, std::uint64_t seed) {
  Model m(cloud_table());
  std::mt19937_64 rng(seed);
  ElementRef root = m.create_element("ContainerRoot");
  m.set_root(root);
  ElementRef parent = root;
  const std::size_t node_levels = depth > 1 ? depth - 1 : 0;
  for (std::size_t level = 1; level <= node_levels; ++level) {
    const std::size_t spine = rng() % fanout;
    ElementRef next;
    for (std::size_t i = 0; i < fanout; ++i) {
      ElementRef n = m.create_element("ContainerNode");
      m.set_attribute(n, "name", "n" + std::to_string(level) + "_" + std::to_string(i));
      m.add_ref(parent, level == 1 ? "nodes" : "hosts", n);
      if (i == spine) next = n;
    }
    parent = next;
  }
  if (parent != root) {
    for (std::size_t i = 0; i < fanout; ++i) {
      ElementRef ci = m.create_element("ComponentInstance");
      m.set_attribute(ci, "name", "c" + std::to_string(i));
      m.set_attribute(ci, "typeName", "FakeConsole");
      m.add_ref(parent, "components", ci);
    }
  }
  return m;
}

LookupResult bench_lookup(std::size_t depth, std::size_t fanout, std::size_t n_paths, std::uint64_t seed) {
  Model m = generate_lookup_model(depth, fanout, seed);
  std::mt19937_64 rng(seed + 1);

  // Targets: elements of the two deepest levels.
  std::vector<ElementRef> deep;
  std::vector<std::pair<ElementRef, std::size_t>> stack{{m.root(), 0}};
  while (!stack.empty()) {
    auto [e, d] = stack.back();
    stack.pop_back();
    if (d + 1 >= depth) deep.push_back(e);
    for (SlotIndex i : e.layout().reference_slots()) {
      if (!e.layout().slot(i).containment) continue;
      for (ElementRef c : m.get_refs(e, i)) stack.push_back({c, d + 1});
    }
  }
  std::vector<Path> paths;
  paths.reserve(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    Path p = path_of(m, deep[rng() % deep.size()]);
    if (i % 10 == 9 && !p.empty()) p.steps.back().key = "absent" + std::to_string(i);
    paths.push_back(std::move(p));
  }

  LookupResult r;
  r.paths = paths.size();
  for (const Path& p : paths) {
    if (find_by_path(m, p) != find_by_scan(m, p)) r.agree = false;
  }
  constexpr int kReps = 15;
  std::vector<double> scan, indexed;
  std::uintptr_t sink = 0;
  const std::uint64_t scans_before = scan_count();
  for (int rep = 0; rep < kReps + 2; ++rep) {
    auto t0 = Clock::now();
    for (const Path& p : paths) sink += reinterpret_cast<std::uintptr_t>(find_by_path(m, p).get());
    const double idx = static_cast<double>(elapsed_ns(t0)) / static_cast<double>(paths.size());
    if (rep == 0) r.indexed_scans = scan_count() - scans_before;
    t0 = Clock::now();
    for (const Path& p : paths) sink += reinterpret_cast<std::uintptr_t>(find_by_scan(m, p).get());
    const double sc = static_cast<double>(elapsed_ns(t0)) / static_cast<double>(paths.size());
    if (rep >= 2) {
      indexed.push_back(idx);
      scan.push_back(sc);
    }
  }
  if (sink == 1) r.agree = false;  // keeps the loops observable
  r.indexed_ns = median(indexed);
  r.scan_ns = median(scan);
  return r;
}

// --- clones -----------------------------------------------------------------

ClonePair measure_clones(const Model& m, std::size_t reps) {
  for (int i = 0; i < 3; ++i) {
    clone_partial(m);
    clone_full(m);
  }
  std::vector<std::uint64_t> partial_ns, full_ns;
  ClonePair out;
  for (std::size_t i = 0; i < reps; ++i) {
    {
      CloneResult p = clone_partial(m);
      partial_ns.push_back(p.stats.duration_ns);
      out.partial = p.stats;
    }
    {
      CloneResult f = clone_full(m);
      full_ns.push_back(f.stats.duration_ns);
      out.full = f.stats;
    }
  }
  out.partial.duration_ns = median(partial_ns);
  out.full.duration_ns = median(full_ns);
  return out;
}

ClonePair bench_partial_clone(double readonly_fraction, std::size_t reps) {
  CloudParams p;
  p.nodes = 400;
  p.depth = 1;
  p.components_per_node = 10;
  p.seed = 42;
  Model m = generate_cloud_model(p);
  freeze_nodes(m, static_cast<std::size_t>(std::lround(readonly_fraction * static_cast<double>(p.nodes))));
  return measure_clones(m, reps);
}

// --- concurrency ------------------------------------------------------------

namespace {

// Bytes of every read-only element reachable in `m`: header fields that do
// not track sharing (reference count and flags are excluded), slot words,
// relationship entries and attribute strings.
std::string shared_zone_bytes(const Model& m) {
  std::string out;
  auto raw = [&](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
  std::vector<const Element*> stack{m.root().get()};
  while (!stack.empty()) {
    const Element* e = stack.back();
    stack.pop_back();
    if (!e) continue;
    const ClassLayout& cls = *e->cls;
    const bool frozen = e->read_only();
    if (frozen) {
      raw(&e->cls, sizeof e->cls);
      raw(&e->container, sizeof e->container);
      raw(&e->auto_key, sizeof e->auto_key);
      raw(&e->frozen_size, sizeof e->frozen_size);
      raw(&e->container_slot, sizeof e->container_slot);
      raw(e->slots(), cls.slot_count() * sizeof(Slot));
      for (SlotIndex i : cls.attribute_slots()) {
        if (cls.slot(i).type == AttrType::string_type) out += Atom(e->slots()[i].str).view();
      }
    }
    for (SlotIndex i : cls.reference_slots()) {
      const SlotDef& def = cls.slot(i);
      const Slot& s = e->slots()[i];
      if (def.many()) {
        if (!s.many) continue;
        if (frozen) {
          raw(&s.many->next_auto, sizeof s.many->next_auto);
          for (const auto& en : s.many->entries) raw(&en, sizeof en);
        }
        if (def.containment) {
          for (const auto& en : s.many->entries) stack.push_back(en.element);
        }
      } else if (def.containment) {
        stack.push_back(s.ref);
      }
    }
  }
  return out;
}

}  // namespace

ConcurrencyReport run_concurrent_clones(const Model& source, std::size_t threads, std::size_t mutations_per_thread,
                                        std::uint64_t seed) {
  ConcurrencyReport report;
  report.threads = threads;
  const std::string before = shared_zone_bytes(source);

  std::vector<Model> clones;
  for (std::size_t i = 0; i < threads; ++i) clones.push_back(clone_partial(source).model);

  struct Tally {
    std::size_t ok = 0, rejected = 0, unexpected = 0;
    std::vector<std::string> violations;
  };
  std::vector<Tally> tallies(threads);

  auto work = [&](std::size_t t) {
    Model& m = clones[t];
    Tally& tally = tallies[t];
    std::mt19937_64 rng(seed + t);
    std::vector<ElementRef> mutable_nodes, shared;
    std::vector<ElementRef> stack{m.root()};
    while (!stack.empty()) {
      ElementRef e = stack.back();
      stack.pop_back();
      if (e.read_only()) {
        shared.push_back(e);
      } else if (e.class_name() == "ContainerNode") {
        mutable_nodes.push_back(e);
      }
      for (SlotIndex i : e.layout().reference_slots()) {
        if (!e.layout().slot(i).containment) continue;
        for (ElementRef c : m.get_refs(e, i)) stack.push_back(c);
      }
    }
    std::size_t fresh = 0;
    for (std::size_t k = 0; k < mutations_per_thread; ++k) {
      const auto op = rng() % 6;
      try {
        if (op <= 3 && mutable_nodes.empty()) continue;
        if (op >= 4 && shared.empty()) continue;
        ElementRef node = mutable_nodes.empty() ? ElementRef() : mutable_nodes[rng() % mutable_nodes.size()];
        switch (op) {
          case 0:
            m.set_attribute(node, "cpu", static_cast<std::int64_t>(rng() % 128));
            ++tally.ok;
            break;
          case 1: {
            ElementRef ci = m.create_element("ComponentInstance");
            m.set_attribute(ci, "name", "t" + std::to_string(t) + "_" + std::to_string(fresh++));
            m.add_ref(node, "components", ci);
            ++tally.ok;
            break;
          }
          case 2: {
            auto comps = m.get_refs(node, "components");
            std::vector<ElementRef> own;
            for (ElementRef c : comps) {
              if (!c.read_only()) own.push_back(c);
            }
            if (own.empty()) break;
            ElementRef victim = own[rng() % own.size()];
            for (ElementRef c : comps) {
              if (!c.read_only()) m.remove_ref(c, "dependsOn", victim);
            }
            m.remove_ref(node, "components", victim);
            ++tally.ok;
            break;
          }
          case 3: {
            for (ElementRef c : m.get_refs(node, "components")) {
              if (!c.read_only() && c.class_name() == "ComponentInstance") {
                m.set_attribute(c, "name", "r" + std::to_string(t) + "_" + std::to_string(fresh++));
                ++tally.ok;
                break;
              }
            }
            break;
          }
          default: {
            ElementRef e = shared[rng() % shared.size()];
            try {
              if (op == 4) {
                const SlotIndex a = e.layout().attribute_slots().empty() ? kNoSlot : e.layout().attribute_slots().front();
                if (a == kNoSlot) {
                  m.set_root(e);
                } else {
                  m.set_attribute(e, a, m.get_attribute(e, a));
                }
              } else {
                const auto& refs = e.layout().reference_slots();
                if (refs.empty()) {
                  m.set_read_only(e);
                  throw Error(ErrorKind::read_only, "no reference to probe");
                }
                m.add_ref(e, refs.front(), m.create_element("ComponentInstance"));
              }
              ++tally.unexpected;
            } catch (const Error& err) {
              if (err.kind() == ErrorKind::read_only) {
                ++tally.rejected;
              } else {
                ++tally.unexpected;
              }
            }
          }
        }
      } catch (const Error&) {
        ++tally.unexpected;
      }
    }
    for (std::string& v : check_invariants(m)) tally.violations.push_back("clone " + std::to_string(t) + ": " + std::move(v));
  };

  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
  for (std::thread& th : pool) th.join();

  for (Tally& t : tallies) {
    report.mutations += t.ok;
    report.rejected_shared += t.rejected;
    report.unexpected_errors += t.unexpected;
    for (auto& v : t.violations) report.violations.push_back(std::move(v));
  }
  report.shared_zone_unchanged = shared_zone_bytes(source) == before;
  return report;
}

}  // namespace kmf
