#pragma once

// Model generators and benchmark drivers.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "kmf/clone.hpp"
#include "kmf/io.hpp"
#include "kmf/model.hpp"

namespace kmf {

/// Compiled built-in tables, shared process-wide.
std::shared_ptr<const DispatchTable> fsm_table();
std::shared_ptr<const DispatchTable> cloud_table();
/// Built-in table by metamodel name ("fsm" or "cloud"); nullptr otherwise.
std::shared_ptr<const DispatchTable> builtin_table(std::string_view name);

/// States s0..s(n-1) chained by one transition each (s_i -> s_i+1), one
/// action per transition; initial = current = s0, final = s(n-1).
/// Requires n_states >= 1.
Model generate_flat_fsm(std::size_t n_states);

struct CloudParams {
  std::size_t nodes = 400;              // total ContainerNode count
  std::size_t depth = 1;                // nesting levels of hosts chains
  std::size_t components_per_node = 10;
  double id_fraction = 1.0;             // share of components with an id
  std::uint64_t seed = 1;
};

/// Nodes are grouped in chains of `depth` (the last may be shorter); each
/// chain head is a top-level node and every other member is hosted by the
/// previous one. Element count: 1 + nodes * (1 + components_per_node).
Model generate_cloud_model(const CloudParams& p);

/// The deployment from the running example: node6 hosts node7 hosts node8
/// hosts node4, which runs the component FakeConso380, plus a few siblings.
Model build_kevoree_example();
inline constexpr const char* kKevoreePath =
    "nodes[node6]/hosts[node7]/hosts[node8]/hosts[node4]/components[FakeConso380]";

/// Random model of roughly `target_elements` elements (at least the root),
/// exercising every feature of the metamodel, awkward key characters
/// included. Deterministic for a seed.
Model generate_random_model(std::shared_ptr<const DispatchTable> table, std::size_t target_elements, std::uint64_t seed);

/// Freezes the subtrees of the first `count` top-level nodes of a cloud model.
void freeze_nodes(Model& m, std::size_t count);
/// Freezes the components of every node (nodes themselves stay mutable).
void freeze_components(Model& m);

struct Sample {
  std::uint64_t duration_ns = 0;
  std::int64_t bytes_allocated = 0;
};

struct ProtocolMetrics {
  std::vector<Sample> load;     // 10
  std::vector<Sample> clone;    // 100
  std::vector<Sample> compare;  // 1
  std::vector<Sample> save;     // 10
  std::size_t model_elements = 0;
  bool compare_equal = false;
};

/// Load x10, full clone x100, deep_equal x1, save x10, each timed phase
/// preceded by 3 untimed warm-up runs. Sample bytes are the total bytes
/// requested during the sample. Errors are rethrown tagged with the phase.
ProtocolMetrics run_protocol(const std::string& model_file, std::shared_ptr<const DispatchTable> table);

/// CSV with header `phase,iteration,duration_ns,bytes_allocated,model_elements`
/// and one row per sample.
void emit_csv(const ProtocolMetrics& m, std::ostream& out);

struct LookupResult {
  double scan_ns = 0;     // median time per lookup, linear scan
  double indexed_ns = 0;  // median time per lookup, hash index
  std::size_t paths = 0;
  bool agree = true;                 // identical results on every path
  std::uint64_t indexed_scans = 0;   // list entries scanned by find_by_path
};

/// Comb-shaped cloud model: `fanout` nodes per level, one of them hosting the
/// next level, `depth - 1` node levels and `fanout` components at the bottom.
Model generate_lookup_model(std::size_t depth, std::size_t fanout, std::uint64_t seed);
/// 1,000 paths (a tenth with an absent key) to random elements of the
/// deepest levels.
LookupResult bench_lookup(std::size_t depth, std::size_t fanout, std::size_t n_paths = 1000, std::uint64_t seed = 7);

struct ClonePair {
  CloneStats partial;  // medians over the repetitions
  CloneStats full;
};

/// Clones `m` partially and fully `reps` times each, interleaved; durations
/// are medians, byte counts come from the last repetition.
ClonePair measure_clones(const Model& m, std::size_t reps);
/// Fixed 400-node cloud model with the given fraction of top-level node
/// subtrees frozen.
ClonePair bench_partial_clone(double readonly_fraction, std::size_t reps = 21);

struct ConcurrencyReport {
  std::size_t threads = 0;
  std::size_t mutations = 0;            // successful mutations over all threads
  std::size_t rejected_shared = 0;      // read-only violations on shared elements
  std::size_t unexpected_errors = 0;
  std::vector<std::string> violations;  // invariant violations, per clone
  bool shared_zone_unchanged = false;
};

/// Hands one partial clone of `source` to each of `threads` threads, which
/// mutate their mutable part and try (and must fail) to mutate shared
/// elements. Checks every clone's invariants and the shared zone's bytes.
ConcurrencyReport run_concurrent_clones(const Model& source, std::size_t threads, std::size_t mutations_per_thread,
                                        std::uint64_t seed);

}  // namespace kmf
