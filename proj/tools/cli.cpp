#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "kmf/bench.hpp"
#include "kmf/clone.hpp"
#include "kmf/error.hpp"
#include "kmf/io.hpp"
#include "kmf/metamodel.hpp"
#include "kmf/query.hpp"

namespace kmf {

namespace {

// Bad input from the user (as opposed to a library failure).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::shared_ptr<const DispatchTable> table_for(const std::string& model_path, const std::string& mm_path) {
  if (!mm_path.empty()) return compile_dispatch(parse_metamodel(read_text(mm_path)));
  const std::string name = peek_metamodel_name(model_path);
  auto t = builtin_table(name);
  if (!t) throw UsageError("unknown metamodel '" + name + "' in " + model_path + " (use --mm)");
  return t;
}

void print_table(const DispatchTable& t, std::ostream& out) {
  out << "metamodel " << t.metamodel_name() << ": " << t.class_count() << " classes\n";
  for (ClassId c = 0; c < t.class_count(); ++c) {
    const ClassLayout& cls = t.layout(c);
    out << "class " << cls.name() << " id=" << cls.id();
    if (cls.super() != kNoClass) out << " super=" << t.layout(cls.super()).name();
    out << " slots=" << cls.slot_count() << '\n';
    for (SlotIndex i = 0; i < cls.slot_count(); ++i) {
      const SlotDef& s = cls.slot(i);
      out << "  [" << i << "] " << s.name << ' ';
      if (s.is_attribute()) {
        out << "attr " << to_string(s.type) << (s.is_id ? " id" : "");
      } else {
        out << "ref " << t.layout(s.target).name() << " [" << s.lower << "..";
        if (s.upper == kUnbounded) {
          out << '*';
        } else {
          out << s.upper;
        }
        out << ']' << (s.containment ? " containment" : "");
        if (s.opposite != kNoSlot) out << " opposite " << t.layout(s.target).slot(s.opposite).name;
      }
      out << '\n';
    }
  }
}

void write_csv(const std::string& path, const std::string& body, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << body;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << body;
  if (!f.flush()) throw UsageError("cannot write '" + path + "'");
}

SerializationOptions output_options(const std::string& path, bool compress, bool pretty) {
  SerializationOptions o = options_for_path(path);
  o.compress = o.compress || compress;
  o.pretty = pretty;
  return o;
}

void print_clone_stats(const char* kind, const CloneStats& s, std::ostream& out) {
  out << kind << ": copied=" << s.elements_copied << " shared=" << s.elements_shared << " bytes=" << s.bytes_allocated
      << " duration_ns=" << s.duration_ns << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Models-at-runtime toolkit: metamodels, model IO, queries, clones and benchmarks"};
  app.require_subcommand(1, 1);
  int verbose = 0;
  app.add_flag("-v,--verbose", verbose, "More diagnostics");

  std::string mm_file, model_file, out_file, path_text, mm_override, csv_file;
  bool compress = false, pretty = false, scan = false, partial = false;

  auto* compile = app.add_subcommand("compile", "Compile a metamodel and print its dispatch table");
  compile->add_option("metamodel", mm_file, "Metamodel file (.mm)")->required();

  auto* validate = app.add_subcommand("validate", "Validate a metamodel");
  validate->add_option("metamodel", mm_file, "Metamodel file (.mm)")->required();

  auto* gen = app.add_subcommand("gen", "Generate a model");
  gen->require_subcommand(1, 1);
  std::size_t states = 0;
  CloudParams cloud;
  auto* gen_fsm = gen->add_subcommand("fsm", "Flat finite state machine");
  gen_fsm->add_option("--states", states, "Number of states")->required()->check(CLI::PositiveNumber);
  gen_fsm->add_option("-o,--output", out_file, "Output file (.xmi/.json[.gz])")->required();
  gen_fsm->add_flag("--compress", compress, "gzip the output");
  gen_fsm->add_flag("--pretty", pretty, "Indent JSON output");
  auto* gen_cloud = gen->add_subcommand("cloud", "Cloud topology");
  gen_cloud->add_option("--nodes", cloud.nodes, "Node count")->required()->check(CLI::PositiveNumber);
  gen_cloud->add_option("--depth", cloud.depth, "Hosting depth")->check(CLI::PositiveNumber);
  gen_cloud->add_option("--components", cloud.components_per_node, "Components per node")->check(CLI::PositiveNumber);
  gen_cloud->add_option("--id-fraction", cloud.id_fraction, "Share of components with an id")->check(CLI::Range(0.0, 1.0));
  gen_cloud->add_option("--seed", cloud.seed, "Random seed");
  gen_cloud->add_option("-o,--output", out_file, "Output file (.xmi/.json[.gz])")->required();
  gen_cloud->add_flag("--compress", compress, "gzip the output");
  gen_cloud->add_flag("--pretty", pretty, "Indent JSON output");

  auto* convert = app.add_subcommand("convert", "Convert a model between formats");
  convert->add_option("input", model_file, "Input model")->required();
  convert->add_option("-o,--output", out_file, "Output file (.xmi/.json[.gz])")->required();
  convert->add_flag("--compress", compress, "gzip the output");
  convert->add_flag("--pretty", pretty, "Indent JSON output");
  convert->add_option("--mm", mm_override, "Metamodel file instead of the built-in one");

  auto* query = app.add_subcommand("query", "Look an element up by path");
  query->add_option("model", model_file, "Model file")->required();
  query->add_option("--path", path_text, "Path such as nodes[a]/hosts[b]")->required();
  query->add_flag("--scan", scan, "Resolve by linear scan instead of the index");
  query->add_option("--mm", mm_override, "Metamodel file instead of the built-in one");

  auto* clone = app.add_subcommand("clone", "Clone a model and save the copy");
  clone->add_option("model", model_file, "Model file")->required();
  clone->add_flag("--partial", partial, "Share read-only subtrees");
  clone->add_option("-o,--output", out_file, "Output file")->required();
  clone->add_flag("--compress", compress, "gzip the output");
  clone->add_option("--mm", mm_override, "Metamodel file instead of the built-in one");

  auto* bench = app.add_subcommand("bench", "Run a benchmark");
  std::string bench_kind, bench_model;
  std::size_t reps = 21, depth = 5, fanout = 1000, paths = 1000, threads = 1, mutations = 1000;
  double fraction = 0.99;
  bench->add_option("kind", bench_kind, "fsm, clone, lookup or protocol")
      ->required()
      ->check(CLI::IsMember({"fsm", "clone", "lookup", "protocol"}));
  bench->add_option("model", bench_model, "Model file (protocol)");
  bench->add_option("--states", states, "FSM states (fsm)");
  bench->add_option("--fraction", fraction, "Read-only fraction (clone)")->check(CLI::Range(0.0, 1.0));
  bench->add_option("--reps", reps, "Repetitions (clone)")->check(CLI::PositiveNumber);
  bench->add_option("--depth", depth, "Depth (lookup)")->check(CLI::PositiveNumber);
  bench->add_option("--fanout", fanout, "Fan-out (lookup)")->check(CLI::PositiveNumber);
  bench->add_option("--paths", paths, "Random paths (lookup)")->check(CLI::PositiveNumber);
  bench->add_option("--threads", threads, "Concurrent partial clones (clone)")->check(CLI::PositiveNumber);
  bench->add_option("--mutations", mutations, "Mutations per thread (clone --threads)");
  bench->add_option("--csv", csv_file, "CSV output file, - for stdout");
  bench->add_option("--mm", mm_override, "Metamodel file instead of the built-in one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (compile->parsed()) {
      auto table = compile_dispatch(parse_metamodel(read_text(mm_file)));
      print_table(*table, out);
    } else if (validate->parsed()) {
      Metamodel m = parse_metamodel(read_text(mm_file));
      ValidationReport r = validate_metamodel(m);
      for (const Diagnostic& d : r.warnings) err << mm_file << ':' << d.loc.line << ':' << d.loc.column << ": warning: " << d.message << '\n';
      for (const Diagnostic& d : r.errors) err << mm_file << ':' << d.loc.line << ':' << d.loc.column << ": error: " << d.message << '\n';
      if (!r.ok()) return 1;
      out << "ok: metamodel " << m.name << ", " << m.classes.size() << " classes\n";
    } else if (gen_fsm->parsed()) {
      const auto opts = output_options(out_file, compress, pretty);
      Model m = generate_flat_fsm(states);
      save_file(m, out_file, opts);
      out << "wrote " << m.element_count() << " elements to " << out_file << '\n';
    } else if (gen_cloud->parsed()) {
      const auto opts = output_options(out_file, compress, pretty);
      Model m = generate_cloud_model(cloud);
      save_file(m, out_file, opts);
      out << "wrote " << m.element_count() << " elements to " << out_file << '\n';
    } else if (convert->parsed()) {
      const auto opts = output_options(out_file, compress, pretty);
      Model m = load_file(table_for(model_file, mm_override), model_file);
      save_file(m, out_file, opts);
      out << "wrote " << m.element_count() << " elements to " << out_file << '\n';
    } else if (query->parsed()) {
      const Path p = parse_path(path_text);
      Model m = load_file(table_for(model_file, mm_override), model_file);
      ElementRef e = scan ? find_by_scan(m, p) : find_by_path(m, p);
      if (!e) {
        err << "not found: " << path_text << '\n';
        return 1;
      }
      out << e.class_name() << '\n';
      for (SlotIndex i : e.layout().attribute_slots()) {
        out << "  " << e.layout().slot(i).name << " = " << m.get_attribute(e, i).display() << '\n';
      }
    } else if (clone->parsed()) {
      const auto opts = output_options(out_file, compress, false);
      Model m = load_file(table_for(model_file, mm_override), model_file);
      CloneResult r = partial ? clone_partial(m) : clone_full(m);
      save_file(r.model, out_file, opts);
      print_clone_stats(partial ? "partial" : "full", r.stats, out);
    } else if (bench->parsed()) {
      std::ostringstream csv;
      if (bench_kind == "fsm" || bench_kind == "protocol") {
        std::string file = bench_model;
        std::filesystem::path tmp;
        std::shared_ptr<const DispatchTable> table;
        if (bench_kind == "fsm") {
          if (states == 0) states = 1000;
          tmp = std::filesystem::temp_directory_path() /
                ("kmf-bench-" + std::to_string(::getpid()) + ".xmi");
          save_file(generate_flat_fsm(states), tmp.string());
          file = tmp.string();
          table = fsm_table();
        } else {
          if (file.empty()) throw UsageError("bench protocol needs a model file");
          table = table_for(file, mm_override);
        }
        ProtocolMetrics pm;
        try {
          pm = run_protocol(file, table);
        } catch (...) {
          if (!tmp.empty()) std::filesystem::remove(tmp);
          throw;
        }
        if (!tmp.empty()) std::filesystem::remove(tmp);
        emit_csv(pm, csv);
        if (!pm.compare_equal) {
          err << "error: clone compared unequal to its source\n";
          return 2;
        }
      } else if (bench_kind == "clone") {
        if (threads > 1) {
          CloudParams p;
          p.seed = 42;
          Model m = generate_cloud_model(p);
          freeze_nodes(m, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(p.nodes))));
          ConcurrencyReport r = run_concurrent_clones(m, threads, mutations, 1);
          csv << "threads,mutations,rejected_shared,unexpected_errors,violations,shared_zone_unchanged\n"
              << r.threads << ',' << r.mutations << ',' << r.rejected_shared << ',' << r.unexpected_errors << ','
              << r.violations.size() << ',' << (r.shared_zone_unchanged ? 1 : 0) << '\n';
          for (const auto& v : r.violations) err << "violation: " << v << '\n';
          if (!r.violations.empty() || !r.shared_zone_unchanged || r.unexpected_errors) {
            write_csv(csv_file, csv.str(), out);
            return 2;
          }
        } else {
          ClonePair c = bench_partial_clone(fraction, reps);
          csv << "kind,readonly_fraction,duration_ns,bytes_allocated,elements_copied,elements_shared\n";
          for (auto [name, s] : {std::pair{"partial", c.partial}, std::pair{"full", c.full}}) {
            csv << name << ',' << fraction << ',' << s.duration_ns << ',' << s.bytes_allocated << ',' << s.elements_copied
                << ',' << s.elements_shared << '\n';
          }
        }
      } else {
        LookupResult r = bench_lookup(depth, fanout, paths);
        csv << "depth,fanout,paths,scan_ns,indexed_ns,speedup,agree\n"
            << depth << ',' << fanout << ',' << r.paths << ',' << r.scan_ns << ',' << r.indexed_ns << ','
            << (r.indexed_ns > 0 ? r.scan_ns / r.indexed_ns : 0.0) << ',' << (r.agree ? 1 : 0) << '\n';
        if (!r.agree) {
          write_csv(csv_file, csv.str(), out);
          err << "error: indexed and scanned lookups disagree\n";
          return 2;
        }
      }
      write_csv(csv_file, csv.str(), out);
    }
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const LoadError& e) {
    err << "error: " << model_file << ": line " << e.line() << " (byte " << e.offset() << "): " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    err << "error: line " << e.line() << ", column " << e.column() << ": " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace kmf
