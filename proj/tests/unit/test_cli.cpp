#include <doctest.h>

#include <filesystem>
#include <initializer_list>
#include <sstream>
#include <vector>

#include "cli.hpp"
#include "kmf/bench.hpp"
#include "kmf/io.hpp"
#include "kmf/query.hpp"
#include "test_util.hpp"

using namespace kmf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::initializer_list<std::string> args) {
  std::vector<std::string> store{"kmf"};
  store.insert(store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : store) argv.push_back(s.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / ("kmf_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

const std::string kFsmMm = std::string(KMF_METAMODELS) + "/fsm.mm";
const std::string kCloudMm = std::string(KMF_METAMODELS) + "/cloud.mm";

}  // namespace

TEST_CASE("compile prints the table summary") {
  Run r = cli({"compile", kFsmMm});
  CHECK(r.code == 0);
  CHECK(r.out.find("metamodel fsm: 4 classes") != std::string::npos);
  CHECK(r.out.find("class State id=1") != std::string::npos);
  CHECK(r.out.find("name attr string id") != std::string::npos);
  CHECK(r.err.empty());
}

TEST_CASE("compile and validate reject bad metamodels") {
  TempDir tmp;
  {
    std::ofstream f(tmp / "bad.mm");
    f << "metamodel M\nclass A : B {}\nclass B : A {}\n";
  }
  Run r = cli({"validate", tmp / "bad.mm"});
  CHECK(r.code == 1);
  CHECK(r.err.find("error") != std::string::npos);
  CHECK(r.out.empty());
  CHECK(cli({"compile", tmp / "bad.mm"}).code == 1);
  {
    std::ofstream f(tmp / "syntax.mm");
    f << "metamodel M\nclass {\n";
  }
  r = cli({"compile", tmp / "syntax.mm"});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 2") != std::string::npos);
  CHECK(cli({"compile", tmp / "absent.mm"}).code == 1);
}

TEST_CASE("validate accepts the built-in metamodels") {
  for (const auto& mm : {kFsmMm, kCloudMm}) {
    Run r = cli({"validate", mm});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("ok", 0) == 0);
  }
}

TEST_CASE("gen fsm reproduces the golden files") {
  TempDir tmp;
  CHECK(cli({"gen", "fsm", "--states", "3", "-o", tmp / "f.xmi"}).code == 0);
  CHECK(test::read_file(tmp / "f.xmi") == test::read_file(test::fixture("fsm3.xmi")));
  CHECK(cli({"gen", "fsm", "--states", "3", "-o", tmp / "f.json"}).code == 0);
  CHECK(test::read_file(tmp / "f.json") == test::read_file(test::fixture("fsm3.json")));
  CHECK(cli({"gen", "fsm", "--states", "0", "-o", tmp / "f.json"}).code == 1);
  CHECK(cli({"gen", "fsm", "--states", "3", "-o", tmp / "f.txt"}).code == 1);
}

TEST_CASE("gen cloud") {
  TempDir tmp;
  Run r = cli({"gen", "cloud", "--nodes", "8", "--depth", "4", "--components", "2", "--id-fraction", "0.5", "-o",
               tmp / "c.json.gz"});
  CHECK(r.code == 0);
  Model m = load_file(cloud_table(), tmp / "c.json.gz");
  CHECK(m.element_count() == 1 + 8 * 3);
  CHECK(find_by_path(m, "nodes[node0]/hosts[node1]/hosts[node2]/hosts[node3]"));
  CHECK(cli({"gen", "cloud", "--nodes", "8", "--id-fraction", "2", "-o", tmp / "c.xmi"}).code == 1);
}

TEST_CASE("convert between formats") {
  TempDir tmp;
  CHECK(cli({"convert", test::fixture("fsm3.xmi"), "-o", tmp / "x.json"}).code == 0);
  CHECK(test::read_file(tmp / "x.json") == test::read_file(test::fixture("fsm3.json")));
  CHECK(cli({"convert", test::fixture("fsm3.json"), "-o", tmp / "x.xmi", "--compress"}).code == 0);
  CHECK(cli({"convert", tmp / "x.xmi", "-o", tmp / "y.xmi"}).code == 0);
  CHECK(test::read_file(tmp / "y.xmi") == test::read_file(test::fixture("fsm3.xmi")));
  CHECK(cli({"convert", test::fixture("kevoree.json"), "-o", tmp / "k.xmi", "--mm", kCloudMm}).code == 0);
  CHECK(test::read_file(tmp / "k.xmi") == test::read_file(test::fixture("kevoree.xmi")));
}

TEST_CASE("convert reports bad input as a user error") {
  TempDir tmp;
  {
    std::ofstream f(tmp / "broken.xmi");
    f << "<?xml version=\"1.0\"?>\n<mm:FSM xmlns:mm=\"fsm\">\n<ownedState name=\"a\">\n";
  }
  Run r = cli({"convert", tmp / "broken.xmi", "-o", tmp / "o.json"});
  CHECK(r.code == 1);
  CHECK(r.err.find("line") != std::string::npos);
  {
    std::ofstream f(tmp / "other.json");
    f << "{\"@metamodel\":\"nope\",\"class\":\"X\"}\n";
  }
  CHECK(cli({"convert", tmp / "other.json", "-o", tmp / "o.json"}).code == 1);
}

TEST_CASE("query the running example") {
  for (const char* name : {"kevoree.xmi", "kevoree.json"}) {
    for (bool scan : {false, true}) {
      Run r = scan ? cli({"query", test::fixture(name), "--path", kKevoreePath, "--scan"})
                   : cli({"query", test::fixture(name), "--path", kKevoreePath});
      CHECK(r.code == 0);
      CHECK(r.out ==
            "ComponentInstance\n  typeName = \"FakeConsole\"\n  started = true\n  load = 0.25\n  name = \"FakeConso380\"\n");
    }
  }
}

TEST_CASE("query misses and errors") {
  Run r = cli({"query", test::fixture("kevoree.xmi"), "--path", "nodes[missing]"});
  CHECK(r.code == 1);
  CHECK(r.err.find("not found") != std::string::npos);
  CHECK(r.out.empty());
  CHECK(cli({"query", test::fixture("kevoree.xmi"), "--path", "nodes[x"}).code == 1);
  CHECK(cli({"query", test::fixture("kevoree.xmi"), "--path", "bogus[x]"}).code == 1);
  CHECK(cli({"query", test::fixture("fsm3.json"), "--path", "ownedState[s1]"}).code == 0);
}

TEST_CASE("clone full and partial") {
  TempDir tmp;
  Run r = cli({"clone", test::fixture("kevoree.xmi"), "-o", tmp / "k.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("full: copied=12") != std::string::npos);
  CHECK(test::read_file(tmp / "k.json") == test::read_file(test::fixture("kevoree.json")));
  r = cli({"clone", test::fixture("fsm3.xmi"), "--partial", "-o", tmp / "f.xmi"});
  CHECK(r.code == 0);
  CHECK(r.out.find("partial:") != std::string::npos);
  CHECK(test::read_file(tmp / "f.xmi") == test::read_file(test::fixture("fsm3.xmi")));
}

TEST_CASE("bench subcommands write csv") {
  TempDir tmp;
  Run r = cli({"bench", "fsm", "--states", "50", "--csv", tmp / "p.csv"});
  CHECK(r.code == 0);
  std::string csv = test::read_file(tmp / "p.csv");
  CHECK(csv.rfind("phase,iteration,duration_ns,bytes_allocated,model_elements\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 122);

  r = cli({"bench", "protocol", test::fixture("kevoree.json"), "--csv", "-"});
  CHECK(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 122);

  r = cli({"bench", "lookup", "--depth", "3", "--fanout", "30", "--paths", "100", "--csv", "-"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("depth,fanout,paths,scan_ns,indexed_ns,speedup,agree\n3,30,100,", 0) == 0);

  r = cli({"bench", "clone", "--fraction", "0.5", "--reps", "3", "--csv", "-"});
  CHECK(r.code == 0);
  CHECK(r.out.find("partial,0.5,") != std::string::npos);
  CHECK(r.out.find("full,0.5,") != std::string::npos);

  r = cli({"bench", "clone", "--fraction", "0.99", "--threads", "3", "--mutations", "50", "--csv", "-"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\n3,") != std::string::npos);
  CHECK(r.out.substr(r.out.size() - 2) == "1\n");

  CHECK(cli({"bench", "nope"}).code == 1);
  CHECK(cli({"bench", "protocol", "--csv", "-"}).code == 1);
}

TEST_CASE("argument errors") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"query", test::fixture("kevoree.xmi")}).code == 1);
  CHECK(cli({"--help"}).code == 0);
}
