#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef CRAMP_CLI_PATH
#error "CRAMP_CLI_PATH must point at the cramp executable"
#endif

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CRAMP_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "cramp-cli-test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_table(dir / "x.csv", 20, 30, 1.0, 1);
    write_table(dir / "y.csv", 20, 30, 2.0, 2);
    std::ofstream bad(dir / "bad.csv");
    bad << "a,b\n1,2\n3,oops\n";
    std::ofstream genes(dir / "genes.csv");
    std::mt19937_64 g(3);
    std::normal_distribution<double> z;
    genes << "sample";
    for (int j = 0; j < 40; ++j) genes << ",g" << j;
    genes << '\n';
    for (int i = 0; i < 30; ++i) {
      genes << (i < 14 ? "n" : "t");
      for (int j = 0; j < 40; ++j) genes << ',' << 8.0 + (i < 14 ? 1.0 : 1.5) * z(g);
      genes << '\n';
    }
    std::ofstream grid(dir / "grid.txt");
    grid << "method = czz-v\nreplicates = 10\n[cell]\nn = 10\np = 15, 20\n";
  }
  ~Workspace() { fs::remove_all(dir); }

  static void write_table(const fs::path& p, int n, int cols, double scale, unsigned seed) {
    std::ofstream out(p);
    std::mt19937_64 g(seed);
    std::normal_distribution<double> z;
    for (int j = 0; j < cols; ++j) out << (j ? "," : "") << "v" << j;
    out << '\n';
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < cols; ++j) out << (j ? "," : "") << scale * z(g);
      out << '\n';
    }
  }
  std::string at(const std::string& name) const { return (dir / name).string(); }
};

const std::string kSmall = " -k 3 -K 20 --null-reps 200 --threads 1";

}  // namespace

TEST_CASE("exit codes") {
  Workspace w;
  CHECK(run("--help").code == 0);
  CHECK(run("test1 --bogus").code == 2);
  CHECK(run("test1").code == 2);
  CHECK(run("test1 --input " + w.at("x.csv") + " --null-reps 5").code == 2);
  CHECK(run("test1 --input " + w.at("x.csv") + " --method nope").code == 2);
  CHECK(run("test1 --input " + w.at("missing.csv") + kSmall).code == 3);
  CHECK(run("test1 --input " + w.at("bad.csv") + kSmall).code == 3);
  CHECK(run("test1 --input " + w.at("x.csv") + kSmall).code == 0);
}

TEST_CASE("test1 and test2 outputs") {
  Workspace w;
  const Run one = run("test1 --input " + w.at("x.csv") + kSmall + " --format json");
  REQUIRE(one.code == 0);
  const auto j = nlohmann::json::parse(one.out);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("command") == "test1");
  CHECK(j.at("result").contains("mean_p"));
  CHECK(j.at("provenance").at("inputs").size() == 1);

  const Run two = run("test2 --input " + w.at("x.csv") + " --input2 " + w.at("y.csv") + kSmall +
                      " --format json");
  REQUIRE(two.code == 0);
  CHECK(nlohmann::json::parse(two.out).at("result").at("decision") == "reject");

  const Run direct = run("test2 --direct --method lc --input " + w.at("x.csv") + " --input2 " +
                         w.at("y.csv"));
  CHECK(direct.code == 0);
  CHECK(direct.out.find("lc") != std::string::npos);
}

TEST_CASE("threads do not change results") {
  Workspace w;
  const std::string base = "test2 --input " + w.at("x.csv") + " --input2 " + w.at("y.csv") +
                           " -k 3 -K 40 --null-reps 200 --format json --threads ";
  const auto a = nlohmann::json::parse(run(base + "1").out).at("result");
  const auto b = nlohmann::json::parse(run(base + "4").out).at("result");
  CHECK(a == b);
}

TEST_CASE("simulate streams csv") {
  Workspace w;
  const Run r = run("simulate --grid " + w.at("grid.txt") + " --threads 1 --output " +
                    w.at("rows.csv"));
  REQUIRE(r.code == 0);
  const std::string csv = slurp(w.dir / "rows.csv");
  CHECK(csv.rfind("label,n,m,p,k,K,method", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const Run again = run("simulate --grid " + w.at("grid.txt") + " --threads 1 --format json");
  CHECK(nlohmann::json::parse(again.out).at("rows").size() == 2);
}

TEST_CASE("nulldist writes a cache entry") {
  Workspace w;
  const Run r = run("nulldist -n 12 -p 20" + kSmall + " --cache-dir " + w.at("cache"));
  REQUIRE(r.code == 0);
  CHECK(std::distance(fs::directory_iterator(w.dir / "cache"), fs::directory_iterator{}) == 1);
}

TEST_CASE("genes report replays exactly") {
  Workspace w;
  const std::string args = "genes --input " + w.at("genes.csv") +
                           " --group-a n --group-b t --methods lc,cramp-box"
                           " --top-genes 30 --split-reps 10" + kSmall;
  const Run first = run(args + " --format json --output " + w.at("report.json"));
  REQUIRE(first.code == 0);
  const auto report = nlohmann::json::parse(slurp(w.dir / "report.json"));
  CHECK(report.at("schema_version") == 1);
  CHECK(report.at("provenance").contains("request"));

  const Run replay = run("genes --replay " + w.at("report.json") + " --threads 3 --format json");
  REQUIRE(replay.code == 0);
  const auto again = nlohmann::json::parse(replay.out);
  CHECK(again == report);
  CHECK(report.at("comparisons").size() == 2);
  CHECK(report.at("split_type1").at(0).at("replicates") == 10);

  CHECK(run("genes --input " + w.at("genes.csv") + " --group-a n --group-b t"
            " --methods nope").code == 2);
}
