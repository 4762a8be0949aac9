#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "sensorimotor/cli.hpp"
#include "sensorimotor/est_distributed.hpp"

using namespace sensorimotor;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "smctl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() / "smctl_test";
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name)) << text;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

const char* kBeam = R"({
  "plant": {"id": "beam"},
  "estimator": {"id": "distributed", "grid": [3, 3, 3, 3]},
  "target_x": [0.7, 0.06, 0.2, 0.25]
})";

}  // namespace

TEST_CASE("usage errors exit with 1") {
  const Run none = run({});
  CHECK(none.code == 1);
  CHECK(none.err.find("Usage") != std::string::npos);
  CHECK(run({"fly"}).code == 1);
  TempDir dir;
  const std::string cfg = dir.write("beam.json", kBeam);
  CHECK(run({"servo", "--config", cfg, "--bogus"}).code == 1);
  CHECK(run({"servo"}).code == 1);
  CHECK(run({"servo", "--config", dir.file("missing.json")}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("runtime errors exit with 2") {
  TempDir dir;
  const std::string bad = dir.write("bad.json", R"({"plant": {"id": "beam", "typo": 1}})");
  const Run r = run({"servo", "--config", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find("typo") != std::string::npos);
  const std::string cfg = dir.write("broyden.json", R"({"estimator": {"id": "broyden"}})");
  CHECK(run({"train", "--config", cfg, "--out", dir.file("x")}).code == 2);
}

TEST_CASE("servo on the beam converges and is byte-reproducible") {
  TempDir dir;
  const std::string cfg = dir.write("beam.json", kBeam);
  const Run first = run({"servo", "--config", cfg, "--seed", "7", "--out", dir.file("a.csv")});
  CHECK(first.code == 0);
  CHECK(std::regex_match(first.out, std::regex("converged steps=[0-9]+ err=[0-9.e+-]+\n")));
  const Run second = run({"servo", "--config", cfg, "--seed", "7", "--out", dir.file("b.csv")});
  CHECK(second.out == first.out);
  const std::string a = slurp(dir.file("a.csv"));
  CHECK_FALSE(a.empty());
  CHECK(a == slurp(dir.file("b.csv")));
}

TEST_CASE("collect, train and compare") {
  TempDir dir;
  const std::string cfg = dir.write("beam.json", kBeam);
  const Run c = run({"collect", "--config", cfg, "--seed", "1", "--out", dir.file("data.csv"), "--T", "400"});
  CHECK(c.code == 0);
  std::ifstream data(dir.file("data.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(data, line)) ++lines;
  CHECK(lines == 401);

  const Run t = run({"train", "--config", cfg, "--seed", "1", "--data", dir.file("data.csv"), "--out",
                     dir.file("net.txt")});
  CHECK(t.code == 0);
  const UnitNetwork net = load_network(dir.file("net.txt"));
  CHECK(net.units.size() == 81);

  const Run p = run({"compare", "--config", cfg, "--seed", "4", "--out", dir.file("table.txt")});
  CHECK(p.code == 0);
  CHECK(p.out.find("distributed") != std::string::npos);
  CHECK(slurp(dir.file("table.txt")) == p.out);
  CHECK(run({"compare", "--config", cfg, "--seed", "4"}).out == p.out);
}
