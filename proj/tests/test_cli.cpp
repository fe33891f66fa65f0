#include <doctest.h>

#include <sys/wait.h>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "promissing/results.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("promissing_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "cd '" + workdir().string() + "' && '" PROMISSING_CLI "' " + args +
                          " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& name) {
  std::ifstream in(workdir() / name, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void require_dataset() {
  static bool done = false;
  if (done) return;
  REQUIRE(run("simulate --kind multimodal -n 200 --sizes 3,2,4 --seed 1 --out mm.csv") == 0);
  done = true;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("xor --no-such-flag") == 1);
  CHECK(run("corrupt --mechanism mcar") == 1);
  CHECK(run("xor --set nonsense") == 1);
  CHECK(run("xor --set unknown_key=3") == 1);
  CHECK(run("--help") == 0);
}

TEST_CASE("runtime failures exit with 2") {
  require_dataset();
  std::ofstream(workdir() / "junk.txt") << "not a model\n";
  CHECK(run("predict --model junk.txt --in mm.csv") == 2);
  CHECK(run("corrupt --in mm.csv --mechanism mcar --fraction 0.001 --out x.csv") == 2);
}

TEST_CASE("corrupt twice gives identical bytes") {
  require_dataset();
  REQUIRE(run("corrupt --in mm.csv --mechanism mar --fraction 0.3 --feature 0 --cond 1 --seed 7 "
              "--out c1.csv --report r1.csv") == 0);
  REQUIRE(run("corrupt --in mm.csv --mechanism mar --fraction 0.3 --feature 0 --cond 1 --seed 7 "
              "--out c2.csv --report r2.csv") == 0);
  CHECK(slurp("c1.csv") == slurp("c2.csv"));
  CHECK(slurp("r1.csv") == slurp("r2.csv"));
  CHECK(slurp("c1.csv") != slurp("mm.csv"));
  REQUIRE(run("corrupt --in mm.csv --mechanism mar --fraction 0.3 --feature 0 --cond 1 --seed 8 "
              "--out c3.csv") == 0);
  CHECK(slurp("c1.csv") != slurp("c3.csv"));
}

TEST_CASE("impute fills every cell") {
  require_dataset();
  REQUIRE(run("corrupt --in mm.csv --mechanism mcar --fraction 0.4 --seed 2 --out ci.csv") == 0);
  REQUIRE(run("impute --in ci.csv --imputer knn:3 --out filled.csv") == 0);
  const auto text = slurp("filled.csv");
  CHECK(text.find(",,") == std::string::npos);
  CHECK(text.find(",\n") == std::string::npos);
}

TEST_CASE("train, predict, explain, export") {
  require_dataset();
  REQUIRE(run("corrupt --in mm.csv --mechanism mcar --fraction 0.3 --seed 3 --out tr.csv") == 0);
  REQUIRE(run("train --in tr.csv --preset fusion --first m_promissing --epochs 4 --seed 5 --model a.model") == 0);
  REQUIRE(run("train --in tr.csv --preset fusion --first m_promissing --epochs 4 --seed 5 --model b.model") == 0);
  CHECK(slurp("a.model") == slurp("b.model"));

  REQUIRE(run("predict --model a.model --in tr.csv --out p1.csv") == 0);
  REQUIRE(run("predict --model a.model --in tr.csv --out p2.csv") == 0);
  CHECK(slurp("p1.csv") == slurp("p2.csv"));
  CHECK(slurp("p1.csv").rfind("row,prediction\n", 0) == 0);

  {
    std::ifstream in(workdir() / "mm.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    std::ofstream(workdir() / "row.csv") << header.substr(0, header.rfind(',')) << '\n'
                                        << first.substr(0, first.rfind(',')) << '\n';
  }
  REQUIRE(run("explain --model a.model --row row.csv --unit modality --out ex.csv") == 0);
  std::istringstream ex(slurp("ex.csv"));
  std::string line;
  std::getline(ex, line);
  CHECK(line == "unit,input,feature,delta,already_missing");
  std::getline(ex, line);
  CHECK(line.rfind("base,,,", 0) == 0);
  double prev = 1e300;
  int units = 0;
  while (std::getline(ex, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    REQUIRE(f.size() == 5);
    const double d = std::abs(std::stod(f[3]));
    CHECK(d <= prev);
    prev = d;
    ++units;
  }
  CHECK(units == 3);
  REQUIRE(run("explain --model a.model --row row.csv --unit feature --out exf.csv") == 0);

  REQUIRE(run("export-neutralizers --model a.model --out n1.csv") == 0);
  REQUIRE(run("export-neutralizers --model a.model --out n2.csv") == 0);
  CHECK(slurp("n1.csv") == slurp("n2.csv"));
  CHECK(slurp("n1.csv").rfind("layer,neuron,feature,value\n", 0) == 0);

  // a dense model cannot be explained by masking
  REQUIRE(run("train --in mm.csv --preset benchmark --first dense --epochs 2 --model d.model") == 0);
  CHECK(run("explain --model d.model --row row.csv --unit modality --out exd.csv") == 2);
}

TEST_CASE("xor writes learning curves deterministically") {
  const std::string args = "xor --mechanism mnar --fraction 0.5 --reps 2 --epochs 4 --methods mean,promissing ";
  REQUIRE(run(args + "--out r1.csv --plot plot1.csv") == 0);
  REQUIRE(run(args + "--out r2.csv --plot plot2.csv") == 0);
  CHECK(slurp("r1.csv") == slurp("r2.csv"));
  CHECK(slurp("plot1.csv") == slurp("plot2.csv"));
  CHECK(slurp("plot1.csv").rfind("curve_id,x,y,y_std\n", 0) == 0);
  const auto t = promissing::ResultTable::read(workdir() / "r1.csv");
  // 2 reps x 2 methods x 4 epochs x 2 metrics
  CHECK(t.rows.size() == 32);
}

TEST_CASE("config file plus flag overrides") {
  std::ofstream(workdir() / "x.cfg") << "experiment=xor\nrepetitions=1\nepochs=3\nmethods=zero\n";
  REQUIRE(run("xor --config x.cfg --out rc.csv") == 0);
  REQUIRE(run("xor --config x.cfg --epochs 2 --out rd.csv") == 0);
  CHECK(promissing::ResultTable::read(workdir() / "rc.csv").rows.size() == 6);
  CHECK(promissing::ResultTable::read(workdir() / "rd.csv").rows.size() == 4);
}

TEST_CASE("fusion and bench are deterministic") {
  const std::string f = "fusion --sizes 3,2,4 --orders 2 --epochs 3 --set fusion_rows=80 --set fusion_test_rows=20 ";
  REQUIRE(run(f + "--out f1.csv --trajectories t1.csv") == 0);
  REQUIRE(run(f + "--out f2.csv --trajectories t2.csv") == 0);
  CHECK(slurp("f1.csv") == slurp("f2.csv"));
  CHECK(slurp("t1.csv") == slurp("t2.csv"));

  const std::string b = std::string("bench --datasets '") + PROMISSING_DATA_DIR +
                        "/wine.schema' --mechanism mcar --fraction 0.25 --reps 1 --epochs 5 ";
  REQUIRE(run(b + "--out b1.csv") == 0);
  REQUIRE(run(b + "--threads 1 --out b2.csv") == 0);
  CHECK(slurp("b1.csv") == slurp("b2.csv"));
}

TEST_CASE("simulate is deterministic per seed") {
  REQUIRE(run("simulate --kind xor -n 100 --seed 4 --out s1.csv") == 0);
  REQUIRE(run("simulate --kind xor -n 100 --seed 4 --out s2.csv") == 0);
  CHECK(slurp("s1.csv") == slurp("s2.csv"));
  CHECK(slurp("s1.schema") == slurp("s2.schema"));
}
