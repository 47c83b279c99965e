#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memlab/run_record.hpp"

using json = nlohmann::json;

namespace {

int run_cli(const std::string& args, const std::string& env = "") {
  std::string cmd = env + " " + std::string(MEMLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::vector<std::vector<std::string>> csv_rows(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(memlab::read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("capacity sweep emits one row per m with the fits flip at the boundary") {
  REQUIRE(run_cli("capacity --out /tmp/memlab_t1 --d_k 8 --m_min 4 --m_max 12 --seeds 3") == 0);
  auto rows = csv_rows("/tmp/memlab_t1/raw.csv");
  REQUIRE(rows.size() == 10);  // header + 9 sweep rows
  CHECK(rows[0][1] == "m");
  for (size_t i = 1; i < rows.size(); ++i) {
    int m = std::stoi(rows[i][1]);
    int fits = std::stoi(rows[i][6]);
    CHECK(fits == (m <= 8 ? 1 : 0));
  }
}

TEST_CASE("config errors exit with code 1 and name the field") {
  CHECK(run_cli("recall --out /tmp/memlab_t2 --rule detla") == 1);
  CHECK(run_cli("capacity --out /tmp/memlab_t2 --seeds ''") == 1);
  CHECK(run_cli("capacity --out /tmp/memlab_t2 --no_such_field 3") == 1);
  CHECK(run_cli("capacity") == 1);  // missing required out
  CHECK(run_cli("frobnicate --out /tmp/x") == 1);
}

TEST_CASE("flags override config-file values and the echo shows the final value") {
  memlab::write_text_file("/tmp/memlab_t3.json",
                          "{\"out\": \"/tmp/memlab_t3\", \"d_k\": 4, \"m_min\": 2, "
                          "\"m_max\": 5, \"seeds\": \"1\"}\n");
  REQUIRE(run_cli("capacity --config /tmp/memlab_t3.json --d_k 6") == 0);
  json summary = json::parse(memlab::read_text_file("/tmp/memlab_t3/summary.json"));
  CHECK(summary["config"]["d_k"] == "6");
  CHECK(summary["config"]["m_max"] == "5");
  CHECK(summary["config_hash"].is_string());
}

TEST_CASE("equivalence command reports diffs and passes") {
  REQUIRE(run_cli("equivalence --out /tmp/memlab_t4 --which chunk --tokens 16 --seeds 0,1") == 0);
  json summary = json::parse(memlab::read_text_file("/tmp/memlab_t4/summary.json"));
  CHECK(summary["metrics"]["pass"] == true);
  double diff =
      summary["metrics"]["checks"]["chunked_omega_b1_vs_sequential"]["max_abs_diff"];
  CHECK(diff <= 1e-12);
}

TEST_CASE("artifacts are byte-identical across reruns and thread counts") {
  std::string args = "recall --out /tmp/memlab_t5 --seeds 0,1,2,3 --n_pairs 2,8 --passes 5";
  REQUIRE(run_cli(args, "MEMLAB_THREADS=1") == 0);
  std::string first = memlab::read_text_file("/tmp/memlab_t5/raw.csv");
  std::string first_summary = memlab::read_text_file("/tmp/memlab_t5/summary.json");
  REQUIRE(run_cli(args, "MEMLAB_THREADS=4") == 0);
  CHECK(memlab::read_text_file("/tmp/memlab_t5/raw.csv") == first);
  CHECK(memlab::read_text_file("/tmp/memlab_t5/summary.json") == first_summary);
}

TEST_CASE("csv embeds the resolved config and a content hash that matches the data") {
  REQUIRE(run_cli("capacity --out /tmp/memlab_t6 --d_k 4 --m_min 2 --m_max 4 --seeds 0") == 0);
  std::string csv = memlab::read_text_file("/tmp/memlab_t6/raw.csv");
  CHECK(csv.find("# command=capacity") != std::string::npos);
  CHECK(csv.find("# d_k=4") != std::string::npos);

  // Recompute the hash over the data section and compare with the header.
  std::istringstream in(csv);
  std::string line, hash_line, data;
  while (std::getline(in, line)) {
    if (line.rfind("# content_hash=", 0) == 0)
      hash_line = line.substr(std::string("# content_hash=").size());
    else if (line.empty() || line[0] != '#')
      data += line + "\n";
  }
  CHECK(hash_line == memlab::fnv1a_hex(data));
}
