#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli_lib.hpp"
#include "doctest.h"
#include "icw/errors.hpp"
#include "json.hpp"

using namespace icw;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("weight specs") {
  CHECK(cli::parse_weights("[1, 1, 2, 2]").size() == 4);
  const auto rep = cli::parse_weights("{\"base\": [1, 2], \"replicate\": 3}");
  CHECK(rep.size() == 6);
  CHECK(rep.moment(1) == 1.5);

  CHECK_THROWS_AS(cli::parse_weights("[1, -2]"), Error);
  CHECK_THROWS_AS(cli::parse_weights("[1, \"x\"]"), Error);
  CHECK_THROWS_AS(cli::parse_weights("{\"base\": [1], \"reps\": 2}"), Error);
  CHECK_THROWS_AS(cli::parse_weights("/nonexistent/weights.json"), Error);

  // file route
  const std::string path = "test_weights_tmp.json";
  std::ofstream(path) << "{\"base\": [1, 1, 2, 2], \"replicate\": 2}";
  CHECK(cli::parse_weights(path).size() == 8);
  std::remove(path.c_str());
}

TEST_CASE("malformed weights name the offending entry") {
  const auto r = invoke({"exact-dist", "--weights", "[1, 0]", "--beta", "0.3"});
  CHECK(r.code != 0);
  const auto err = nlohmann::json::parse(r.err);
  CHECK(err["error"]["kind"] == "validation");
  const std::string message = err["error"]["message"];
  CHECK(message.find("1") != std::string::npos);  // index of the bad entry
}

TEST_CASE("fixed-point emits observables as JSON") {
  const auto r = invoke({"fixed-point", "--weights", "[1,1,2,2]", "--beta", "0.3",
                         "--h", "0.1"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["provenance"]["subcommand"] == "fixed-point");
  const auto& columns = doc["columns"];
  const auto& row = doc["rows"][0];
  REQUIRE(columns.size() == row.size());
  double chi = 0.0, beta_c = 0.0;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == "susceptibility") chi = row[i].get<double>();
    if (columns[i] == "beta_c") beta_c = row[i].get<double>();
  }
  CHECK(chi > 0.0);
  CHECK(beta_c == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("fixed-point refuses parameters outside the uniqueness regime") {
  const auto r = invoke({"fixed-point", "--weights", "[1,1,2,2]", "--beta", "0.9",
                         "--h", "0"});
  CHECK(r.code != 0);
  const auto err = nlohmann::json::parse(r.err);
  CHECK(err["error"]["kind"] == "regime");
  // the error reports the computed critical point
  const std::string message = err["error"]["message"];
  CHECK(message.find("0.6") != std::string::npos);
}

TEST_CASE("scan grid flags out-of-regime points instead of failing") {
  const auto r = invoke({"fixed-point", "--weights", "[1,1,2,2]", "--scan-grid",
                         "0.3:0.9:2,0:0:1", "--format", "csv"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);  // provenance
  CHECK(line.rfind("# icw fixed-point", 0) == 0);
  std::getline(lines, line);  // header
  CHECK(line.rfind("beta,h,n,beta_c,in_regime", 0) == 0);
  std::getline(lines, line);  // beta = 0.3 in regime
  CHECK(line.find(",1,") != std::string::npos);
  std::getline(lines, line);  // beta = 0.9, h = 0 outside
  CHECK(line.find(",0,nan") != std::string::npos);
}

TEST_CASE("exact-dist output is normalized") {
  const auto r = invoke({"exact-dist", "--weights", "[1,2]", "--beta", "1", "--h",
                         "0"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line == "S,T,mass");
  double total = 0.0;
  while (std::getline(lines, line)) {
    const auto last = line.rfind(',');
    total += std::stod(line.substr(last + 1));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("outputs are byte-identical across runs") {
  const std::vector<std::string> args = {"sample", "--weights",
                                         "{\"base\": [1,1,2,2], \"replicate\": 3}",
                                         "--beta", "0.3", "--h", "0.1", "--count",
                                         "200", "--seed", "12345"};
  const auto a = invoke(args);
  const auto b = invoke(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  const auto c = invoke({"dk-scan", "--weights", "[1]", "--beta", "0.5", "--h", "0",
                         "--n", "8,16,32"});
  const auto d = invoke({"dk-scan", "--weights", "[1]", "--beta", "0.5", "--h", "0",
                         "--n", "8,16,32"});
  REQUIRE(c.code == 0);
  CHECK(c.out == d.out);
}

TEST_CASE("dk-scan validates the n grid and the regime") {
  const auto bad_n = invoke({"dk-scan", "--weights", "[1,1,2,2]", "--beta", "0.3",
                             "--h", "0.1", "--n", "10"});
  CHECK(bad_n.code != 0);
  CHECK(nlohmann::json::parse(bad_n.err)["error"]["kind"] == "validation");

  const auto bad_regime = invoke({"dk-scan", "--weights", "[1,1,2,2]", "--beta",
                                  "0.9", "--h", "0", "--n", "8"});
  CHECK(bad_regime.code != 0);
  CHECK(nlohmann::json::parse(bad_regime.err)["error"]["kind"] == "regime");
}

TEST_CASE("dk-scan rows carry the scaled distance") {
  const auto r = invoke({"dk-scan", "--weights", "[1]", "--beta", "0.5", "--h", "0",
                         "--n", "16,64", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  REQUIRE(doc["rows"].size() == 2);
  const double dk16 = doc["rows"][0][1].get<double>();
  const double dk64 = doc["rows"][1][1].get<double>();
  CHECK(dk64 < dk16);
  CHECK(doc["rows"][0][2].get<double>() ==
        doctest::Approx(4.0 * dk16).epsilon(1e-12));
}

TEST_CASE("mgf rows") {
  const auto r = invoke({"mgf", "--weights", "[1]", "--n", "16", "--beta", "0.5",
                         "--h", "0.2", "--s", "0,0.1", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  REQUIRE(doc["rows"].size() == 2);
  CHECK(std::fabs(doc["rows"][0][1].get<double>()) <= 1e-14);
  CHECK(doc["rows"][1][1].get<double>() > 0.0);
}

TEST_CASE("sample subcommand spin emission") {
  const auto r = invoke({"sample", "--weights", "[1,2]", "--beta", "0.2", "--h",
                         "0.1", "--count", "3", "--seed", "7", "--emit", "spins"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line.find("seed=7") != std::string::npos);
  std::getline(lines, line);
  CHECK(line == "index,spins");
  std::getline(lines, line);
  CHECK(line.size() == 4);  // "0,+-" pattern: index, comma, two spins
}

TEST_CASE("glauber sampling method runs") {
  const auto r = invoke({"sample", "--weights", "[1,1,2,2]", "--beta", "0.3", "--h",
                         "0.1", "--count", "5", "--seed", "3", "--method",
                         "glauber-chain"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 5);
}

TEST_CASE("stein-terms exact table shows the majorization") {
  const auto r = invoke({"stein-terms", "--weights",
                         "{\"base\": [1,1,2,2], \"replicate\": 3}", "--beta", "0.3",
                         "--h", "0.1", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  bool saw_dk = false;
  for (const auto& row : doc["rows"]) {
    if (row[0] == "dK") {
      saw_dk = true;
      CHECK(row[3] == "true");  // majorized
    }
    if (row[0] == "R1" || row[0] == "R3")
      CHECK(row[3] == "true");
  }
  CHECK(saw_dk);
}

TEST_CASE("stein-terms sampled source reports standard errors") {
  const auto r = invoke({"stein-terms", "--weights", "{\"base\": [1,2], \"replicate\": 25}",
                         "--beta", "0.3", "--h", "0.1", "--source", "sample",
                         "--count", "2000", "--seed", "11", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["provenance"]["notes"][0] == "spin_means=exact");
  for (const auto& row : doc["rows"]) {
    if (row[0] == "T1") CHECK(row[8].get<double>() > 0.0);
    if (row[0] == "R5") CHECK(row[2].is_null());  // no pointwise bound
  }
}

TEST_CASE("dry run validates without computing") {
  const auto ok = invoke({"dk-scan", "--weights", "[1]", "--beta", "0.5", "--h",
                          "0", "--n", "64,128", "--dry-run"});
  REQUIRE(ok.code == 0);
  const auto doc = nlohmann::json::parse(ok.out);
  CHECK(doc["valid"] == true);
  CHECK(doc["subcommand"] == "dk-scan");

  const auto bad = invoke({"dk-scan", "--weights", "[1]", "--beta", "-1", "--h",
                           "0", "--n", "64", "--dry-run"});
  CHECK(bad.code != 0);
}

TEST_CASE("config file supplies options and rejects unknown keys") {
  const std::string path = "test_config_tmp.json";
  std::ofstream(path) << R"({"weights": [1,1,2,2], "beta": 0.3, "h": 0.1})";
  const auto r = invoke({"fixed-point", "--config", path});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["rows"][0][0].get<double>() == doctest::Approx(0.3).epsilon(1e-15));

  // command line wins over the file
  const auto r2 = invoke({"fixed-point", "--config", path, "--beta", "0.45",
                          "--format", "json"});
  REQUIRE(r2.code == 0);
  CHECK(nlohmann::json::parse(r2.out)["rows"][0][0].get<double>() ==
        doctest::Approx(0.45).epsilon(1e-15));

  std::ofstream(path) << R"({"weights": [1], "bta": 0.3})";
  const auto bad = invoke({"fixed-point", "--config", path});
  CHECK(bad.code != 0);
  CHECK(nlohmann::json::parse(bad.err)["error"]["message"].get<std::string>().find(
            "bta") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("unknown flags produce an error object") {
  const auto r = invoke({"fixed-point", "--wieghts", "[1]"});
  CHECK(r.code != 0);
  CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "cli");
}
