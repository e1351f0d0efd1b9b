#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sparselab/experiments.hpp"

using namespace sparselab;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool has_issue(const ConfigError& e, const std::string& needle) {
  for (const auto& m : e.issues)
    if (m.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("configuration defaults and derived q") {
  ExperimentConfig ec = parse_config("", {{"experiment", "reduce-fuzz"}});
  CHECK(ec.experiment == "reduce-fuzz");
  CHECK(ec.grid_l == 14);
  CHECK(ec.seed == 0);
  CHECK(ec.format == "csv");
  CHECK(ec.shift == 0.0);
  CHECK(ec.J() == 10);  // grid_l - 4 when big_j is unset
  CHECK(ec.q == doctest::Approx(4.0));  // derived from p = {4}, eta = 0

  ExperimentConfig two = parse_config(
      "", {{"experiment", "weights-report"},
           {"p", "2,2"},
           {"r", "1,1"},
           {"eta", "0.25"}});
  CHECK(two.q == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  ExperimentConfig j = parse_config(
      "", {{"experiment", "sharpness-k"}, {"big_j", "6"}, {"grid_l", "10"}});
  CHECK(j.J() == 6);
}

TEST_CASE("configuration rejections collect every violation") {
  // Ordering violation: r_1 not strictly below p_1.
  try {
    parse_config("", {{"experiment", "weights-report"},
                      {"p", "2"},
                      {"r", "2"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(has_issue(e, "ordering (r,s) < (p,q) violated"));
  }

  // Inconsistent explicit q.
  try {
    parse_config("", {{"experiment", "weights-report"},
                      {"p", "2,2"},
                      {"r", "1,1"},
                      {"q", "3"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(has_issue(e, "1/q = sum 1/p_i - eta violated"));
  }

  // Several independent problems reported together.
  try {
    parse_config("", {{"experiment", "no-such-experiment"},
                      {"grid_l", "30"},
                      {"format", "xml"},
                      {"bogus", "1"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.issues.size() >= 4);
    CHECK(has_issue(e, "unknown experiment"));
    CHECK(has_issue(e, "grid_l"));
    CHECK(has_issue(e, "format: must be csv or json"));
    CHECK(has_issue(e, "unknown key: bogus"));
  }

  CHECK_THROWS_AS(parse_config("", {}), ConfigError);  // experiment required
  CHECK_THROWS_AS(
      parse_config("", {{"experiment", "reduce-fuzz"}, {"delta", "0.5"}}),
      ConfigError);  // delta outside (0, 1/8]
  CHECK_THROWS_AS(
      parse_config("", {{"experiment", "reduce-fuzz"}, {"lambda", "0"}}),
      ConfigError);
  CHECK_THROWS_AS(parse_config("/no/such/file.cfg",
                               {{"experiment", "reduce-fuzz"}}),
                  ConfigError);
}

TEST_CASE("config files support comments and flag overrides") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "sparselab_cli_test";
  fs::create_directories(dir);
  fs::path cfg = dir / "run.cfg";
  {
    std::ofstream out(cfg);
    out << "# base configuration\n"
        << "experiment = sharpness-k\n"
        << "grid_l = 10   # inline comment\n"
        << "seed = 3\n";
  }
  ExperimentConfig ec = parse_config(cfg.string(), {{"seed", "5"}});
  CHECK(ec.experiment == "sharpness-k");
  CHECK(ec.grid_l == 10);
  CHECK(ec.seed == 5);  // flags win over the file

  {
    std::ofstream out(cfg);
    out << "experiment = sharpness-k\n"
        << "this line has no equals sign\n";
  }
  try {
    parse_config(cfg.string(), {});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(has_issue(e, "line 2: expected key=value"));
  }
}

TEST_CASE("table serialization is byte-stable") {
  Table t;
  t.name = "demo";
  t.columns = {"a", "b"};
  CHECK(to_csv(t) == "a,b\n");

  t.rows = {{1.5, 2.0}, {1.0 / 3.0, 1e-7}};
  CHECK(to_csv(t) == "a,b\n1.5,2\n0.333333333333,1e-07\n");
  CHECK(to_json(t) ==
        "{\"name\":\"demo\",\"columns\":[\"a\",\"b\"],"
        "\"rows\":[[1.5,2],[0.333333333333,1e-07]]}\n");

  CHECK(format_sig12(2.0) == "2");
  CHECK(format_sig12(0.1) == "0.1");
  CHECK(format_sig12(-1.25e-3) == "-0.00125");
}

TEST_CASE("assertion failures render as a JSON error object") {
  AssertionFailure af("demo", "value within bound", 1.5, 2.0);
  CHECK(af.json() ==
        "{\"error\":\"assertion\",\"experiment\":\"demo\","
        "\"check\":\"value within bound\",\"observed\":1.5,\"bound\":2}");
  CHECK(std::string(af.what()) == "demo: value within bound");
}

TEST_CASE("experiment runs are deterministic and converge") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "sparselab_cli_test_runs";
  fs::create_directories(dir);

  std::map<std::string, std::string> base = {
      {"experiment", "sharpness-k"}, {"grid_l", "12"},
      {"lambda", "1,2"},             {"out", dir.string()}};
  ExperimentConfig ec = parse_config("", base);
  Table t1 = run_experiment(ec);
  std::string bytes1 = read_file(dir / "sharpness-k.csv");
  Table t2 = run_experiment(ec);
  std::string bytes2 = read_file(dir / "sharpness-k.csv");
  CHECK(bytes1 == bytes2);
  CHECK(bytes1 == to_csv(t1));
  REQUIRE(t1.rows.size() == 2);
  CHECK(t1.columns == std::vector<std::string>{"lambda", "value", "ratio"});

  // JSON emission of the same run.
  base["format"] = "json";
  run_experiment(parse_config("", base));
  std::string js = read_file(dir / "sharpness-k.json");
  CHECK(js == to_json(t2));
  CHECK(js.rfind("{\"name\":\"sharpness-k\",\"columns\":", 0) == 0);

  // The lambda = 1 value approaches 2/21 as the grid and chain refine.
  double target = 2.0 / 21.0;
  auto value_at = [&](int level) {
    std::map<std::string, std::string> ov = base;
    ov["format"] = "csv";
    ov["grid_l"] = std::to_string(level);
    Table t = run_experiment(parse_config("", ov));
    return t.rows[0][1];
  };
  double e12 = std::fabs(value_at(12) - target);
  double e20 = std::fabs(value_at(20) - target);
  CHECK(e20 <= e12 + 1e-9);
  CHECK(e20 <= 0.005 * target);
}
