#include "modeclust/io.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace modeclust;

TEST_CASE("key-value config parses values and comments") {
  std::istringstream in("# header\n\nn = 300\nh_grid = 0.5, 1 ,2\nflag = yes\nname = basins2d  \n");
  const auto kv = KeyValueConfig::parse(in, "cfg");
  CHECK(kv.get_int("n", 0) == 300);
  CHECK(kv.get_doubles("h_grid", {}) == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.get_string("name", "") == "basins2d");
  CHECK(kv.get_double("missing", 7.5) == 7.5);
  CHECK(kv.line_of("n") == 3);
  CHECK(kv.unused_keys().empty());
}

TEST_CASE("config errors carry the line number") {
  std::istringstream dup("a = 1\nb = 2\na = 3\n");
  try {
    KeyValueConfig::parse(dup, "cfg");
    FAIL("duplicate key accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("cfg:3") != std::string::npos);
  }
  std::istringstream no_eq("a = 1\njust words\n");
  CHECK_THROWS_AS(KeyValueConfig::parse(no_eq), ParseError);

  std::istringstream bad("n = twelve\n");
  const auto kv = KeyValueConfig::parse(bad);
  CHECK_THROWS_AS(kv.get_int("n", 0), ParseError);
  CHECK_THROWS_AS(kv.get_double("n", 0), ParseError);
  CHECK_THROWS_AS(kv.get_bool("n", false), ParseError);
}

TEST_CASE("grids accept lists and logspace") {
  CHECK(parse_grid("1, 2.5") == std::vector<double>{1.0, 2.5});
  const auto g = parse_grid("logspace(0.3, 3, 8)");
  REQUIRE(g.size() == 8);
  CHECK(g.front() == doctest::Approx(0.3));
  CHECK(g.back() == doctest::Approx(3.0));
  CHECK(g[1] / g[0] == doctest::Approx(g[7] / g[6]));
  CHECK_THROWS_AS(parse_number_list("1, x"), UsageError);
}

TEST_CASE("mixture spec round trip") {
  std::istringstream in(
      "dim = 2\ncomponents = 2\n"
      "weight_1 = 0.25\nmean_1 = -1, 0\ncov_1 = 1, 0.2, 0.2, 2\n"
      "weight_2 = 0.75\nmean_2 = 3, 1\ncov_2 = 1, 0, 0, 1\n");
  const auto gm = parse_mixture_spec(in);
  CHECK(gm.num_components() == 2);
  CHECK(gm.component(0).covariance(0, 1) == 0.2);
  CHECK(gm.component(1).mean[1] == 1.0);
  std::ostringstream out;
  write_mixture_spec(out, gm);
  std::istringstream back(out.str());
  const auto gm2 = parse_mixture_spec(back);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(gm2.component(j).weight == gm.component(j).weight);
    CHECK(gm2.component(j).mean == gm.component(j).mean);
    CHECK(gm2.component(j).covariance == gm.component(j).covariance);
  }
}

TEST_CASE("mixture spec errors") {
  std::istringstream short_mean("dim = 2\ncomponents = 1\nweight_1 = 1\nmean_1 = 0\ncov_1 = 1,0,0,1\n");
  try {
    parse_mixture_spec(short_mean, "mix");
    FAIL("short mean accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  std::istringstream extra("dim = 1\ncomponents = 1\nweight_1 = 1\nmean_1 = 0\ncov_1 = 1\nmean_2 = 3\n");
  CHECK_THROWS_AS(parse_mixture_spec(extra), ParseError);
  std::istringstream bad_cov("dim = 1\ncomponents = 1\nweight_1 = 1\nmean_1 = 0\ncov_1 = -1\n");
  CHECK_THROWS_AS(parse_mixture_spec(bad_cov), ParseError);
}

TEST_CASE("dataset parsing") {
  std::istringstream in("# x,y\n1, 2\n3,4\n\n5 ,6\n");
  const auto pts = parse_dataset(in);
  REQUIRE(pts.size() == 3);
  CHECK(pts[2][1] == 6.0);
  std::ostringstream out;
  write_dataset(out, pts);
  std::istringstream back(out.str());
  CHECK(parse_dataset(back).size() == 3);

  std::istringstream empty("");
  CHECK_THROWS_AS(parse_dataset(empty), ParseError);
  std::istringstream ragged("1,2\n3\n");
  try {
    parse_dataset(ragged, "data");
    FAIL("ragged rows accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream text("1,2\n3,abc\n");
  CHECK_THROWS_AS(parse_dataset(text), ParseError);
}

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(3.0) == "3");
  const double v = 0.1 + 0.2;
  CHECK(std::stod(format_number(v)) == v);
  CHECK(format_optional(std::nullopt) == "NA");
}

TEST_CASE("checks writer emits one row per case") {
  BoundCheckResult r;
  r.name = "demo";
  r.add({"c1", 1.0, 2.0, false});
  r.add({"c2", 3.0, 2.0, true});
  std::ostringstream out;
  write_checks_header(out);
  write_checks(out, r);
  CHECK(out.str() == "check,case,lhs,rhs,violation\ndemo,c1,1,2,0\ndemo,c2,3,2,1\n");
}
