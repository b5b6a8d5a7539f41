#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "test_support.hpp"
#include "testspace/error.hpp"
#include "testspace/generators.hpp"
#include "testspace/io.hpp"

using namespace testspace;

TEST_CASE("rationals") {
  CHECK(rational_json(Rational(-3, 4)) == "-3/4");
  CHECK(rational_json(Rational(5)) == "5");
  CHECK(rational_from_json(Json("7/21")) == Rational(1, 3));
  CHECK(rational_from_json(Json(4)) == 4);
  CHECK(parse_rational("-0.125") == Rational(-1, 8));
  CHECK(parse_rational("1e-3") == Rational(1, 1000));
  CHECK_THROWS_AS((void)rational_from_json(Json(0.5)), Error);
  CHECK_THROWS_AS((void)parse_rational("1/0"), Error);
  CHECK_THROWS_AS((void)parse_rational("abc"), Error);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Rational r = testspace::testing::random_rational(rng, 1000, 97) - 5;
    CHECK(parse_rational(to_string(r)) == r);
    CHECK(from_double(to_double(r)) == from_double(to_double(parse_rational(to_string(r)))));
  }
}

TEST_CASE("graph round trip") {
  const auto graph = laakso(1, Weighting::scaled);
  const auto back = graph_from_json(Json::parse(graph_to_json(graph).dump()));
  CHECK(back.num_vertices() == graph.num_vertices());
  REQUIRE(back.num_edges() == graph.num_edges());
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    CHECK(back.edges()[e].u == graph.edges()[e].u);
    CHECK(back.edges()[e].v == graph.edges()[e].v);
    CHECK(back.edges()[e].length == graph.edges()[e].length);
  }
  CHECK(back.terminals() == graph.terminals());
  CHECK(back.labels() == graph.labels());
}

TEST_CASE("metric round trip and graph documents") {
  const auto space = apsp(diamond(2, Weighting::scaled));
  const auto back = space_from_json(Json::parse(space_to_json(space).dump()));
  REQUIRE(back.size() == space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    for (std::size_t j = 0; j < space.size(); ++j) CHECK(back.dist(i, j) == space.dist(i, j));
  }
  const auto via_graph = space_from_json(graph_to_json(diamond(2, Weighting::scaled)));
  CHECK(via_graph.dist(0, 1) == 1);
  Json wrapped;
  wrapped["result"]["graph"] = graph_to_json(cycle(5));
  wrapped["meta"]["command"] = "gen";
  CHECK(space_from_json(wrapped).dist(0, 2) == 2);
}

TEST_CASE("malformed documents") {
  CHECK_THROWS_AS((void)space_from_json(Json::parse(R"({"type":"metric"})")), Error);
  CHECK_THROWS_AS((void)space_from_json(Json::parse(R"({"distances":[["0","1"]]})")), Error);
  CHECK_THROWS_AS((void)graph_from_json(Json::parse(R"({"vertices":[{}],"edges":[{"u":0}]})")), Error);
  try {
    (void)read_json_file("/nonexistent/file.json");
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }
}

TEST_CASE("vector CSV") {
  std::istringstream in("# comment\n1, -1/2 ,0\n\n0.25,3,4\r\n");
  const auto rows = read_vectors_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == RationalVector{Rational(1), Rational(-1, 2), Rational(0)});
  CHECK(rows[1] == RationalVector{Rational(1, 4), Rational(3), Rational(4)});
  std::istringstream bad("1,,2\n");
  CHECK_THROWS_AS((void)read_vectors_csv(bad), Error);

  const auto embedding = bourgain_embed(2);
  std::istringstream csv(vectors_to_csv(embedding));
  const auto back = embedding_from_vectors(embedding.space, NormKind::summing, read_vectors_csv(csv));
  CHECK(distortion(back).distortion_power() == distortion(embedding).distortion_power());
  CHECK_THROWS_AS((void)embedding_from_vectors(apsp(cycle(3)), NormKind::l1, {RationalVector{1}}), Error);
}

TEST_CASE("files") {
  const auto dir = std::filesystem::temp_directory_path() / "testspace_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "space.json";
  write_text_file(path, space_to_json(apsp(cycle(4))).dump());
  CHECK(space_from_json(read_json_file(path)).dist(0, 2) == 2);
  CHECK(space_to_csv(apsp(cycle(3))) == "0,1,1\n1,0,1\n1,1,0\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("leading zeros are decimal") {
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("010") == 10);
  CHECK(parse_rational("-007/010") == Rational(-7, 10));
  CHECK(parse_rational("0") == 0);
  CHECK(parse_rational("-0.5e1") == Rational(-5));
}
