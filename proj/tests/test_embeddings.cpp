#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "csqn/embeddings.hpp"
#include "csqn/errors.hpp"
#include "testutil.hpp"

using namespace csqn;

TEST_CASE("load a small table") {
  std::istringstream in("cat 1 2 3\ndog 4 5 6\n");
  EmbeddingTable t = EmbeddingTable::parse(in, 3);
  CHECK(t.size() == 2);
  CHECK(t.lookup("cat") == std::vector<double>{1, 2, 3});
  CHECK(t.lookup("dog") == std::vector<double>{4, 5, 6});
}

TEST_CASE("duplicate key keeps the first occurrence") {
  std::istringstream in("cat 1 2\ncat 9 9\n");
  EmbeddingTable t = EmbeddingTable::parse(in, 2);
  CHECK(t.size() == 1);
  CHECK(t.lookup("cat") == std::vector<double>{1, 2});
}

TEST_CASE("dimension mismatch names the line") {
  std::istringstream in("a 1 2 3\nb 1 2 3\nc 1 2 3\nd 1 2 3\ne 1 2\n");
  try {
    EmbeddingTable::parse(in, 3);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}

TEST_CASE("non-numeric field names the line") {
  std::istringstream in("a 1 2\nb x 2\n");
  try {
    EmbeddingTable::parse(in, 2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("oov lookups are deterministic, bounded, and distinct") {
  EmbeddingTable t(8, 99);
  const auto v1 = t.lookup("unseen-token");
  const auto v2 = t.lookup("unseen-token");
  CHECK(v1 == v2);
  for (double x : v1) {
    CHECK(x > -0.1);
    CHECK(x < 0.1);
  }
  int distinct = 0;
  const auto other = t.lookup("another-token");
  for (size_t i = 0; i < v1.size(); ++i)
    if (v1[i] != other[i]) ++distinct;
  CHECK(distinct > 0);

  // A different oov seed gives a different vector for the same key.
  EmbeddingTable t2(8, 100);
  CHECK(t2.lookup("unseen-token") != v1);
}

TEST_CASE("lookup is pure with respect to table contents") {
  EmbeddingTable t(2, 7);
  t.insert("known", {0.5, -0.5});
  CHECK(t.lookup("known") == std::vector<double>{0.5, -0.5});
  // Inserting an unrelated key cannot change other lookups.
  const auto before = t.lookup("mystery");
  t.insert("bystander", {1.0, 1.0});
  CHECK(t.lookup("mystery") == before);
}

TEST_CASE("save round-trips through load") {
  testutil::TempDir tmp("emb");
  EmbeddingTable t(3, 0);
  t.insert("alpha", {0.1, -0.25, 1.0 / 3.0});
  t.insert("beta", {1e-17, 2.5, -3.75});
  t.save(tmp.path("emb.txt"));
  EmbeddingTable back = EmbeddingTable::load(tmp.path("emb.txt"), 3);
  CHECK(back.size() == 2);
  CHECK(back.lookup("alpha") == t.lookup("alpha"));
  CHECK(back.lookup("beta") == t.lookup("beta"));
}
