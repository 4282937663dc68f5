#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "dualcoder/embedding.hpp"
#include "dualcoder/text.hpp"
#include "test_util.hpp"

using namespace dualcoder;

TEST_CASE("tokenize applies the documented rules") {
  CHECK(tokenize("I love you!") == std::vector<std::string>{"i", "love", "you", "!"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t\n ").empty());
  CHECK(tokenize("Don't go.") == std::vector<std::string>{"do", "n't", "go", "."});
  CHECK(tokenize("it's") == std::vector<std::string>{"it", "'s"});
  CHECK(tokenize("I'm fine") == std::vector<std::string>{"i", "'m", "fine"});
  // Leading and trailing punctuation peel off in original order.
  CHECK(tokenize("(well...)") == std::vector<std::string>{"(", "well", ".", ".", ".", ")"});
  CHECK(tokenize("\"Stop!\"") == std::vector<std::string>{"\"", "stop", "!", "\""});
  // Bare punctuation chunks yield punctuation tokens only.
  CHECK(tokenize("...") == std::vector<std::string>{".", ".", "."});
}

TEST_CASE("tokenize is deterministic and total") {
  const std::string s = "What's done... is DONE, isn't it?!";
  auto a = tokenize(s);
  auto b = tokenize(s);
  CHECK(a == b);
  CHECK(!a.empty());
}

TEST_CASE("build_vocab orders by frequency then lexicographically") {
  Vocabulary v = build_vocab({{"a", "b"}, {"b"}});
  REQUIRE(v.size() == 4);
  CHECK(v.id_of("_PAD_") == 0);
  CHECK(v.id_of("_UNK_") == 1);
  CHECK(v.id_of("b") == 2);
  CHECK(v.id_of("a") == 3);

  Vocabulary single = build_vocab({{"x"}});
  CHECK(single.size() == 3);

  // Ties broken lexicographically.
  Vocabulary ties = build_vocab({{"zed", "ant", "mid"}});
  CHECK(ties.id_of("ant") == 2);
  CHECK(ties.id_of("mid") == 3);
  CHECK(ties.id_of("zed") == 4);

  CHECK_THROWS_AS(build_vocab({}), ValueError);
  CHECK_THROWS_AS(build_vocab({{}, {}}), ValueError);
}

TEST_CASE("vocabulary file round trip is bit exact") {
  testutil::TempDir tmp("vocab");
  Vocabulary v = build_vocab({{"hello", "world", "hello"}});
  v.save(tmp.file("v.txt"));
  Vocabulary v2 = Vocabulary::load(tmp.file("v.txt"));
  CHECK(v2.tokens() == v.tokens());
  v2.save(tmp.file("v2.txt"));
  CHECK(testutil::read_file_bytes(tmp.file("v.txt")) == testutil::read_file_bytes(tmp.file("v2.txt")));
}

TEST_CASE("encode pads, truncates and maps OOV to unk") {
  Vocabulary v = build_vocab({{"a", "b", "c"}});

  TokenSequence empty = encode({}, v);
  CHECK(empty.true_len == 0);
  CHECK(empty.ids.size() == 128);
  for (auto id : empty.ids) CHECK(id == Vocabulary::kPadId);

  TokenSequence unseen = encode({"zzz"}, v);
  CHECK(unseen.true_len == 1);
  CHECK(unseen.ids[0] == Vocabulary::kUnkId);
  CHECK(unseen.ids[1] == Vocabulary::kPadId);

  std::vector<std::string> long_list(130, "a");
  long_list[127] = "b";
  long_list[128] = "c";  // dropped
  TokenSequence truncated = encode(long_list, v);
  CHECK(truncated.true_len == 128);
  CHECK(truncated.ids.size() == 128);
  CHECK(truncated.ids[127] == v.id_of("b"));

  // Every id is < V.
  for (auto id : truncated.ids) CHECK(id < v.size());
}

TEST_CASE("load_embeddings covers vocab rows from file") {
  testutil::TempDir tmp("emb");
  Vocabulary v = build_vocab({{"cat", "dog"}});
  std::string file;
  file += "cat";
  for (int j = 0; j < 4; ++j) file += " " + std::to_string(0.1 * (j + 1));
  file += "\nnotinvocab 1 2 3 4\n";
  testutil::write_file_bytes(tmp.file("e.txt"), file);

  EmbeddingMatrix emb = load_embeddings(tmp.file("e.txt"), v, 42, 4);
  REQUIRE(emb.weights.rows() == v.size());
  CHECK(emb.weights(v.id_of("cat"), 0) == Catch::Approx(0.1));
  CHECK(emb.weights(v.id_of("cat"), 3) == Catch::Approx(0.4));
  // _PAD_ row forced to zeros; uncovered rows in (-0.05, 0.05).
  CHECK(emb.weights.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(emb.weights.row(v.id_of("dog")).cwiseAbs().maxCoeff() < 0.05);
  CHECK(emb.weights.row(v.id_of("dog")).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("load_embeddings without a file randomizes every non-pad row") {
  Vocabulary v = build_vocab({{"a", "b", "c"}});
  EmbeddingMatrix emb = load_embeddings("", v, 7, 16);
  CHECK(emb.weights.row(0).cwiseAbs().maxCoeff() == 0.0);
  for (int r = 1; r < v.size(); ++r) {
    CHECK(emb.weights.row(r).cwiseAbs().maxCoeff() < 0.05);
    CHECK(emb.weights.row(r).cwiseAbs().minCoeff() > 0.0);
  }
}

TEST_CASE("load_embeddings is seed deterministic") {
  Vocabulary v = build_vocab({{"a", "b", "c", "d"}});
  EmbeddingMatrix e1 = load_embeddings("", v, 99, 8);
  EmbeddingMatrix e2 = load_embeddings("", v, 99, 8);
  CHECK(std::memcmp(e1.weights.data(), e2.weights.data(),
                    sizeof(double) * static_cast<std::size_t>(e1.weights.size())) == 0);
  EmbeddingMatrix e3 = load_embeddings("", v, 100, 8);
  CHECK(std::memcmp(e1.weights.data(), e3.weights.data(),
                    sizeof(double) * static_cast<std::size_t>(e1.weights.size())) != 0);
}

TEST_CASE("load_embeddings reports malformed lines") {
  testutil::TempDir tmp("emb");
  Vocabulary v = build_vocab({{"cat"}});
  testutil::write_file_bytes(tmp.file("short.txt"), "cat 1 2\n");
  CHECK_THROWS_MATCHES(load_embeddings(tmp.file("short.txt"), v, 1, 4), ParseError,
                       Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("line 1")));
  testutil::write_file_bytes(tmp.file("long.txt"), "ok 1 2 3 4\ncat 1 2 3 4 5\n");
  CHECK_THROWS_MATCHES(load_embeddings(tmp.file("long.txt"), v, 1, 4), ParseError,
                       Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("line 2")));
}
