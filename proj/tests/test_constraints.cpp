#include "doctest.h"

#include "util.hpp"
#include "vecspec/constraints.hpp"
#include "vecspec/errors.hpp"
#include "vecspec/rng.hpp"

using namespace vecspec;

namespace {

WordSet vocab_of(std::initializer_list<const char*> words) {
  WordSet v;
  for (const char* w : words) v.insert(w);
  return v;
}

}  // namespace

TEST_CASE("load_constraints ingests attract and repel pairs") {
  testutil::TempDir tmp;
  const auto att = tmp.file("attract.txt");
  const auto rep = tmp.file("repel.txt");
  testutil::write_file(att, "graceful amiable\n");
  testutil::write_file(rep, "innocent sinful\n");
  const auto vocab = vocab_of({"graceful", "amiable", "innocent", "sinful"});

  const auto cs = load_constraints(att, rep, vocab);
  REQUIRE(cs.attract.size() == 1);
  REQUIRE(cs.repel.size() == 1);
  CHECK(cs.attract[0].first == "graceful");
  CHECK(cs.repel[0].second == "sinful");
}

TEST_CASE("load_constraints filtering rules") {
  testutil::TempDir tmp;
  const auto att = tmp.file("attract.txt");
  const auto rep = tmp.file("repel.txt");
  const auto vocab = vocab_of({"a", "b", "c", "d"});

  SUBCASE("OOV pair dropped") {
    testutil::write_file(att, "a b\na zzz\n");
    testutil::write_file(rep, "");
    const auto cs = load_constraints(att, rep, vocab);
    CHECK(cs.attract.size() == 1);
    CHECK(cs.oov_dropped == 1);
  }
  SUBCASE("order-insensitive duplicates collapse") {
    testutil::write_file(att, "a b\nb a\na b\n");
    testutil::write_file(rep, "");
    CHECK(load_constraints(att, rep, vocab).attract.size() == 1);
  }
  SUBCASE("identical-member pair dropped") {
    testutil::write_file(att, "a a\nb c\n");
    testutil::write_file(rep, "");
    CHECK(load_constraints(att, rep, vocab).attract.size() == 1);
  }
  SUBCASE("pair in both files dropped from both with a count") {
    testutil::write_file(att, "a b\nc d\n");
    testutil::write_file(rep, "b a\n");
    const auto cs = load_constraints(att, rep, vocab);
    CHECK(cs.attract.size() == 1);
    CHECK(cs.repel.empty());
    CHECK(cs.conflicts_dropped == 1);
  }
  SUBCASE("malformed line reports line number") {
    testutil::write_file(att, "a b\na b c\n");
    testutil::write_file(rep, "");
    CHECK_THROWS_WITH_AS(load_constraints(att, rep, vocab),
                         doctest::Contains(":2:"), ParseError);
  }
  SUBCASE("optional language prefix stripping") {
    testutil::write_file(att, "en_a en_b\n");
    testutil::write_file(rep, "");
    const auto cs = load_constraints(att, rep, vocab, "en_");
    REQUIRE(cs.attract.size() == 1);
    CHECK(cs.attract[0].first == "a");
  }
}

TEST_CASE("split_seen_unseen") {
  SUBCASE("direct definition") {
    ConstraintSet cs;
    cs.attract = {{"a", "b"}};
    const auto p = split_seen_unseen(vocab_of({"a", "b", "c"}), cs);
    CHECK(p.seen == vocab_of({"a", "b"}));
    CHECK(p.unseen == vocab_of({"c"}));
  }
  SUBCASE("empty constraint set: everything unseen") {
    const auto p = split_seen_unseen(vocab_of({"a", "b"}), ConstraintSet{});
    CHECK(p.seen.empty());
    CHECK(p.unseen.size() == 2);
  }
  SUBCASE("counted fixture: 10k vocabulary, 1.5k constrained words") {
    WordSet vocab;
    for (int i = 0; i < 10000; ++i) vocab.insert("w" + std::to_string(i));
    ConstraintSet cs;
    for (int i = 0; i < 750; ++i) {
      cs.attract.push_back({"w" + std::to_string(2 * i),
                            "w" + std::to_string(2 * i + 1)});
    }
    const auto p = split_seen_unseen(vocab, cs);
    CHECK(p.seen.size() == 1500);
    CHECK(p.unseen.size() == 8500);
  }
}

TEST_CASE("split_seen_unseen partition property on random inputs") {
  Rng rng(17);
  for (int round = 0; round < 20; ++round) {
    WordSet vocab;
    const int n = 20 + static_cast<int>(rng.index(50));
    for (int i = 0; i < n; ++i) vocab.insert("w" + std::to_string(i));
    ConstraintSet cs;
    for (int i = 0; i < 10; ++i) {
      const auto a = "w" + std::to_string(rng.index(static_cast<std::size_t>(n)));
      const auto b = "w" + std::to_string(rng.index(static_cast<std::size_t>(n)));
      if (a == b) continue;
      if (rng.bernoulli(0.5)) {
        cs.attract.push_back({a, b});
      } else {
        cs.repel.push_back({a, b});
      }
    }
    const auto p = split_seen_unseen(vocab, cs);
    CHECK(p.seen.size() + p.unseen.size() == vocab.size());
    for (const auto& w : p.seen) CHECK(p.unseen.count(w) == 0);
  }
}

TEST_CASE("filter_disjoint") {
  ConstraintSet cs;
  cs.attract = {{"a", "b"}, {"c", "d"}, {"e", "f"}};
  cs.repel = {{"a", "f"}, {"c", "e"}};

  SUBCASE("no test-word overlap: unchanged") {
    const auto out = filter_disjoint(cs, vocab_of({"x", "y"}));
    CHECK(out.attract.size() == 3);
    CHECK(out.repel.size() == 2);
  }
  SUBCASE("all pairs touch test words: empty") {
    const auto out = filter_disjoint(cs, vocab_of({"a", "c", "e"}));
    CHECK(out.attract.empty());
    CHECK(out.repel.empty());
  }
  SUBCASE("mixed fixture removes exactly the flagged pairs") {
    const auto test_words = vocab_of({"d", "f"});
    const auto out = filter_disjoint(cs, test_words);
    // (c,d), (e,f) and (a,f) touch {d,f}; (a,b) and (c,e) survive.
    CHECK(out.attract.size() == 1);
    CHECK(out.attract[0].first == "a");
    CHECK(out.repel.size() == 1);
    CHECK(out.repel[0].first == "c");
    for (const auto& p : out.attract) {
      CHECK(test_words.count(p.first) == 0);
      CHECK(test_words.count(p.second) == 0);
    }
    for (const auto& p : out.repel) {
      CHECK(test_words.count(p.first) == 0);
      CHECK(test_words.count(p.second) == 0);
    }
  }
}
