#include "genderbias/tokenizer.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace genderbias;
using namespace genderbias::testing;

namespace {

using Words = std::vector<std::string>;

std::vector<std::string> pieces(const std::vector<TokenId>& ids, const Vocab& vocab) {
  std::vector<std::string> out;
  for (TokenId id : ids) out.push_back(vocab.token(id));
  return out;
}

}  // namespace

TEST_CASE("vocab") {
  const Vocab vocab = fixture_vocab();
  CHECK(vocab.token(vocab.cls_id()) == "[CLS]");
  CHECK(vocab.token(vocab.sep_id()) == "[SEP]");
  CHECK(vocab.token(vocab.unk_id()) == "[UNK]");
  CHECK(vocab.token(vocab.pad_id()) == "[PAD]");
  CHECK(vocab.find("nurse").has_value());
  CHECK_FALSE(vocab.find("xyzzy").has_value());
  for (TokenId id = 0; id < static_cast<TokenId>(vocab.size()); ++id)
    CHECK(vocab.find(vocab.token(id)) == id);

  CHECK_THROWS_AS(Vocab({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "a"}), VocabError);
  CHECK_THROWS_AS(Vocab({"[PAD]", "[UNK]", "[CLS]", "a"}), VocabError);

  TempDir dir("vocab");
  write_text(dir / "vocab.txt", "[PAD]\n[UNK]\n[CLS]\n[SEP]\nhe\r\nshe\n");
  const Vocab loaded = load_vocab(dir / "vocab.txt");
  CHECK(loaded.size() == 6);
  CHECK(loaded.find("he") == 4);
  CHECK(loaded.find("she") == 5);
  CHECK_THROWS_AS((void)load_vocab(dir / "missing.txt"), VocabError);
}

TEST_CASE("basic_tokenize") {
  CHECK(basic_tokenize("He said, hello") == Words{"he", "said", ",", "hello"});
  CHECK(basic_tokenize("").empty());
  CHECK(basic_tokenize("  \t\n ").empty());
  CHECK(basic_tokenize("She's a nurse.") == Words{"she", "'", "s", "a", "nurse", "."});
  CHECK(basic_tokenize("Café NAÏVE") == Words{"cafe", "naive"});
  CHECK(basic_tokenize("Łódź") == Words{"łodz"});
  CHECK(basic_tokenize("e-mail@home") == Words{"e", "-", "mail", "@", "home"});
  CHECK(basic_tokenize("北京") == Words{"北", "京"});
  CHECK(basic_tokenize("a\x01z") == Words{"az"});

  const std::string text = "He told  her.";
  const auto spans = basic_tokenize_spans(text);
  REQUIRE(spans.size() == 4);
  CHECK(text.substr(spans[1].begin, spans[1].end - spans[1].begin) == "told");
  CHECK(text.substr(spans[2].begin, spans[2].end - spans[2].begin) == "her");
  CHECK(spans[3].word == ".");
  CHECK(spans[3].begin == 12);
}

TEST_CASE("wordpiece") {
  const Vocab vocab = fixture_vocab();
  CHECK(pieces(wordpiece("nurse", vocab), vocab) == Words{"nurse"});
  CHECK(pieces(wordpiece("playing", vocab), vocab) == Words{"play", "##ing"});
  CHECK(pieces(wordpiece("unknown", vocab), vocab) == Words{"un", "##known"});
  CHECK(pieces(wordpiece("@", vocab), vocab) == Words{"[UNK]"});
  CHECK(pieces(wordpiece(std::string(kMaxWordChars + 1, 'a'), vocab), vocab) == Words{"[UNK]"});
  CHECK(wordpiece(std::string(kMaxWordChars, 'a'), vocab).size() > 1);

  const Vocab tiny({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "x", "##q"});
  CHECK(pieces(wordpiece("xqzv", tiny), tiny) == Words{"[UNK]"});
  CHECK(pieces(wordpiece("xq", tiny), tiny) == Words{"x", "##q"});
}

TEST_CASE("encode_with_alignment") {
  const Vocab vocab = fixture_vocab();
  const auto ts = encode_with_alignment("He told her the nurse was playing.", vocab, 128);
  CHECK(ts.token_ids.front() == vocab.cls_id());
  CHECK(ts.token_ids.back() == vocab.sep_id());
  REQUIRE(ts.words.size() == 8);
  CHECK(ts.length() == 11);
  CHECK(ts.alignment[6] == TokenSpan{7, 9});
  CHECK(ts.alignment[7] == TokenSpan{9, 10});
  for (const char* pronoun : {"he", "she", "him", "her", "his"}) {
    const auto one = encode_with_alignment(pronoun, vocab, 8);
    CHECK(one.alignment.at(0).size() == 1);
  }

  SUBCASE("length cap counts the special tokens") {
    CHECK(encode_with_alignment("he told her", vocab, 5).length() == 5);
    try {
      (void)encode_with_alignment("he told her", vocab, 4);
      FAIL("expected SentenceTooLong");
    } catch (const SentenceTooLong& e) {
      CHECK(e.tokens() == 5);
    }
  }

  SUBCASE("empty text") {
    const auto empty = encode_with_alignment("", vocab, 8);
    CHECK(empty.length() == 2);
    CHECK(empty.alignment.empty());
  }

  SUBCASE("deterministic") {
    const auto again = encode_with_alignment("He told her the nurse was playing.", vocab, 128);
    CHECK(again.token_ids == ts.token_ids);
    CHECK(again.alignment == ts.alignment);
  }
}

TEST_CASE("property: alignment invariants and span round trip") {
  const Vocab vocab = fixture_vocab();
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,'!?;:\"()-";
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> word_len(1, 12), word_count(0, 15), gap(1, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const int n = word_count(rng);
    for (int w = 0; w < n; ++w) {
      text.append(static_cast<std::size_t>(gap(rng)), ' ');
      const int len = word_len(rng);
      for (int c = 0; c < len; ++c) text.push_back(alphabet[pick(rng)]);
    }
    const auto ts = encode_with_alignment(text, vocab, 1024);
    REQUIRE(ts.alignment.size() == ts.words.size());
    std::size_t expected_begin = 1;
    for (std::size_t w = 0; w < ts.words.size(); ++w) {
      const TokenSpan& span = ts.alignment[w];
      CHECK(span.begin == expected_begin);
      CHECK(span.end > span.begin);
      expected_begin = span.end;
      CHECK(detokenize_span(ts, w, vocab) == ts.words[w]);
    }
    CHECK(expected_begin == ts.length() - 1);
  }
}

TEST_CASE("utf8") {
  std::size_t bad = 0;
  CHECK(utf8::sanitize("ok \xff there", &bad) == "ok \xEF\xBF\xBD there");
  CHECK(bad == 1);
  bad = 0;
  CHECK(utf8::decode("\xC3\xA9", &bad) == std::u32string{U'é'});
  CHECK(bad == 0);
  CHECK(utf8::decode("\xE2\x82", &bad).size() == 1);
  CHECK(bad == 1);
  std::string s;
  utf8::append(s, U'京');
  CHECK(s == "\xE4\xBA\xAC");
}
