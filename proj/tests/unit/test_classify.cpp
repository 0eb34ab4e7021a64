#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "discourse/classify.hpp"
#include "support/tempdir.hpp"

using namespace discourse;

namespace {

Post post(std::string id, std::string text) {
  Post p;
  p.id = std::move(id);
  p.platform = "telegram";
  p.author = "kanal";
  p.published_at = parse_timestamp("2024-01-10T10:00:00Z");
  p.text = std::move(text);
  return p;
}

// Returns canned scores and fails on texts containing "boom".
class ScriptedBackend final : public ClassifierBackend {
 public:
  ScriptedBackend(Capability cap, std::vector<double> scores, bool transport_failure = false)
      : cap_(cap), scores_(std::move(scores)), transport_failure_(transport_failure) {}
  Capability capability() const override { return cap_; }
  std::string id() const override { return "scripted"; }
  std::vector<std::vector<double>> score(std::span<const std::string> texts) override {
    if (transport_failure_) throw RetryableError("connection refused");
    for (const auto& t : texts)
      if (t.find("boom") != std::string::npos) throw FormatError("model rejected input");
    return std::vector<std::vector<double>>(texts.size(), scores_);
  }

 private:
  Capability cap_;
  std::vector<double> scores_;
  bool transport_failure_;
};

class UpperTranslator final : public TranslationProvider {
 public:
  std::string id() const override { return "upper"; }
  std::string translate(std::string_view text, std::string_view) override {
    std::string s(text);
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  }
};

}  // namespace

TEST_SUITE("classify") {

TEST_CASE("compound thresholds are inclusive") {
  CHECK(label_from_compound(0.0) == SentimentLabel::neutral);
  CHECK(label_from_compound(0.5) == SentimentLabel::positive);
  CHECK(label_from_compound(-0.05) == SentimentLabel::negative);
  CHECK(label_from_compound(0.05) == SentimentLabel::positive);
  CHECK(label_from_compound(0.0499) == SentimentLabel::neutral);
  CHECK(label_from_compound(-1.0) == SentimentLabel::negative);
  CHECK_THROWS_AS(label_from_compound(1.0001), ContractViolation);
  CHECK_THROWS_AS(label_from_compound(std::nan("")), ContractViolation);
}

TEST_CASE("hate argmax with tie to normal") {
  CHECK(hate_from_scores(2.0, -1.0).label == HateLabel::normal);
  CHECK(hate_from_scores(-1.0, 2.0).label == HateLabel::hate);
  CHECK(hate_from_scores(0.3, 0.3).label == HateLabel::normal);
  CHECK_THROWS_AS(hate_from_scores(std::numeric_limits<double>::infinity(), 0.0), ContractViolation);
  CHECK_THROWS_AS(hate_from_scores(0.0, std::nan("")), ContractViolation);
}

TEST_CASE("hate score: probability pairs pass through, logits are softmaxed") {
  CHECK(hate_from_scores(0.25, 0.75).hate_score == doctest::Approx(0.75).epsilon(1e-12));
  const double sm = 1.0 / (1.0 + std::exp(-3.0));
  CHECK(hate_from_scores(-1.0, 2.0).hate_score == doctest::Approx(sm).epsilon(1e-12));
  CHECK(hate_from_scores(0.3, 0.3).hate_score == doctest::Approx(0.5));
  CHECK(hate_from_scores(1000.0, -1000.0).hate_score == doctest::Approx(0.0));
}

TEST_CASE("property: hate label invariant under strictly monotone transforms") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 500; ++i) {
    const double a = u(rng), b = u(rng);
    const auto base = hate_from_scores(a, b).label;
    CHECK(hate_from_scores(std::exp(a), std::exp(b)).label == base);
    CHECK(hate_from_scores(3.0 * a + 7.0, 3.0 * b + 7.0).label == base);
    CHECK(hate_from_scores(std::atan(a), std::atan(b)).label == base);
  }
}

TEST_CASE("sentiment score vectors") {
  const double one[] = {0.4};
  CHECK(sentiment_from_scores(one).label == SentimentLabel::positive);
  const double dist[] = {0.7, 0.2, 0.1};
  auto r = sentiment_from_scores(dist);
  CHECK(r.compound == doctest::Approx(-0.6));
  CHECK(r.label == SentimentLabel::negative);
  const double two[] = {0.1, 0.2};
  CHECK_THROWS_AS(sentiment_from_scores(two), ContractViolation);
}

TEST_CASE("lexicon stub: hate cue and neutral default") {
  LexiconBackend sent(Capability::sentiment, {{"gut", 1.5}});
  LexiconBackend hate(Capability::hate, {{"hass", 0.6}});
  IdentityTranslator id;
  std::vector<Post> posts{post("1", "nur hass"), post("2", "völlig unbekannte wörter"), post("3", "Gut gut")};
  auto out = classify_posts(posts, sent, hate, id);
  REQUIRE(out.posts.size() == 3);
  CHECK(out.errors.empty());
  // s = 0.6 beats the fixed 0.5 normal logit.
  CHECK(out.posts[0].hate.label == HateLabel::hate);
  CHECK(out.posts[1].hate.label == HateLabel::normal);
  CHECK(out.posts[1].sentiment.compound == 0.0);
  CHECK(out.posts[1].sentiment.label == SentimentLabel::neutral);
  // s = 3 -> 3 / sqrt(24)
  CHECK(out.posts[2].sentiment.compound == doctest::Approx(3.0 / std::sqrt(24.0)).epsilon(1e-12));
  CHECK(out.posts[2].backend_ids == std::vector<std::string>{"lexicon/sentiment", "lexicon/hate", "identity"});
}

TEST_CASE("lexicon file loading") {
  testsupport::TempDir d;
  auto lex = LexiconBackend::load(Capability::hate, d.write("h.json", R"({"Hass": 0.6})"));
  CHECK(lex.id() == "lexicon:h.json/hate");
  std::string t = "HASS";
  CHECK(lex.score(std::span(&t, 1))[0][1] == doctest::Approx(0.6));
  CHECK_THROWS_AS(LexiconBackend::load(Capability::hate, d.write("bad.json", "[1]")), FormatError);
  CHECK_THROWS_AS(LexiconBackend::load(Capability::hate, d / "missing.json"), IoError);
}

TEST_CASE("empty input gives empty output") {
  LexiconBackend sent(Capability::sentiment, {});
  LexiconBackend hate(Capability::hate, {});
  IdentityTranslator id;
  auto out = classify_posts(std::vector<Post>{}, sent, hate, id);
  CHECK(out.posts.empty());
  CHECK(out.errors.empty());
}

TEST_CASE("translator output is what the backends score") {
  LexiconBackend sent(Capability::sentiment, {{"GOOD", 2.0}});
  LexiconBackend hate(Capability::hate, {});
  UpperTranslator up;
  auto out = classify_posts(std::vector<Post>{post("1", "good")}, sent, hate, up);
  REQUIRE(out.posts.size() == 1);
  CHECK(out.posts[0].sentiment.label == SentimentLabel::positive);
  // The stored post keeps its original text.
  CHECK(out.posts[0].post.text == "good");
}

TEST_CASE("backend failure is recorded per post and the batch continues") {
  ScriptedBackend sent(Capability::sentiment, {0.3});
  ScriptedBackend hate(Capability::hate, {0.9, 0.1});
  IdentityTranslator id;
  std::vector<Post> posts{post("a", "ok"), post("b", "boom"), post("c", "ok")};
  ClassifyOptions opt;
  opt.batch_size = 1;
  auto out = classify_posts(posts, sent, hate, id, opt);
  REQUIRE(out.posts.size() == 2);
  CHECK(out.posts[0].post.id == "a");
  CHECK(out.posts[1].post.id == "c");
  REQUIRE(out.errors.size() == 1);
  CHECK(out.errors[0].item_id == "b");
}

TEST_CASE("transport failure propagates as retryable") {
  ScriptedBackend sent(Capability::sentiment, {0.3}, true);
  ScriptedBackend hate(Capability::hate, {0.9, 0.1});
  IdentityTranslator id;
  CHECK_THROWS_AS(classify_posts(std::vector<Post>{post("a", "x")}, sent, hate, id), RetryableError);
}

TEST_CASE("capability mismatch is a contract violation") {
  ScriptedBackend a(Capability::hate, {0.1, 0.9});
  ScriptedBackend b(Capability::hate, {0.1, 0.9});
  IdentityTranslator id;
  CHECK_THROWS_AS(classify_posts(std::vector<Post>{post("a", "x")}, a, b, id), ContractViolation);
}

TEST_CASE("property: concurrent batches preserve order and match sequential output") {
  LexiconBackend sent(Capability::sentiment, {{"gut", 1.0}, {"schlecht", -1.0}});
  LexiconBackend hate(Capability::hate, {{"hass", 1.0}});
  IdentityTranslator id;
  std::mt19937 rng(3);
  const char* words[] = {"gut", "schlecht", "hass", "und", "heute"};
  std::vector<Post> posts;
  for (int i = 0; i < 200; ++i) {
    std::string t;
    for (int k = 0; k < 4; ++k) t += std::string(words[rng() % 5]) + " ";
    posts.push_back(post("p" + std::to_string(i), t));
  }
  auto seq = classify_posts(posts, sent, hate, id);
  ClassifyOptions opt;
  opt.batch_size = 7;
  opt.max_concurrency = 4;
  auto par = classify_posts(posts, sent, hate, id, opt);
  REQUIRE(par.posts.size() == posts.size());
  CHECK(par.posts == seq.posts);
  for (std::size_t i = 0; i < posts.size(); ++i) {
    CHECK(par.posts[i].post.id == posts[i].id);
    CHECK(par.posts[i].sentiment.label == label_from_compound(par.posts[i].sentiment.compound));
  }
}

TEST_CASE("classified post JSON round trip") {
  ClassifiedPost cp;
  cp.post = post("x", "Text");
  cp.sentiment = {SentimentLabel::negative, -0.25};
  cp.hate = {HateLabel::hate, 0.875};
  cp.backend_ids = {"s", "h", "t"};
  nlohmann::json j = cp;
  CHECK(j.get<ClassifiedPost>() == cp);
  j["hate"]["label"] = "evil";
  CHECK_THROWS_AS(j.get<ClassifiedPost>(), FormatError);
}

}
