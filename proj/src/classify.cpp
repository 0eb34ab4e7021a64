#include "discourse/classify.hpp"

#include <cmath>
#include <fstream>
#include <future>

#include "discourse/text.hpp"

namespace discourse {

std::string to_string(SentimentLabel l) {
  switch (l) {
    case SentimentLabel::positive: return "positive";
    case SentimentLabel::negative: return "negative";
    case SentimentLabel::neutral: return "neutral";
  }
  return "neutral";
}

std::string to_string(HateLabel l) { return l == HateLabel::hate ? "hate" : "normal"; }

SentimentLabel sentiment_label_from_string(std::string_view s) {
  if (s == "positive") return SentimentLabel::positive;
  if (s == "negative") return SentimentLabel::negative;
  if (s == "neutral") return SentimentLabel::neutral;
  throw FormatError("unknown sentiment label '" + std::string(s) + "'");
}

HateLabel hate_label_from_string(std::string_view s) {
  if (s == "hate") return HateLabel::hate;
  if (s == "normal") return HateLabel::normal;
  throw FormatError("unknown hate label '" + std::string(s) + "'");
}

SentimentLabel label_from_compound(double compound) {
  if (!(compound >= -1.0 && compound <= 1.0))
    throw ContractViolation("compound score outside [-1, 1]: " + std::to_string(compound));
  if (compound >= kPositiveThreshold) return SentimentLabel::positive;
  if (compound <= kNegativeThreshold) return SentimentLabel::negative;
  return SentimentLabel::neutral;
}

HateResult hate_from_scores(double normal, double hate) {
  if (!std::isfinite(normal) || !std::isfinite(hate))
    throw ContractViolation("non-finite hate classifier scores");
  HateResult r;
  r.label = hate > normal ? HateLabel::hate : HateLabel::normal;
  const bool probability_pair =
      normal >= 0.0 && normal <= 1.0 && hate >= 0.0 && hate <= 1.0 && std::abs(normal + hate - 1.0) <= 1e-9;
  if (probability_pair) {
    r.hate_score = hate;
  } else {
    // Numerically stable two-class softmax.
    const double m = std::max(normal, hate);
    const double eh = std::exp(hate - m);
    const double en = std::exp(normal - m);
    r.hate_score = eh / (eh + en);
  }
  return r;
}

SentimentResult sentiment_from_scores(std::span<const double> scores) {
  double compound = 0.0;
  if (scores.size() == 1) {
    compound = scores[0];
  } else if (scores.size() == 3) {
    compound = scores[2] - scores[0];
  } else {
    throw ContractViolation("sentiment backend returned " + std::to_string(scores.size()) +
                            " scores; expected 1 or 3");
  }
  return SentimentResult{label_from_compound(compound), compound};
}

LexiconBackend::LexiconBackend(Capability cap, std::map<std::string, double> lexicon, std::string name)
    : cap_(cap), name_(std::move(name)) {
  for (auto& [term, score] : lexicon) lexicon_[text::case_fold(term)] += score;
}

LexiconBackend LexiconBackend::load(Capability cap, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read lexicon " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("lexicon " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError("lexicon " + path.string() + " must be a JSON object");
  std::map<std::string, double> lex;
  for (const auto& [term, score] : j.items()) {
    if (!score.is_number()) throw FormatError("lexicon score for '" + term + "' is not a number");
    lex[term] = score.get<double>();
  }
  return LexiconBackend(cap, std::move(lex), "lexicon:" + path.filename().string());
}

std::string LexiconBackend::id() const {
  return name_ + (cap_ == Capability::sentiment ? "/sentiment" : "/hate");
}

std::vector<std::vector<double>> LexiconBackend::score(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    double s = 0.0;
    for (const auto& tok : text::word_tokens(t)) {
      if (auto it = lexicon_.find(tok); it != lexicon_.end()) s += it->second;
    }
    if (cap_ == Capability::sentiment) {
      out.push_back({s / std::sqrt(s * s + 15.0)});
    } else {
      out.push_back({0.5, s});
    }
  }
  return out;
}

RemoteBackend::RemoteBackend(Capability cap, EndpointConfig endpoint)
    : cap_(cap), client_(std::move(endpoint)) {}

std::vector<std::vector<double>> RemoteBackend::score(std::span<const std::string> texts) {
  const auto reply = client_.post(nlohmann::json{{"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  if (!reply.is_object() || !reply.contains("scores") || !reply.at("scores").is_array())
    throw FormatError("remote classifier reply lacks a 'scores' array");
  std::vector<std::vector<double>> out;
  for (const auto& row : reply.at("scores")) {
    if (!row.is_array()) throw FormatError("remote classifier score row is not an array");
    std::vector<double> v;
    for (const auto& x : row) {
      if (!x.is_number()) throw FormatError("remote classifier score is not a number");
      v.push_back(x.get<double>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

RemoteTranslator::RemoteTranslator(EndpointConfig endpoint, std::string target_language)
    : client_(std::move(endpoint)), target_(std::move(target_language)) {}

std::string RemoteTranslator::translate(std::string_view text, std::string_view source_language) {
  const auto reply = client_.post(
      {{"text", text}, {"source_language", source_language}, {"target_language", target_}});
  if (!reply.is_object() || !reply.contains("text") || !reply.at("text").is_string())
    throw FormatError("remote translator reply lacks a 'text' string");
  return reply.at("text").get<std::string>();
}

void to_json(nlohmann::json& j, const ClassifiedPost& c) {
  j = nlohmann::json{{"post", c.post},
                     {"sentiment", {{"label", to_string(c.sentiment.label)}, {"compound", c.sentiment.compound}}},
                     {"hate", {{"label", to_string(c.hate.label)}, {"hate_score", c.hate.hate_score}}},
                     {"backend_ids", c.backend_ids}};
}

void from_json(const nlohmann::json& j, ClassifiedPost& c) {
  c.post = j.at("post").get<Post>();
  c.sentiment.label = sentiment_label_from_string(j.at("sentiment").at("label").get<std::string>());
  c.sentiment.compound = j.at("sentiment").at("compound").get<double>();
  c.hate.label = hate_label_from_string(j.at("hate").at("label").get<std::string>());
  c.hate.hate_score = j.at("hate").at("hate_score").get<double>();
  c.backend_ids = j.value("backend_ids", std::vector<std::string>{});
}

namespace {

struct Slot {
  std::optional<ClassifiedPost> result;
  std::optional<std::string> error;
};

void classify_batch(std::span<const Post> batch, std::span<Slot> slots, ClassifierBackend& sentiment,
                    ClassifierBackend& hate, TranslationProvider& translator) {
  std::vector<std::string> texts;
  std::vector<std::size_t> index;  // position in batch for each translated text
  for (std::size_t i = 0; i < batch.size(); ++i) {
    try {
      texts.push_back(translator.translate(batch[i].text, batch[i].language));
      index.push_back(i);
    } catch (const RetryableError&) {
      throw;
    } catch (const std::exception& e) {
      slots[i].error = std::string("translation failed: ") + e.what();
    }
  }
  if (texts.empty()) return;

  auto fail_all = [&](const std::string& why) {
    for (auto i : index) slots[i].error = why;
  };
  std::vector<std::vector<double>> s_scores;
  std::vector<std::vector<double>> h_scores;
  try {
    s_scores = sentiment.score(texts);
    h_scores = hate.score(texts);
  } catch (const RetryableError&) {
    throw;
  } catch (const std::exception& e) {
    fail_all(std::string("backend failure: ") + e.what());
    return;
  }
  if (s_scores.size() != texts.size() || h_scores.size() != texts.size()) {
    fail_all("backend returned a score count different from the input count");
    return;
  }
  for (std::size_t k = 0; k < texts.size(); ++k) {
    const auto i = index[k];
    try {
      if (h_scores[k].size() != 2)
        throw ContractViolation("hate backend returned " + std::to_string(h_scores[k].size()) +
                                " scores; expected 2");
      ClassifiedPost cp;
      cp.post = batch[i];
      cp.sentiment = sentiment_from_scores(s_scores[k]);
      cp.hate = hate_from_scores(h_scores[k][0], h_scores[k][1]);
      cp.backend_ids = {sentiment.id(), hate.id(), translator.id()};
      slots[i].result = std::move(cp);
    } catch (const Error& e) {
      slots[i].error = e.what();
    }
  }
}

}  // namespace

ClassifyOutcome classify_posts(std::span<const Post> posts, ClassifierBackend& sentiment,
                               ClassifierBackend& hate, TranslationProvider& translator,
                               const ClassifyOptions& options) {
  if (sentiment.capability() != Capability::sentiment || hate.capability() != Capability::hate)
    throw ContractViolation("classifier backends passed with mismatched capability tags");
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t width = std::max<std::size_t>(1, options.max_concurrency);

  std::vector<Slot> slots(posts.size());
  std::vector<std::future<void>> inflight;
  for (std::size_t start = 0; start < posts.size(); start += batch) {
    const std::size_t n = std::min(batch, posts.size() - start);
    auto run = [&, start, n] {
      classify_batch(posts.subspan(start, n), std::span(slots).subspan(start, n), sentiment, hate, translator);
    };
    if (width == 1) {
      run();
      continue;
    }
    inflight.push_back(std::async(std::launch::async, run));
    if (inflight.size() >= width) {
      for (auto& f : inflight) f.get();
      inflight.clear();
    }
  }
  for (auto& f : inflight) f.get();

  ClassifyOutcome out;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (slots[i].result) {
      out.posts.push_back(std::move(*slots[i].result));
    } else {
      out.errors.push_back({posts[i].id, slots[i].error.value_or("unclassified")});
    }
  }
  return out;
}

}  // namespace discourse
