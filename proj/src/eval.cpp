#include "discourse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "discourse/error.hpp"
#include "discourse/text.hpp"

namespace discourse::eval {

std::string to_string(Task t) { return t == Task::sentiment ? "sentiment" : "hate"; }

Task task_from_string(std::string_view s) {
  if (s == "sentiment") return Task::sentiment;
  if (s == "hate") return Task::hate;
  throw FormatError("unknown task '" + std::string(s) + "'");
}

const std::vector<std::string>& label_set(Task t) {
  static const std::vector<std::string> sentiment{"negative", "neutral", "positive"};
  static const std::vector<std::string> hate{"hate", "normal"};
  return t == Task::sentiment ? sentiment : hate;
}

std::string majority_vote(std::span<const std::string> votes, const std::optional<std::string>& tie_breaker) {
  if (votes.size() != kPrimaryRaters)
    throw ContractViolation("majority vote needs exactly 4 votes, got " + std::to_string(votes.size()));
  std::map<std::string, std::size_t> counts;
  for (const auto& v : votes) ++counts[v];
  std::size_t top = 0;
  for (const auto& [label, c] : counts) top = std::max(top, c);
  std::vector<std::string> leaders;
  for (const auto& [label, c] : counts)
    if (c == top) leaders.push_back(label);
  if (leaders.size() == 1) return leaders.front();
  if (!tie_breaker) throw ContractViolation("votes are tied; a tie-breaker vote is required");
  if (std::find(leaders.begin(), leaders.end(), *tie_breaker) == leaders.end())
    throw ContractViolation("tie-breaker '" + *tie_breaker + "' is not among the tied labels");
  return *tie_breaker;
}

GoldLabel gold_label(const AnnotationSet& a) {
  return {a.post_id, a.task, majority_vote(a.votes, a.tie_breaker)};
}

KappaResult fleiss_kappa(const std::vector<std::vector<std::uint64_t>>& counts) {
  if (counts.empty()) throw ContractViolation("Fleiss' kappa needs at least one item");
  const std::size_t k = counts.front().size();
  std::uint64_t n = 0;
  for (auto c : counts.front()) n += c;
  if (n < 2) throw ContractViolation("Fleiss' kappa needs at least two raters per item");
  const auto items = static_cast<double>(counts.size());
  std::vector<double> col(k, 0.0);
  double p_bar = 0.0;
  for (const auto& row : counts) {
    if (row.size() != k) throw ContractViolation("count rows differ in category count");
    std::uint64_t sum = 0;
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sum += row[j];
      sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      col[j] += static_cast<double>(row[j]);
    }
    if (sum != n) throw ContractViolation("every item must have the same number of ratings");
    const auto nd = static_cast<double>(n);
    p_bar += (sq - nd) / (nd * (nd - 1.0));
  }
  p_bar /= items;
  double p_e = 0.0;
  for (double c : col) {
    const double p = c / (items * static_cast<double>(n));
    p_e += p * p;
  }
  if (p_bar == 1.0) return {1.0, p_e == 1.0};
  if (p_e == 1.0) return {1.0, true};
  return {(p_bar - p_e) / (1.0 - p_e), false};
}

std::vector<std::vector<std::uint64_t>> vote_counts(std::span<const AnnotationSet> sets, Task task) {
  const auto& labels = label_set(task);
  std::vector<std::vector<std::uint64_t>> out;
  for (const auto& s : sets) {
    if (s.task != task) continue;
    std::vector<std::uint64_t> row(labels.size(), 0);
    for (const auto& v : s.votes) {
      const auto it = std::find(labels.begin(), labels.end(), v);
      if (it == labels.end()) throw ContractViolation("label '" + v + "' not in the " + to_string(task) + " label set");
      ++row[static_cast<std::size_t>(it - labels.begin())];
    }
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, const std::string& what, std::vector<std::string>& warnings) {
  if (den == 0) {
    warnings.push_back(what + " undefined (0/0), reported as 0");
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

MetricsReport precision_recall_f1(const std::map<std::string, std::string>& preds,
                                  const std::map<std::string, std::string>& gold, const MetricsMode& mode,
                                  const std::vector<std::string>& labels) {
  std::vector<std::pair<const std::string*, const std::string*>> aligned;  // (pred, gold)
  for (const auto& [id, g] : gold)
    if (auto it = preds.find(id); it != preds.end()) aligned.emplace_back(&it->second, &g);
  if (aligned.empty()) throw ContractViolation("predictions and gold labels share no post ids");

  std::vector<std::string> classes = labels;
  if (classes.empty()) {
    std::set<std::string> seen;
    for (auto [p, g] : aligned) {
      seen.insert(*p);
      seen.insert(*g);
    }
    classes.assign(seen.begin(), seen.end());
  }
  if (mode.averaging == Averaging::binary && std::find(classes.begin(), classes.end(), mode.positive_label) == classes.end())
    classes.push_back(mode.positive_label);

  MetricsReport rep;
  rep.averaging = mode.averaging;
  rep.positive_label = mode.positive_label;
  rep.n = aligned.size();
  for (const auto& c : classes) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (auto [p, g] : aligned) {
      if (*p == c && *g == c) ++tp;
      else if (*p == c) ++fp;
      else if (*g == c) ++fn;
    }
    ClassMetrics m;
    m.precision = ratio(tp, tp + fp, "precision of '" + c + "'", rep.warnings);
    m.recall = ratio(tp, tp + fn, "recall of '" + c + "'", rep.warnings);
    m.f1 = harmonic(m.precision, m.recall);
    m.support = tp + fn;
    rep.per_class[c] = m;
  }
  if (mode.averaging == Averaging::binary) {
    if (mode.positive_label.empty()) throw ContractViolation("binary averaging needs a positive label");
    const auto& m = rep.per_class.at(mode.positive_label);
    rep.precision = m.precision;
    rep.recall = m.recall;
    rep.f1 = m.f1;
  } else {
    for (const auto& [c, m] : rep.per_class) {
      rep.precision += m.precision;
      rep.recall += m.recall;
      rep.f1 += m.f1;
    }
    const auto k = static_cast<double>(rep.per_class.size());
    rep.precision /= k;
    rep.recall /= k;
    rep.f1 /= k;
  }
  return rep;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [c, m] : r.per_class)
    per[c] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  nlohmann::json j = {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
                      {"averaging", r.averaging == Averaging::binary ? "binary" : "macro"},
                      {"n", r.n},                 {"per_class", per}, {"warnings", r.warnings}};
  if (r.averaging == Averaging::binary) j["positive_label"] = r.positive_label;
  return j;
}

std::string render_table(std::span<const TableRow> rows) {
  std::size_t wt = 4, wm = 5;
  for (const auto& r : rows) {
    wt = std::max(wt, r.task.size());
    wm = std::max(wm, r.model.size());
  }
  auto line = [&](const std::string& t, const std::string& m, const std::string& p, const std::string& r,
                  const std::string& f) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "| %-*s | %-*s | %9s | %6s | %4s |\n", static_cast<int>(wt), t.c_str(),
                  static_cast<int>(wm), m.c_str(), p.c_str(), r.c_str(), f.c_str());
    return std::string(buf);
  };
  auto fmt = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::string out = line("Task", "Model", "Precision", "Recall", "F1");
  out += "|" + std::string(wt + 2, '-') + "|" + std::string(wm + 2, '-') + "|-----------|--------|------|\n";
  for (const auto& r : rows) out += line(r.task, r.model, fmt(r.report.precision), fmt(r.report.recall), fmt(r.report.f1));
  return out;
}

namespace {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (text::trim(line).empty()) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(no) + ": " + e.what());
    }
  }
}

void check_label(Task task, const std::string& label) {
  const auto& ls = label_set(task);
  if (std::find(ls.begin(), ls.end(), label) == ls.end())
    throw FormatError("label '" + label + "' not in the " + to_string(task) + " label set");
}

}  // namespace

std::vector<AnnotationSet> load_annotations(const std::filesystem::path& path) {
  std::vector<AnnotationSet> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    AnnotationSet a;
    a.post_id = j.at("post_id").get<std::string>();
    a.task = task_from_string(j.at("task").get<std::string>());
    a.votes = j.at("votes").get<std::vector<std::string>>();
    if (a.votes.size() != kPrimaryRaters) throw FormatError("annotation for " + a.post_id + " needs 4 votes");
    for (const auto& v : a.votes) check_label(a.task, v);
    if (j.contains("tie_breaker") && j.at("tie_breaker").is_string()) {
      a.tie_breaker = j.at("tie_breaker").get<std::string>();
      check_label(a.task, *a.tie_breaker);
    }
    out.push_back(std::move(a));
  });
  return out;
}

std::map<Task, std::map<std::string, std::string>> load_predictions(const std::filesystem::path& path) {
  std::map<Task, std::map<std::string, std::string>> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) {
    const auto task = task_from_string(j.at("task").get<std::string>());
    auto label = j.at("label").get<std::string>();
    check_label(task, label);
    out[task][j.at("post_id").get<std::string>()] = std::move(label);
  });
  return out;
}

}  // namespace discourse::eval
