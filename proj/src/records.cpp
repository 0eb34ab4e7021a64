#include "discourse/records.hpp"

namespace discourse::records {

nlohmann::json snapshot(const TopicSnapshot& s) {
  nlohmann::json j = s;
  j["record"] = "snapshot";
  return j;
}

nlohmann::json assignment(const std::string& post_id, int topic) {
  return {{"record", "assignment"}, {"post_id", post_id}, {"topic_id", topic}};
}

bool is_snapshot(const nlohmann::json& r) { return r.value("record", "") == "snapshot"; }
bool is_assignment(const nlohmann::json& r) { return r.value("record", "") == "assignment"; }

std::vector<nlohmann::json> graph(const DiscourseGraph& g) {
  const auto nl = to_node_link(g);
  std::vector<nlohmann::json> out;
  for (auto n : nl.at("nodes")) {
    n["record"] = "node";
    out.push_back(std::move(n));
  }
  for (auto e : nl.at("edges")) {
    e["record"] = "edge";
    out.push_back(std::move(e));
  }
  return out;
}

DiscourseGraph graph_from(std::span<const nlohmann::json> recs) {
  nlohmann::json nl = {{"nodes", nlohmann::json::array()}, {"edges", nlohmann::json::array()}};
  for (const auto& r : recs) {
    const auto kind = r.value("record", "");
    if (kind == "node") nl["nodes"].push_back(r);
    else if (kind == "edge") nl["edges"].push_back(r);
  }
  return from_node_link(nl);
}

}  // namespace discourse::records
