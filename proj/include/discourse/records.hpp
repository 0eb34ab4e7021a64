#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "discourse/graph.hpp"
#include "discourse/topics.hpp"

// Stored record layouts shared by the pipeline stages and the API.
//
//   topics/<day>.jsonl     {"record":"snapshot", day, topic_id, size, terms, doc_ids}
//                          {"record":"assignment", post_id, topic_id}
//   graph/<day>.jsonl      {"record":"node", id, kind, display_name, occurrence_count}
//                          {"record":"edge", source, target, kind, weight, directed}
//   posts, classified and factcheck partitions hold plain Post,
//   ClassifiedPost and FactCheckRecord documents.

namespace discourse::records {

nlohmann::json snapshot(const TopicSnapshot& s);
nlohmann::json assignment(const std::string& post_id, int topic);

bool is_snapshot(const nlohmann::json& r);
bool is_assignment(const nlohmann::json& r);

std::vector<nlohmann::json> graph(const DiscourseGraph& g);
/// Sums node occurrences and edge weights over all node/edge records.
DiscourseGraph graph_from(std::span<const nlohmann::json> recs);

}  // namespace discourse::records
