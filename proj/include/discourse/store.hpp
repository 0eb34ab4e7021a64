#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "discourse/timeutil.hpp"

namespace discourse {

enum class Dataset { posts, classified, topics, graph, factcheck };

inline constexpr Dataset kAllDatasets[] = {Dataset::posts, Dataset::classified, Dataset::topics, Dataset::graph,
                                           Dataset::factcheck};

std::string to_string(Dataset d);
Dataset dataset_from_string(std::string_view s);

struct PartitionKey {
  Dataset dataset;
  Day day;
};

inline constexpr int kSchemaVersion = 1;

struct ManifestEntry {
  std::string digest;  ///< sha256 hex of the file bytes
  std::size_t records = 0;
};

struct Manifest {
  int schema_version = kSchemaVersion;
  std::map<Dataset, std::map<Day, ManifestEntry>> datasets;
};

/// Day-partitioned JSONL store:
///
///   <root>/manifest.json
///   <root>/data/<dataset>/<YYYY-MM-DD>.jsonl
///   <root>/.locks/            (advisory lock files)
///
/// Writes go to a temporary file that is renamed into place, then the
/// manifest is rewritten the same way under a store-wide lock. Reads verify
/// the file digest against the manifest.
class Store {
 public:
  /// Opens an existing store. Throws NotFound when there is no manifest.
  static Store open(const std::filesystem::path& root);
  /// Opens the store, creating the directory layout and manifest if needed.
  static Store open_or_create(const std::filesystem::path& root);

  /// Replaces the partition; returns the content digest.
  std::string put(const PartitionKey& key, std::span<const nlohmann::json> records);
  /// Throws NotFound for an absent key and CorruptionError on digest mismatch.
  std::vector<nlohmann::json> get(const PartitionKey& key) const;
  bool contains(const PartitionKey& key) const;

  /// Records of every stored day in [from, to], in day order; absent days are
  /// skipped and an empty range (to < from) yields nothing.
  std::vector<nlohmann::json> query_range(Dataset dataset, Day from, Day to) const;
  std::vector<Day> days(Dataset dataset) const;

  /// Re-reads the manifest from disk.
  Manifest manifest() const;
  const std::filesystem::path& root() const { return root_; }

  /// Serialized form: one compact JSON document per line.
  static std::string serialize(std::span<const nlohmann::json> records);

 private:
  explicit Store(std::filesystem::path root);
  std::filesystem::path data_path(const PartitionKey& key) const;

  std::filesystem::path root_;
  std::shared_ptr<std::mutex> manifest_mu_;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

}  // namespace discourse
