#include "discourse/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "discourse/digest.hpp"
#include "discourse/error.hpp"

namespace fs = std::filesystem;

namespace discourse {

std::string to_string(Dataset d) {
  switch (d) {
    case Dataset::posts: return "posts";
    case Dataset::classified: return "classified";
    case Dataset::topics: return "topics";
    case Dataset::graph: return "graph";
    case Dataset::factcheck: return "factcheck";
  }
  return "posts";
}

Dataset dataset_from_string(std::string_view s) {
  for (auto d : kAllDatasets)
    if (to_string(d) == s) return d;
  throw FormatError("unknown dataset '" + std::string(s) + "'");
}

nlohmann::json to_json(const Manifest& m) {
  nlohmann::json ds = nlohmann::json::object();
  for (const auto& [d, days] : m.datasets) {
    nlohmann::json entries = nlohmann::json::object();
    for (const auto& [day, e] : days) entries[day.iso()] = {{"digest", e.digest}, {"records", e.records}};
    ds[to_string(d)] = std::move(entries);
  }
  return {{"schema_version", m.schema_version}, {"datasets", std::move(ds)}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != kSchemaVersion)
    throw CorruptionError("unsupported store schema version " + std::to_string(m.schema_version));
  for (const auto& [name, days] : j.at("datasets").items()) {
    auto& slot = m.datasets[dataset_from_string(name)];
    for (const auto& [day, e] : days.items())
      slot[Day::parse(day)] = {e.at("digest").get<std::string>(), e.at("records").get<std::size_t>()};
  }
  return m;
}

namespace {

/// flock(2)-based exclusive lock, released on destruction.
class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw IoError("cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomically(const fs::path& target, const std::string& bytes) {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream name;
  name << "." << target.filename().string() << ".tmp." << ::getpid() << "." << counter++;
  const fs::path tmp = target.parent_path() / name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + target.string());
  }
}

Manifest read_manifest(const fs::path& root) {
  try {
    return manifest_from_json(nlohmann::json::parse(read_file(root / "manifest.json")));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("unreadable manifest: " + std::string(e.what()));
  }
}

void write_manifest(const fs::path& root, const Manifest& m) {
  write_atomically(root / "manifest.json", to_json(m).dump(2) + "\n");
}

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)), manifest_mu_(std::make_shared<std::mutex>()) {}

Store Store::open(const fs::path& root) {
  if (!fs::exists(root / "manifest.json")) throw NotFound("no store at " + root.string());
  Store s(root);
  read_manifest(root);
  return s;
}

Store Store::open_or_create(const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root / "data", ec);
  fs::create_directories(root / ".locks", ec);
  if (ec) throw IoError("cannot create store at " + root.string() + ": " + ec.message());
  {
    FileLock lock(root / ".locks" / "manifest.lock");
    if (!fs::exists(root / "manifest.json")) write_manifest(root, Manifest{});
  }
  return open(root);
}

fs::path Store::data_path(const PartitionKey& key) const {
  return root_ / "data" / to_string(key.dataset) / (key.day.iso() + ".jsonl");
}

std::string Store::serialize(std::span<const nlohmann::json> records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

std::string Store::put(const PartitionKey& key, std::span<const nlohmann::json> records) {
  std::string bytes;
  try {
    bytes = serialize(records);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("records do not serialize: " + std::string(e.what()));
  }
  const auto digest = sha256_hex(bytes);
  const auto path = data_path(key);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  fs::create_directories(root_ / ".locks", ec);

  FileLock key_lock(root_ / ".locks" / (to_string(key.dataset) + "-" + key.day.iso() + ".lock"));
  write_atomically(path, bytes);

  std::lock_guard guard(*manifest_mu_);
  FileLock manifest_lock(root_ / ".locks" / "manifest.lock");
  auto m = read_manifest(root_);
  m.datasets[key.dataset][key.day] = {digest, records.size()};
  write_manifest(root_, m);
  return digest;
}

bool Store::contains(const PartitionKey& key) const {
  const auto m = read_manifest(root_);
  auto it = m.datasets.find(key.dataset);
  return it != m.datasets.end() && it->second.count(key.day) != 0;
}

std::vector<nlohmann::json> Store::get(const PartitionKey& key) const {
  const auto m = read_manifest(root_);
  const auto it = m.datasets.find(key.dataset);
  if (it == m.datasets.end() || !it->second.count(key.day))
    throw NotFound("no " + to_string(key.dataset) + " partition for " + key.day.iso());
  const auto& entry = it->second.at(key.day);
  const auto path = data_path(key);
  if (!fs::exists(path)) throw CorruptionError("partition file missing: " + path.string());
  const auto bytes = read_file(path);
  if (sha256_hex(bytes) != entry.digest) throw CorruptionError("digest mismatch for " + path.string());

  std::vector<nlohmann::json> out;
  std::istringstream in(bytes);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw CorruptionError("bad record in " + path.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<Day> Store::days(Dataset dataset) const {
  const auto m = read_manifest(root_);
  std::vector<Day> out;
  if (auto it = m.datasets.find(dataset); it != m.datasets.end())
    for (const auto& [day, e] : it->second) out.push_back(day);
  return out;
}

std::vector<nlohmann::json> Store::query_range(Dataset dataset, Day from, Day to) const {
  std::vector<nlohmann::json> out;
  for (const auto& day : days(dataset)) {
    if (day < from || to < day) continue;
    auto part = get({dataset, day});
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

Manifest Store::manifest() const { return read_manifest(root_); }

}  // namespace discourse
