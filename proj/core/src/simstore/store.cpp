#include "gr/simstore/store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"

namespace fs = std::filesystem;

namespace gr {
namespace {

constexpr char kMagic[4] = {'G', 'R', 'E', 'S'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr int kUngraded = 255;

int grade_tag(const std::optional<Grade>& g) { return g ? static_cast<int>(*g) : kUngraded; }

std::optional<Grade> grade_from_tag(std::uint8_t tag) {
  if (tag == kUngraded) return std::nullopt;
  if (tag >= kGradeCount) throw SchemaError(fmt::format("embedding file: bad grade tag {}", tag));
  return static_cast<Grade>(tag);
}

bool newer_first(const EmbeddingEntry& a, const EmbeddingEntry& b) {
  if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
  return a.incident_id < b.incident_id;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw SchemaError("embedding file: truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::string hex_name(std::string_view org) {
  std::string out = "org-";
  for (unsigned char c : org) out += fmt::format("{:02x}", c);
  return out + ".gres";
}

}  // namespace

std::string_view to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::ExactHashSameGrade:
      return "exact_hash_same_grade";
    case MatchKind::ExactHashAnyGrade:
      return "exact_hash_any_grade";
    case MatchKind::Cosine:
      return "cosine";
  }
  return "cosine";
}

std::optional<MatchKind> parse_match_kind(std::string_view text) {
  for (auto k : {MatchKind::ExactHashSameGrade, MatchKind::ExactHashAnyGrade, MatchKind::Cosine}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

EmbeddingStore::EmbeddingStore(EmbeddingStore&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  space_id_ = std::move(other.space_id_);
  k_ = other.k_;
  partitions_ = std::move(other.partitions_);
  reset_pending_ = other.reset_pending_;
}

EmbeddingStore& EmbeddingStore::operator=(EmbeddingStore&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    space_id_ = std::move(other.space_id_);
    k_ = other.k_;
    partitions_ = std::move(other.partitions_);
    reset_pending_ = other.reset_pending_;
  }
  return *this;
}

void EmbeddingStore::erase_locked(Partition& p, const std::string& incident_id) {
  auto it = p.by_incident.find(incident_id);
  if (it == p.by_incident.end()) return;
  const Key key{it->second.incident_hash, grade_tag(it->second.grade)};
  auto& ids = p.by_key[key];
  ids.erase(std::remove(ids.begin(), ids.end(), incident_id), ids.end());
  if (ids.empty()) p.by_key.erase(key);
  p.by_incident.erase(it);
  p.dirty = true;
}

UpsertResult EmbeddingStore::upsert(const std::vector<EmbeddingEntry>& entries, std::size_t cap) {
  if (cap == 0) throw ConfigError("embedding cap per key must be >= 1");
  std::unique_lock lock(mutex_);
  UpsertResult result;
  std::set<std::pair<std::string, std::string>> touched;
  for (const auto& e : entries) {
    if (e.embedding.size() != k_) {
      ++result.rejected_dimension;
      continue;
    }
    auto& p = partitions_[e.org_id];
    const Key key{e.incident_hash, grade_tag(e.grade)};
    auto existing = p.by_incident.find(e.incident_id);
    if (existing != p.by_incident.end() && existing->second == e) {
      touched.emplace(e.org_id, e.incident_id);
      ++result.unchanged;
      continue;
    }
    erase_locked(p, e.incident_id);
    auto& ids = p.by_key[key];
    ids.push_back(e.incident_id);
    p.by_incident.emplace(e.incident_id, e);
    p.dirty = true;

    if (ids.size() > cap) {
      std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
        return newer_first(p.by_incident.at(a), p.by_incident.at(b));
      });
      while (ids.size() > cap) {
        const auto victim = ids.back();
        ids.pop_back();
        p.by_incident.erase(victim);
        ++result.evicted;
      }
    }
    touched.emplace(e.org_id, e.incident_id);
  }
  for (const auto& [org, id] : touched) {
    auto it = partitions_.find(org);
    if (it != partitions_.end() && it->second.by_incident.count(id)) ++result.accepted;
  }
  if (result.rejected_dimension > 0) {
    spdlog::warn("embedding upsert rejected {} entries with dimension != {}", result.rejected_dimension, k_);
  }
  return result;
}

std::vector<SimilarMatch> EmbeddingStore::find_similar(const SimilarQuery& q) const {
  std::shared_lock lock(mutex_);
  if (q.embedding.size() != k_) {
    throw DimensionError(fmt::format("query embedding has dimension {}, store has {}", q.embedding.size(), k_));
  }
  std::vector<SimilarMatch> candidates;
  auto it = partitions_.find(q.org_id);
  if (it == partitions_.end() || q.k_max == 0) return candidates;
  const auto oldest = q.now - q.horizon;
  for (const auto& [id, e] : it->second.by_incident) {
    if (id == q.incident_id || e.timestamp < oldest) continue;
    if (e.incident_hash == q.incident_hash) {
      const bool same = q.grade_rec && e.effective_grade() == q.grade_rec;
      candidates.push_back({id, same ? MatchKind::ExactHashSameGrade : MatchKind::ExactHashAnyGrade, 1.0, e.timestamp});
    } else {
      const double score = cosine_similarity(q.embedding, e.embedding);
      if (score >= q.cutoff) candidates.push_back({id, MatchKind::Cosine, score, e.timestamp});
    }
  }
  const auto n = std::min(q.k_max, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(),
                    [](const SimilarMatch& a, const SimilarMatch& b) {
                      if (a.kind != b.kind) return a.kind < b.kind;
                      if (a.score != b.score) return a.score > b.score;
                      if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
                      return a.incident_id < b.incident_id;
                    });
  candidates.resize(n);
  return candidates;
}

std::size_t EmbeddingStore::prune(Seconds horizon, Timestamp now) {
  std::unique_lock lock(mutex_);
  const auto oldest = now - horizon;
  std::size_t removed = 0;
  for (auto& [org, p] : partitions_) {
    std::vector<std::string> victims;
    for (const auto& [id, e] : p.by_incident) {
      if (e.timestamp < oldest) victims.push_back(id);
    }
    for (const auto& id : victims) erase_locked(p, id);
    removed += victims.size();
  }
  return removed;
}

void EmbeddingStore::reset(std::string space_id, std::size_t k) {
  std::unique_lock lock(mutex_);
  space_id_ = std::move(space_id);
  k_ = k;
  partitions_.clear();
  reset_pending_ = true;
}

std::size_t EmbeddingStore::size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [org, p] : partitions_) n += p.by_incident.size();
  return n;
}

std::vector<std::string> EmbeddingStore::orgs() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [org, p] : partitions_) {
    if (!p.by_incident.empty()) out.push_back(org);
  }
  return out;
}

std::vector<EmbeddingEntry> EmbeddingStore::entries(const std::string& org_id) const {
  std::shared_lock lock(mutex_);
  std::vector<EmbeddingEntry> out;
  auto it = partitions_.find(org_id);
  if (it == partitions_.end()) return out;
  for (const auto& [id, e] : it->second.by_incident) out.push_back(e);
  return out;
}

std::optional<EmbeddingEntry> EmbeddingStore::get(const std::string& org_id, const std::string& incident_id) const {
  std::shared_lock lock(mutex_);
  auto it = partitions_.find(org_id);
  if (it == partitions_.end()) return std::nullopt;
  auto e = it->second.by_incident.find(incident_id);
  if (e == it->second.by_incident.end()) return std::nullopt;
  return e->second;
}

std::size_t EmbeddingStore::key_count(const std::string& org_id, const std::string& hash,
                                      std::optional<Grade> grade) const {
  std::shared_lock lock(mutex_);
  auto it = partitions_.find(org_id);
  if (it == partitions_.end()) return 0;
  auto k = it->second.by_key.find({hash, grade_tag(grade)});
  return k == it->second.by_key.end() ? 0 : k->second.size();
}

std::size_t EmbeddingStore::max_key_multiplicity() const {
  std::shared_lock lock(mutex_);
  std::size_t best = 0;
  for (const auto& [org, p] : partitions_) {
    for (const auto& [key, ids] : p.by_key) best = std::max(best, ids.size());
  }
  return best;
}

std::string serialize_partition(const std::string& space_id, std::size_t k, const std::vector<EmbeddingEntry>& entries) {
  Writer w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kFormatVersion);
  w.str(space_id);
  w.u32(static_cast<std::uint32_t>(k));
  w.u64(entries.size());
  for (const auto& e : entries) {
    w.str(e.org_id);
    w.str(e.incident_id);
    w.str(e.incident_hash);
    w.u8(static_cast<std::uint8_t>(grade_tag(e.grade)));
    w.u8(static_cast<std::uint8_t>(grade_tag(e.predicted_grade)));
    w.u64(static_cast<std::uint64_t>(to_unix(e.timestamp)));
    for (double v : e.embedding) w.f64(v);
  }
  return w.take();
}

std::vector<EmbeddingEntry> parse_partition(std::string_view bytes, const std::string& space_id, std::size_t k) {
  Reader r(bytes);
  if (r.raw(4) != std::string_view(kMagic, 4)) throw SchemaError("embedding file: bad magic");
  if (const auto v = r.u32(); v != kFormatVersion) throw SchemaError(fmt::format("embedding file: version {}", v));
  const auto file_space = r.str();
  const auto file_k = r.u32();
  if (file_space != space_id || file_k != k) {
    throw SchemaError(fmt::format("embedding file belongs to space {} (k={}), store is {} (k={})", file_space,
                                  file_k, space_id, k));
  }
  const auto count = r.u64();
  std::vector<EmbeddingEntry> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingEntry e;
    e.org_id = r.str();
    e.incident_id = r.str();
    e.incident_hash = r.str();
    e.grade = grade_from_tag(r.u8());
    e.predicted_grade = grade_from_tag(r.u8());
    e.timestamp = from_unix(static_cast<std::int64_t>(r.u64()));
    e.embedding.resize(k);
    for (auto& v : e.embedding) v = r.f64();
    out.push_back(std::move(e));
  }
  if (!r.done()) throw SchemaError("embedding file: trailing bytes");
  return out;
}

void EmbeddingStore::save(const fs::path& dir) {
  std::unique_lock lock(mutex_);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  if (reset_pending_) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".gres") fs::remove(entry.path());
    }
    reset_pending_ = false;
  }
  write_file_atomic(dir / "space.txt", fmt::format("{} {}\n", space_id_, k_));
  for (auto it = partitions_.begin(); it != partitions_.end();) {
    auto& [org, p] = *it;
    const auto path = dir / hex_name(org);
    if (p.dirty) {
      if (p.by_incident.empty()) {
        fs::remove(path, ec);
      } else {
        std::vector<EmbeddingEntry> entries;
        entries.reserve(p.by_incident.size());
        for (const auto& [id, e] : p.by_incident) entries.push_back(e);
        write_file_atomic(path, serialize_partition(space_id_, k_, entries));
      }
      p.dirty = false;
    }
    it = p.by_incident.empty() ? partitions_.erase(it) : std::next(it);
  }
}

EmbeddingStore EmbeddingStore::load(const fs::path& dir) {
  if (!fs::exists(dir / "space.txt")) return EmbeddingStore{};
  const auto text = read_file(dir / "space.txt");
  const auto head = split(trim(text), ' ');
  if (head.size() != 2) throw SchemaError("embedding space.txt: expected '<space_id> <k>'");
  EmbeddingStore store(std::string(head[0]), static_cast<std::size_t>(parse_int(head[1])));
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".gres") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    for (auto& e : parse_partition(read_file(path), store.space_id_, store.k_)) {
      auto& p = store.partitions_[e.org_id];
      p.by_key[{e.incident_hash, grade_tag(e.grade)}].push_back(e.incident_id);
      p.by_incident.emplace(e.incident_id, std::move(e));
    }
  }
  return store;
}

}  // namespace gr
