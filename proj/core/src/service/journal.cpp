#include "gr/service/journal.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gr/common/error.hpp"

using nlohmann::json;

namespace gr {

std::string_view to_string(Verdict verdict) { return verdict == Verdict::Confirmed ? "confirmed" : "dismissed"; }

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "confirmed") return Verdict::Confirmed;
  if (text == "dismissed") return Verdict::Dismissed;
  return std::nullopt;
}

json feedback_to_json(const FeedbackRecord& f) {
  json j{{"incident_key", f.rec.incident_key},
         {"kind", to_string(f.rec.kind)},
         {"revision", f.rec.revision},
         {"verdict", to_string(f.verdict)},
         {"grade", f.grade ? json(to_string(*f.grade)) : json(nullptr)},
         {"action", f.action ? json(to_string(*f.action)) : json(nullptr)},
         {"alert_id", f.alert_id ? json(*f.alert_id) : json(nullptr)},
         {"timestamp", format_rfc3339(f.timestamp)},
         {"actor", f.actor}};
  return j;
}

FeedbackRecord feedback_from_json(const json& j) {
  if (!j.is_object()) throw DataError("feedback body must be a JSON object");
  auto str = [&](const char* field) -> std::string {
    if (!j.contains(field) || !j[field].is_string()) throw DataError(fmt::format("field '{}' must be a string", field));
    return j[field].get<std::string>();
  };
  auto opt_str = [&](const char* field) -> std::optional<std::string> {
    if (!j.contains(field) || j[field].is_null()) return std::nullopt;
    if (!j[field].is_string()) throw DataError(fmt::format("field '{}' must be a string or null", field));
    return j[field].get<std::string>();
  };
  FeedbackRecord f;
  f.rec.incident_key = str("incident_key");
  const auto kind = parse_rec_kind(str("kind"));
  if (!kind) throw DataError("field 'kind' must be triage, similar or remediation");
  f.rec.kind = *kind;
  if (!j.contains("revision") || !j["revision"].is_number_unsigned()) {
    throw DataError("field 'revision' must be a non-negative integer");
  }
  f.rec.revision = j["revision"].get<std::uint32_t>();
  const auto verdict = parse_verdict(str("verdict"));
  if (!verdict) throw DataError("field 'verdict' must be confirmed or dismissed");
  f.verdict = *verdict;
  if (auto g = opt_str("grade")) {
    f.grade = parse_grade(*g);
    if (!f.grade) throw DataError("field 'grade' must be TP, FP or BP");
  }
  if (auto a = opt_str("action")) {
    f.action = parse_action(*a);
    if (!f.action) throw DataError("field 'action' must be ContainAccount, IsolateDevice or StopVirtualMachine");
  }
  f.alert_id = opt_str("alert_id");
  if (auto t = opt_str("timestamp")) {
    const auto ts = parse_rfc3339(*t);
    if (!ts) throw DataError("field 'timestamp' must be RFC 3339");
    f.timestamp = *ts;
  }
  if (auto actor = opt_str("actor")) f.actor = *actor;
  return f;
}

JournalStore::JournalStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const bool complete = !in.eof();  // last line without '\n' is a torn write
    if (line.empty()) continue;
    try {
      if (!complete) throw DataError("truncated line");
      const auto j = json::parse(line);
      const auto type = j.at("t").get<std::string>();
      if (type == "rec") {
        index(recommendation_from_json(j.at("data")));
      } else if (type == "fb") {
        auto f = feedback_from_json(j.at("data"));
        feedback_index_[{f.rec, f.actor}] = feedback_.size();
        feedback_.push_back(std::move(f));
      } else {
        throw DataError(fmt::format("unknown record type '{}'", type));
      }
    } catch (const std::exception& e) {
      ++ignored_lines_;
      spdlog::warn("journal {} line {} ignored: {}", path_.string(), line_no, e.what());
    }
  }
}

void JournalStore::append_line(const std::string& line) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError(fmt::format("cannot open journal {}: {}", path_.string(), std::strerror(errno)));
  const std::string data = line + "\n";
  std::size_t done = 0;
  while (done < data.size()) {
    const auto n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw IoError(fmt::format("journal write failed: {}", std::strerror(errno)));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw IoError(fmt::format("journal fsync failed: {}", std::strerror(errno)));
  }
  ::close(fd);
}

void JournalStore::index(Recommendation rec) {
  recs_[{incident_key_of(rec), kind_of(rec)}].push_back(std::move(rec));
  ++rec_count_;
}

std::optional<std::uint32_t> JournalStore::append_if_changed(Recommendation rec) {
  std::unique_lock lock(mutex_);
  auto& revisions = recs_[{incident_key_of(rec), kind_of(rec)}];
  if (!revisions.empty() && !recommendation_changed(revisions.back(), rec)) return std::nullopt;
  const auto revision = revisions.empty() ? 1u : revision_of(revisions.back()) + 1;
  set_revision(rec, revision);
  append_line(json{{"t", "rec"}, {"data", to_json(rec)}}.dump());
  revisions.push_back(std::move(rec));
  ++rec_count_;
  return revision;
}

std::optional<Recommendation> JournalStore::latest(const std::string& incident_key, RecKind kind) const {
  std::shared_lock lock(mutex_);
  auto it = recs_.find({incident_key, kind});
  if (it == recs_.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

std::optional<Recommendation> JournalStore::get(const RecKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = recs_.find({key.incident_key, key.kind});
  if (it == recs_.end()) return std::nullopt;
  for (const auto& r : it->second) {
    if (revision_of(r) == key.revision) return r;
  }
  return std::nullopt;
}

std::vector<Recommendation> JournalStore::history(const std::string& incident_key, RecKind kind) const {
  std::shared_lock lock(mutex_);
  auto it = recs_.find({incident_key, kind});
  return it == recs_.end() ? std::vector<Recommendation>{} : it->second;
}

std::vector<std::string> JournalStore::incidents() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [key, revisions] : recs_) {
    if (!revisions.empty() && (out.empty() || out.back() != key.first)) out.push_back(key.first);
  }
  return out;
}

std::size_t JournalStore::recommendation_count() const {
  std::shared_lock lock(mutex_);
  return rec_count_;
}

FeedbackStatus JournalStore::add_feedback(const FeedbackRecord& feedback) {
  if (!get(feedback.rec)) return FeedbackStatus::UnknownRecommendation;
  std::unique_lock lock(mutex_);
  if (feedback_index_.count({feedback.rec, feedback.actor})) return FeedbackStatus::Duplicate;
  append_line(json{{"t", "fb"}, {"data", feedback_to_json(feedback)}}.dump());
  feedback_index_[{feedback.rec, feedback.actor}] = feedback_.size();
  feedback_.push_back(feedback);
  return FeedbackStatus::Added;
}

std::vector<FeedbackRecord> JournalStore::feedback() const {
  std::shared_lock lock(mutex_);
  return feedback_;
}

std::optional<double> JournalStore::positive_rate() const {
  std::shared_lock lock(mutex_);
  std::size_t confirmed = 0;
  for (const auto& f : feedback_) confirmed += f.verdict == Verdict::Confirmed;
  if (feedback_.empty()) return std::nullopt;
  return static_cast<double>(confirmed) / static_cast<double>(feedback_.size());
}

}  // namespace gr
