#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "gr/pipeline/recommendations.hpp"

namespace gr {

enum class Verdict : std::uint8_t { Confirmed = 0, Dismissed = 1 };
std::string_view to_string(Verdict verdict);
std::optional<Verdict> parse_verdict(std::string_view text);

struct RecKey {
  std::string incident_key;  // "org:incident"
  RecKind kind = RecKind::Triage;
  std::uint32_t revision = 0;
  auto operator<=>(const RecKey&) const = default;
  bool operator==(const RecKey&) const = default;
};

struct FeedbackRecord {
  RecKey rec;
  Verdict verdict = Verdict::Confirmed;
  std::optional<Grade> grade;
  std::optional<Action> action;
  std::optional<std::string> alert_id;  // narrows an action label to one alert
  Timestamp timestamp{};
  std::string actor;
  bool operator==(const FeedbackRecord&) const = default;
};

nlohmann::json feedback_to_json(const FeedbackRecord& f);
FeedbackRecord feedback_from_json(const nlohmann::json& j);  // throws DataError naming the field

enum class FeedbackStatus { Added, Duplicate, UnknownRecommendation };

// Append-only JSON-lines journal of recommendation revisions and analyst
// feedback. Every append is fsynced before the in-memory index changes; on
// open a torn final line is ignored. Safe for one writer and many readers.
class JournalStore {
 public:
  explicit JournalStore(std::filesystem::path path);  // replays the file if present
  JournalStore(const JournalStore&) = delete;
  JournalStore& operator=(const JournalStore&) = delete;

  const std::filesystem::path& path() const { return path_; }

  // Appends a new revision unless the content matches the latest revision.
  // Returns the stored revision, or nullopt when nothing was written.
  std::optional<std::uint32_t> append_if_changed(Recommendation rec);

  std::optional<Recommendation> latest(const std::string& incident_key, RecKind kind) const;
  std::optional<Recommendation> get(const RecKey& key) const;
  std::vector<Recommendation> history(const std::string& incident_key, RecKind kind) const;
  // Incident keys with at least one recommendation, sorted.
  std::vector<std::string> incidents() const;
  std::size_t recommendation_count() const;

  FeedbackStatus add_feedback(const FeedbackRecord& feedback);
  std::vector<FeedbackRecord> feedback() const;
  // confirmed / (confirmed + dismissed); nullopt before any feedback.
  std::optional<double> positive_rate() const;

  std::size_t ignored_lines() const { return ignored_lines_; }

 private:
  void append_line(const std::string& line);
  void index(Recommendation rec);

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, RecKind>, std::vector<Recommendation>> recs_;
  std::vector<FeedbackRecord> feedback_;
  std::map<std::pair<RecKey, std::string>, std::size_t> feedback_index_;
  std::size_t rec_count_ = 0;
  std::size_t ignored_lines_ = 0;
};

}  // namespace gr
