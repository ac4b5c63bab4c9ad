#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "gr/common/error.hpp"
#include "gr/pipeline/clock.hpp"
#include "gr/pipeline/engine.hpp"
#include "gr/service/feedback.hpp"
#include "gr/service/http_api.hpp"
#include "gr/service/journal.hpp"
#include "synth.hpp"

// After the Eigen users: <resolv.h> defines a `_res` macro.
#include <httplib.h>

using namespace gr;
using nlohmann::json;

namespace {

const Timestamp kNow = from_unix(1'718'000'000);

TriageRec triage_rec(std::string inc, Grade g, bool emitted = true) {
  TriageRec t;
  t.org_id = "o";
  t.incident_id = std::move(inc);
  t.grade = g;
  t.score = 0.9;
  t.scores = {0.9, 0.05, 0.05};
  t.emitted = emitted;
  t.batch_end = kNow;
  return t;
}

FeedbackRecord verdict(std::string inc, std::uint32_t rev, Verdict v, std::string actor,
                       std::optional<Grade> g = std::nullopt) {
  FeedbackRecord f;
  f.rec = {incident_key("o", inc), RecKind::Triage, rev};
  f.verdict = v;
  f.grade = g;
  f.actor = std::move(actor);
  f.timestamp = kNow;
  return f;
}

}  // namespace

TEST(Journal, RevisionsAndReplay) {
  fixture::TempDir dir;
  const auto path = dir / "journal.jsonl";
  {
    JournalStore j(path);
    EXPECT_EQ(j.append_if_changed(triage_rec("i", Grade::TP)), 1u);
    EXPECT_EQ(j.append_if_changed(triage_rec("i", Grade::TP)), std::nullopt);
    EXPECT_EQ(j.append_if_changed(triage_rec("i", Grade::FP)), 2u);
    EXPECT_EQ(j.add_feedback(verdict("i", 2, Verdict::Confirmed, "ann")), FeedbackStatus::Added);
  }
  {
    std::ofstream torn(path, std::ios::app);
    torn << R"({"type":"recommendation","rec":{"kind":"tri)";
  }
  JournalStore j(path);
  EXPECT_EQ(j.ignored_lines(), 1u);
  EXPECT_EQ(j.recommendation_count(), 2u);
  EXPECT_EQ(j.history(incident_key("o", "i"), RecKind::Triage).size(), 2u);
  EXPECT_EQ(std::get<TriageRec>(*j.latest(incident_key("o", "i"), RecKind::Triage)).grade, Grade::FP);
  EXPECT_EQ(j.feedback().size(), 1u);
  EXPECT_EQ(j.incidents(), std::vector<std::string>{incident_key("o", "i")});
}

TEST(Journal, FeedbackStatusesAndPositiveRate) {
  fixture::TempDir dir;
  JournalStore j(dir / "journal.jsonl");
  j.append_if_changed(triage_rec("i", Grade::TP));
  EXPECT_EQ(j.positive_rate(), std::nullopt);
  EXPECT_EQ(j.add_feedback(verdict("i", 1, Verdict::Confirmed, "ann")), FeedbackStatus::Added);
  EXPECT_EQ(j.add_feedback(verdict("i", 1, Verdict::Dismissed, "ann")), FeedbackStatus::Duplicate);
  EXPECT_EQ(j.add_feedback(verdict("i", 9, Verdict::Confirmed, "ann")), FeedbackStatus::UnknownRecommendation);
  EXPECT_EQ(j.add_feedback(verdict("i", 1, Verdict::Dismissed, "bob")), FeedbackStatus::Added);
  EXPECT_DOUBLE_EQ(*j.positive_rate(), 0.5);
  const auto f = verdict("i", 1, Verdict::Dismissed, "bob", Grade::FP);
  EXPECT_EQ(feedback_from_json(feedback_to_json(f)), f);
  EXPECT_THROW(feedback_from_json(json{{"incident_key", 3}}), DataError);
}

TEST(Feedback, GradeBecomesLabelOnce) {
  fixture::TempDir dir;
  JournalStore j(dir / "journal.jsonl");
  j.append_if_changed(triage_rec("i", Grade::TP));
  j.add_feedback(verdict("i", 1, Verdict::Dismissed, "ann", Grade::FP));
  j.add_feedback(verdict("i", 1, Verdict::Confirmed, "bob"));
  std::vector<AlertRecord> alerts{fixture::alert("a1", "o", "i", "d", 0, Grade::TP),
                                  fixture::alert("a2", "o", "i", "d", 0, Grade::TP)};
  LabelOverlay overlay;
  const auto r = apply_feedback_as_labels(j.feedback(), j, alerts, overlay);
  EXPECT_EQ(r.labels_written, 1u);
  EXPECT_EQ(r.without_labels, 1u);
  EXPECT_EQ(overlay.incident_grade("o", "i"), Grade::FP);
  EXPECT_EQ(apply_feedback_as_labels(j.feedback(), j, alerts, overlay).labels_written, 0u);
  overlay.apply(alerts);
  EXPECT_EQ(alerts[0].grade, Grade::FP);
  EXPECT_EQ(alerts[1].grade, Grade::FP);
}

TEST(Feedback, ActionLabelsNarrowToAlert) {
  fixture::TempDir dir;
  JournalStore j(dir / "journal.jsonl");
  j.append_if_changed(triage_rec("i", Grade::TP));
  auto f = verdict("i", 1, Verdict::Confirmed, "ann");
  f.action = Action::IsolateDevice;
  f.alert_id = "a2";
  j.add_feedback(f);
  std::vector<AlertRecord> alerts{fixture::alert("a1", "o", "i", "d", 0), fixture::alert("a2", "o", "i", "d", 0)};
  LabelOverlay overlay;
  EXPECT_EQ(apply_feedback_as_labels(j.feedback(), j, alerts, overlay).labels_written, 1u);
  EXPECT_EQ(overlay.alert_action("a2"), Action::IsolateDevice);
  EXPECT_EQ(overlay.alert_action("a1"), std::nullopt);
}

namespace {

// Engine over a small synthetic data directory, served on an ephemeral port.
class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fixture::TempDir("gr-svc");
    const auto layout = DataLayout::resolve(dir_->path());
    SynthOptions o;
    o.orgs = 6;
    o.detectors = 40;
    o.detector_groups = 100;
    o.incidents = 800;
    o.span = days(5);
    o.now = kNow;
    write_synth_csv(layout.telemetry(), synthesize_guide(o), 2);
    PipelineConfig config;
    config.grid = ParamGrid::parse("n=10 depth=30 mss=5 cw=none");
    config.max_components = 10;
    config.min_cardinality = 3;
    config.inference_window = days(1);
    config.workers = 1;
    engine_ = new Engine(layout, config, std::make_shared<SimulatedClock>(kNow));
    engine_->train(kNow);
    engine_->infer(kNow);
    server_ = new ApiServer(*engine_);
    port_ = server_->bind("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    thread_ = new std::thread([] { server_->serve(); });
    for (int i = 0; i < 200 && !server_->running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  static void TearDownTestSuite() {
    server_->stop();
    thread_->join();
    delete thread_;
    delete server_;
    delete engine_;
    delete dir_;
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(300, 0);
    return c;
  }

  // An incident with a journaled triage recommendation whose telemetry grade is not FP.
  static std::pair<std::string, std::uint32_t> non_fp_incident() {
    for (const auto& key : engine_->journal().incidents()) {
      const auto [org, inc] = split_incident_key(key);
      bool fp = false;
      for (const auto& a : engine_->telemetry()->alerts) {
        if (a.org_id == org && a.incident_id == inc && a.grade == Grade::FP) fp = true;
      }
      if (fp) continue;
      if (auto t = engine_->journal().latest(key, RecKind::Triage)) return {key, revision_of(*t)};
    }
    return {};
  }

  static inline fixture::TempDir* dir_ = nullptr;
  static inline Engine* engine_ = nullptr;
  static inline ApiServer* server_ = nullptr;
  static inline std::thread* thread_ = nullptr;
  static inline int port_ = 0;
};

}  // namespace

TEST_F(ServiceTest, HealthAndUnknownIncident) {
  auto c = client();
  auto r = c.Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["status"], "ok");
  r = c.Get("/incidents/nope:nothing");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(json::parse(r->body)["error"], "not_found");
  r = c.Get("/no/such/route");
  EXPECT_EQ(r->status, 404);
}

TEST_F(ServiceTest, IncidentListAndDetail) {
  auto c = client();
  auto r = c.Get("/incidents?limit=3&sort=score");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  const auto list = json::parse(r->body);
  EXPECT_LE(list["items"].size(), 3u);
  ASSERT_GT(list["total"].get<std::size_t>(), 0u);
  const auto key = list["items"][0]["incident_key"].get<std::string>();
  r = c.Get(("/incidents/" + key).c_str());
  ASSERT_EQ(r->status, 200);
  const auto detail = json::parse(r->body);
  EXPECT_FALSE(detail["alerts"].empty());
  EXPECT_TRUE(detail["history"].contains("triage"));
}

TEST_F(ServiceTest, FeedbackCodesAndMetrics) {
  const auto [key, rev] = non_fp_incident();
  ASSERT_FALSE(key.empty());
  auto c = client();
  const json body{{"incident_key", key}, {"kind", "triage"}, {"revision", rev}, {"verdict", "confirmed"}};
  httplib::Headers ann{{"X-Actor-Id", "ann"}};
  auto r = c.Post("/feedback", ann, body.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201);
  r = c.Post("/feedback", ann, body.dump(), "application/json");
  EXPECT_EQ(r->status, 409);
  auto missing = body;
  missing["revision"] = rev + 100;
  r = c.Post("/feedback", ann, missing.dump(), "application/json");
  EXPECT_EQ(r->status, 404);
  auto bad = body;
  bad.erase("verdict");
  r = c.Post("/feedback", ann, bad.dump(), "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json::parse(r->body)["field"], "verdict");
  r = c.Post("/feedback", ann, "{not json", "application/json");
  EXPECT_EQ(r->status, 400);

  r = c.Get("/metrics");
  ASSERT_EQ(r->status, 200);
  const auto m = json::parse(r->body);
  EXPECT_DOUBLE_EQ(m["positive_rate"].get<double>(), 1.0);
  EXPECT_EQ(m["feedback"]["confirmed"], 1);
  EXPECT_TRUE(m["report"].contains("triage"));
}

TEST_F(ServiceTest, FalsePositiveVerdictReachesNextTrainInput) {
  const auto [key, rev] = non_fp_incident();
  ASSERT_FALSE(key.empty());
  auto c = client();
  const json body{{"incident_key", key}, {"kind", "triage"}, {"revision", rev}, {"verdict", "dismissed"}, {"grade", "FP"}};
  auto r = c.Post("/feedback", httplib::Headers{{"X-Actor-Id", "bob"}}, body.dump(), "application/json");
  ASSERT_EQ(r->status, 201);
  r = c.Post("/admin/run/train?now=2024-06-10T06:13:20Z", "", "application/json");
  ASSERT_EQ(r->status, 200);
  const auto [org, inc] = split_incident_key(key);
  EXPECT_EQ(engine_->labels().incident_grade(org, inc), Grade::FP);
  auto alerts = engine_->telemetry(true)->alerts;
  engine_->labels().apply(alerts);
  std::size_t members = 0;
  for (const auto& a : alerts) {
    if (a.org_id == org && a.incident_id == inc) {
      ++members;
      EXPECT_EQ(a.grade, Grade::FP);
    }
  }
  EXPECT_GT(members, 0u);
}

TEST_F(ServiceTest, LabelsEndpoint) {
  auto c = client();
  const auto alert = engine_->telemetry()->alerts[0];
  json body{{"labels", json::array({json{{"alert_id", alert.alert_id}, {"action", "IsolateDevice"}}})}};
  auto r = c.Post("/labels", body.dump(), "application/json");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["received"], 1);
  EXPECT_EQ(engine_->labels().alert_action(alert.alert_id), Action::IsolateDevice);
  body = json{{"labels", json::array({json{{"grade", "XX"}, {"incident_key", "o:i"}}})}};
  r = c.Post("/labels", body.dump(), "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json::parse(r->body)["field"], "labels[0].grade");
}

TEST_F(ServiceTest, AdminInferReplayAddsNothing) {
  auto c = client();
  auto r = c.Post("/admin/run/infer?window_end=2024-06-10T06:13:20Z", "", "application/json");
  ASSERT_EQ(r->status, 200);
  r = c.Post("/admin/run/infer?window_end=2024-06-10T06:13:20Z", "", "application/json");
  ASSERT_EQ(r->status, 200);
  const auto j = json::parse(r->body);
  EXPECT_EQ(j["new_revisions"], 0);
  EXPECT_EQ(j["embeddings_accepted"], j["embeddings_unchanged"]);
  r = c.Post("/admin/run/explode", "", "application/json");
  EXPECT_EQ(r->status, 404);
  r = c.Post("/admin/run/backfill?steps=2&now=2024-06-10T06:13:20Z", "", "application/json");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["days_covered"], 2);
}
