#include "gr/service/http_api.hpp"

#include <httplib.h>

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gr/common/error.hpp"

using nlohmann::json;

namespace gr {
namespace {

struct ValidationError : DataError {
  ValidationError(std::string field, const std::string& message) : DataError(message), field(std::move(field)) {}
  std::string field;
};

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, std::string_view code, std::string_view message,
           std::string_view field = {}) {
  json body{{"error", code}, {"message", message}};
  if (!field.empty()) body["field"] = field;
  reply(res, status, body);
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ValidationError("body", fmt::format("body is not valid JSON: {}", e.what()));
  }
}

std::optional<Timestamp> time_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  const auto t = parse_rfc3339(req.get_param_value(name));
  if (!t) throw ValidationError(name, fmt::format("query parameter '{}' must be RFC 3339", name));
  return t;
}

std::size_t count_param(const httplib::Request& req, const char* name, std::size_t fallback, std::size_t max) {
  if (!req.has_param(name)) return fallback;
  try {
    const auto v = std::stoll(req.get_param_value(name));
    if (v < 0 || static_cast<std::size_t>(v) > max) throw std::out_of_range(name);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ValidationError(name, fmt::format("query parameter '{}' must be an integer in [0, {}]", name, max));
  }
}

json rec_or_null(const std::optional<Recommendation>& rec) { return rec ? to_json(*rec) : json(nullptr); }

}  // namespace

json alert_to_json(const AlertRecord& a) {
  json evidence = json::array();
  for (const auto& e : a.evidence) {
    json attrs = json::object();
    for (const auto& [attr, value] : e.attributes) attrs[std::string(column_name(attr))] = value;
    evidence.push_back({{"entity_type", e.entity_type == EntityType::Unknown && !e.raw_entity_type.empty()
                                            ? e.raw_entity_type
                                            : std::string(to_string(e.entity_type))},
                        {"evidence_role", e.evidence_role},
                        {"attributes", attrs}});
  }
  return {{"alert_id", a.alert_id},
          {"incident_id", a.incident_id},
          {"org_id", a.org_id},
          {"detector_id", a.detector_id},
          {"product_id", a.product_id},
          {"category", a.category},
          {"alert_title", a.alert_title},
          {"severity", a.severity},
          {"timestamp", format_rfc3339(a.timestamp)},
          {"mitre_techniques", a.mitre_techniques},
          {"grade", a.grade ? json(to_string(*a.grade)) : json(nullptr)},
          {"action", a.action ? json(to_string(*a.action)) : json(nullptr)},
          {"evidence", evidence}};
}

struct ApiServer::Impl {
  explicit Impl(Engine& e) : engine(e) {}

  Engine& engine;
  httplib::Server server;

  struct IncidentSummary {
    std::string key;
    std::size_t alerts = 0;
    Timestamp latest{};
  };

  std::map<std::string, IncidentSummary> incident_index() {
    std::map<std::string, IncidentSummary> index;
    for (const auto& a : engine.telemetry()->alerts) {
      auto& s = index[incident_key(a.org_id, a.incident_id)];
      ++s.alerts;
      s.latest = std::max(s.latest, a.timestamp);
    }
    return index;
  }

  void list_incidents(const httplib::Request& req, httplib::Response& res) {
    const auto offset = count_param(req, "offset", 0, 1u << 30);
    const auto limit = count_param(req, "limit", 50, 1000);
    const auto sort = req.has_param("sort") ? req.get_param_value("sort") : std::string("key");
    if (sort != "key" && sort != "age" && sort != "score") {
      throw ValidationError("sort", "query parameter 'sort' must be key, age or score");
    }
    const auto index = incident_index();
    struct Row {
      std::string key;
      json item;
      Timestamp latest;
      double score;
    };
    std::vector<Row> rows;
    for (const auto& key : engine.journal().incidents()) {
      const auto triage = engine.journal().latest(key, RecKind::Triage);
      const auto remediation = engine.journal().latest(key, RecKind::Remediation);
      const auto similar = engine.journal().latest(key, RecKind::Similar);
      const auto [org, inc] = split_incident_key(key);
      auto it = index.find(key);
      const auto latest = it != index.end() ? it->second.latest : Timestamp{};
      json item{{"incident_key", key},
                {"org_id", org},
                {"incident_id", inc},
                {"alert_count", it != index.end() ? it->second.alerts : 0},
                {"latest", format_rfc3339(latest)},
                {"age_seconds", to_unix(engine.now()) - to_unix(latest)},
                {"triage", rec_or_null(triage)},
                {"remediation_emitted", remediation && std::get<RemediationRec>(*remediation).emitted},
                {"similar_count", similar ? std::get<SimilarRec>(*similar).matches.size() : 0}};
      const double score = triage ? std::get<TriageRec>(*triage).score : -1.0;
      rows.push_back({key, std::move(item), latest, score});
    }
    if (sort == "age") {
      std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.latest > b.latest; });
    } else if (sort == "score") {
      std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.score > b.score; });
    }
    json items = json::array();
    for (std::size_t i = offset; i < rows.size() && i < offset + limit; ++i) items.push_back(std::move(rows[i].item));
    reply(res, 200, {{"total", rows.size()}, {"offset", offset}, {"limit", limit}, {"sort", sort}, {"items", items}});
  }

  void incident_detail(const httplib::Request& req, httplib::Response& res) {
    const auto key = req.matches[1].str();
    json alerts = json::array();
    for (const auto& a : engine.telemetry()->alerts) {
      if (incident_key(a.org_id, a.incident_id) == key) alerts.push_back(alert_to_json(a));
    }
    auto& journal = engine.journal();
    const auto triage = journal.latest(key, RecKind::Triage);
    if (alerts.empty() && !triage) {
      error(res, 404, "not_found", fmt::format("unknown incident '{}'", key));
      return;
    }
    json history = json::object();
    for (auto kind : {RecKind::Triage, RecKind::Similar, RecKind::Remediation}) {
      json revisions = json::array();
      for (const auto& r : journal.history(key, kind)) revisions.push_back(to_json(r));
      history[std::string(to_string(kind))] = revisions;
    }
    const auto [org, inc] = split_incident_key(key);
    reply(res, 200,
          {{"incident_key", key},
           {"org_id", org},
           {"incident_id", inc},
           {"alerts", alerts},
           {"triage", rec_or_null(triage)},
           {"similar", rec_or_null(journal.latest(key, RecKind::Similar))},
           {"remediation", rec_or_null(journal.latest(key, RecKind::Remediation))},
           {"history", history}});
  }

  void post_feedback(const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    FeedbackRecord f;
    try {
      if (body.is_object()) body["timestamp"] = format_rfc3339(engine.now());
      f = feedback_from_json(body);
    } catch (const DataError& e) {
      const std::string msg = e.what();
      const auto open = msg.find('\'');
      const auto close = open == std::string::npos ? open : msg.find('\'', open + 1);
      throw ValidationError(close == std::string::npos ? "body" : msg.substr(open + 1, close - open - 1), msg);
    }
    f.actor = req.has_header("X-Actor-Id") ? req.get_header_value("X-Actor-Id") : "anonymous";
    switch (engine.journal().add_feedback(f)) {
      case FeedbackStatus::Added:
        reply(res, 201, {{"status", "added"}, {"feedback", feedback_to_json(f)}});
        return;
      case FeedbackStatus::Duplicate:
        error(res, 409, "conflict", "this actor already left a verdict on this recommendation");
        return;
      case FeedbackStatus::UnknownRecommendation:
        error(res, 404, "not_found",
              fmt::format("no {} recommendation revision {} for '{}'", to_string(f.rec.kind), f.rec.revision,
                          f.rec.incident_key));
        return;
    }
  }

  void post_labels(const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (!body.is_object() || !body.contains("labels") || !body["labels"].is_array()) {
      throw ValidationError("labels", "body must be {\"labels\": [...]}");
    }
    struct Edit {
      std::optional<std::pair<std::string, std::string>> incident;
      std::optional<Grade> grade;
      std::optional<std::string> alert_id;
      std::optional<Action> action;
    };
    std::vector<Edit> edits;
    for (std::size_t i = 0; i < body["labels"].size(); ++i) {
      const auto& item = body["labels"][i];
      const auto field = [&](const char* name) { return fmt::format("labels[{}].{}", i, name); };
      if (!item.is_object()) throw ValidationError(fmt::format("labels[{}]", i), "label entries must be objects");
      Edit e;
      if (item.contains("grade")) {
        if (!item.contains("incident_key") || !item["incident_key"].is_string()) {
          throw ValidationError(field("incident_key"), "a grade label needs a string incident_key");
        }
        const auto key = item["incident_key"].get<std::string>();
        if (key.find(':') == std::string::npos) throw ValidationError(field("incident_key"), "incident_key is org:incident");
        e.incident = split_incident_key(key);
        e.grade = item["grade"].is_string() ? parse_grade(item["grade"].get<std::string>()) : std::nullopt;
        if (!e.grade) throw ValidationError(field("grade"), "grade must be TP, FP or BP");
      }
      if (item.contains("action")) {
        if (!item.contains("alert_id") || !item["alert_id"].is_string()) {
          throw ValidationError(field("alert_id"), "an action label needs a string alert_id");
        }
        e.alert_id = item["alert_id"].get<std::string>();
        e.action = item["action"].is_string() ? parse_action(item["action"].get<std::string>()) : std::nullopt;
        if (!e.action) throw ValidationError(field("action"), "action must be ContainAccount, IsolateDevice or StopVirtualMachine");
      }
      if (!e.grade && !e.action) throw ValidationError(fmt::format("labels[{}]", i), "entry needs a grade or an action");
      edits.push_back(std::move(e));
    }
    std::size_t written = 0;
    engine.update_labels([&](LabelOverlay& overlay) {
      for (const auto& e : edits) {
        if (e.grade) written += overlay.set_incident_grade(e.incident->first, e.incident->second, *e.grade);
        if (e.action) written += overlay.set_alert_action(*e.alert_id, *e.action);
      }
    });
    reply(res, 200, {{"received", edits.size()}, {"written", written}});
  }

  void metrics(httplib::Response& res) {
    std::size_t confirmed = 0, dismissed = 0;
    for (const auto& f : engine.journal().feedback()) (f.verdict == Verdict::Confirmed ? confirmed : dismissed)++;
    const auto rate = engine.journal().positive_rate();
    reply(res, 200,
          {{"report", engine.latest_report()},
           {"positive_rate", rate ? json(*rate) : json(nullptr)},
           {"feedback", {{"confirmed", confirmed}, {"dismissed", dismissed}}},
           {"recommendations", engine.journal().recommendation_count()},
           {"embeddings", engine.store().size()}});
  }

  void run(const httplib::Request& req, httplib::Response& res) {
    const auto what = req.matches[1].str();
    if (what == "train") {
      const auto report = engine.train(time_param(req, "now"));
      reply(res, 200, report.to_json());
    } else if (what == "infer") {
      const auto r = engine.infer(time_param(req, "window_end"));
      reply(res, 200,
            {{"window_start", format_rfc3339(r.window_start)},
             {"window_end", format_rfc3339(r.window_end)},
             {"window_alerts", r.window_alerts},
             {"incidents", r.incidents},
             {"triage_emitted", r.triage_emitted},
             {"remediation_emitted", r.remediation_emitted},
             {"new_revisions", r.new_revisions},
             {"embeddings_accepted", r.embeddings_accepted},
             {"embeddings_unchanged", r.embeddings_unchanged}});
    } else if (what == "backfill") {
      const auto steps = count_param(req, "steps", 1, 100000);
      const auto results = engine.backfill(steps, time_param(req, "now"));
      const auto state = engine.backfill_state();
      reply(res, 200,
            {{"steps_run", results.size()},
             {"days_covered", state.days_covered},
             {"noop", !results.empty() && results.back().noop}});
    } else {
      error(res, 404, "not_found", fmt::format("unknown pipeline '{}'", what));
    }
  }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const ValidationError& e) {
        error(res, 400, "validation", e.what(), e.field);
      } catch (const NotFoundError& e) {
        error(res, 404, "not_found", e.what());
      } catch (const std::exception& e) {
        spdlog::error("{} {} failed: {}", req.method, req.path, e.what());
        error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server.Get("/health", guarded([](const auto&, auto& res) { reply(res, 200, {{"status", "ok"}}); }));
    server.Get("/incidents", guarded([this](const auto& req, auto& res) { list_incidents(req, res); }));
    server.Get(R"(/incidents/([^/]+))", guarded([this](const auto& req, auto& res) { incident_detail(req, res); }));
    server.Post("/feedback", guarded([this](const auto& req, auto& res) { post_feedback(req, res); }));
    server.Post("/labels", guarded([this](const auto& req, auto& res) { post_labels(req, res); }));
    server.Get("/metrics", guarded([this](const auto&, auto& res) { metrics(res); }));
    server.Post(R"(/admin/run/([a-z]+))", guarded([this](const auto& req, auto& res) { run(req, res); }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) error(res, res.status, res.status == 404 ? "not_found" : "error", "no such endpoint");
    });
  }
};

ApiServer::ApiServer(Engine& engine) : impl_(std::make_unique<Impl>(engine)) { impl_->routes(); }

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool ApiServer::serve() { return impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool ApiServer::running() const { return impl_->server.is_running(); }

}  // namespace gr
