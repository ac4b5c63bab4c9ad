#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gr/common/error.hpp"
#include "gr/metrics/eval_report.hpp"
#include "gr/pipeline/engine.hpp"
#include "gr/service/http_api.hpp"
#include "synth.hpp"

namespace {

gr::ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

gr::Timestamp parse_time_or_throw(const std::string& text) {
  auto t = gr::parse_rfc3339(text);
  if (!t) throw gr::ConfigError(fmt::format("'{}' is not an RFC 3339 timestamp", text));
  return *t;
}

std::optional<gr::Timestamp> optional_time(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return parse_time_or_throw(text);
}

void print_task(const gr::TaskReport& t) {
  if (t.skipped) {
    fmt::print("{}: skipped ({})\n", t.task, t.skip_reason);
    return;
  }
  fmt::print("{}: units={} train/val/test={}/{}/{} pca={} ({:.3f}) best=[n={} depth={} mss={} cw={}]\n", t.task,
             t.units, t.train_rows, t.val_rows, t.test_rows, t.pca_components, t.pca_captured,
             t.best_params.n_estimators, t.best_params.max_depth, t.best_params.min_samples_split,
             gr::to_string(t.best_params.class_weight));
  fmt::print("{}", gr::format_report_table(t.test_report, fmt::format("{} (test)", t.task)));
  fmt::print("majority baseline macro-F1 {:.4f}, emitted precision (val/test) {:.4f}/{:.4f}, coverage {:.4f}\n",
             t.majority_baseline_f1, t.val_emission.precision(), t.test_emission.precision(),
             t.test_emission.coverage());
  if (t.verdict) {
    fmt::print("verdict: {} v{} (new F1 {:.4f}{})\n", t.verdict->accepted ? "accepted" : "rejected",
               t.verdict->version, t.verdict->new_f1,
               t.verdict->old_f1 ? fmt::format(", champion {:.4f}", *t.verdict->old_f1) : std::string());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided response pipelines: ingest, train, infer, backfill, serve"};
  app.require_subcommand(1);

  std::string data_dir, config_path, log_level = "info";
  std::vector<std::string> overrides;
  app.add_option("-d,--data", data_dir, "Data directory (default: $GR_DATA_DIR or ./gr-data)");
  app.add_option("-c,--config", config_path, "Config file (default: <data>/config.txt when present)");
  app.add_option("--set", overrides, "Config override key=value, repeatable");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  auto* init = app.add_subcommand("init", "Write the effective config to <data>/config.txt");
  bool force = false;
  init->add_flag("--force", force, "Overwrite an existing config");

  auto* ingest = app.add_subcommand("ingest", "Validate GUIDE CSV files and copy them into <data>/telemetry");
  std::vector<std::string> ingest_files;
  ingest->add_option("files", ingest_files, "CSV files")->required()->check(CLI::ExistingFile);

  auto* synth = app.add_subcommand("synth", "Generate synthetic GUIDE-schema telemetry into <data>/telemetry");
  gr::SynthOptions so;
  std::string synth_now;
  std::size_t synth_files = 4;
  std::int64_t span_days = 30;
  synth->add_option("--incidents", so.incidents, "Incident count");
  synth->add_option("--orgs", so.orgs, "Organizations");
  synth->add_option("--detectors", so.detectors, "Detectors");
  synth->add_option("--seed", so.seed, "Generator seed");
  synth->add_option("--span-days", span_days, "Days of history before --now");
  synth->add_option("--now", synth_now, "Latest timestamp (RFC 3339, default: current time)");
  synth->add_option("--files", synth_files, "CSV shards");
  synth->add_option("--ungraded", so.ungraded_fraction, "Fraction of incidents without grades");

  auto* train = app.add_subcommand("train", "Run one train cycle");
  std::string train_now;
  train->add_option("--now", train_now, "Cycle time (RFC 3339)");

  auto* infer = app.add_subcommand("infer", "Run one inference batch");
  std::string window_end;
  infer->add_option("--window-end", window_end, "Window end (RFC 3339, default: now)");

  auto* backfill = app.add_subcommand("backfill", "Run backfill steps, one day each");
  std::size_t steps = 1;
  std::string backfill_now;
  backfill->add_option("--steps", steps, "Steps to run");
  backfill->add_option("--now", backfill_now, "Anchor time for a cold start (RFC 3339)");

  auto* eval = app.add_subcommand("eval", "Print the latest cycle report");
  bool as_json = false;
  eval->add_flag("--json", as_json, "Print the raw JSON report");

  auto* status = app.add_subcommand("status", "Champions, store and journal sizes");

  auto* serve = app.add_subcommand("serve", "Serve the JSON API");
  std::string host;
  int port = -1;
  serve->add_option("--host", host, "Listen address (default from config)");
  serve->add_option("--port", port, "Listen port (default from config, 0 for ephemeral)");

  CLI11_PARSE(app, argc, argv);

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));
    auto layout = gr::DataLayout::resolve(data_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(data_dir));
    gr::PipelineConfig config;
    if (!config_path.empty()) {
      config = gr::PipelineConfig::load(config_path);
    } else if (std::filesystem::exists(layout.config())) {
      config = gr::PipelineConfig::load(layout.config());
    }
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw gr::ConfigError(fmt::format("--set expects key=value, got '{}'", o));
      config.set(o.substr(0, eq), o.substr(eq + 1));
    }
    config.validate();
    std::filesystem::create_directories(layout.root);

    if (*init) {
      if (std::filesystem::exists(layout.config()) && !force) {
        throw gr::ConfigError(fmt::format("{} exists; pass --force to overwrite", layout.config().string()));
      }
      std::ofstream(layout.config()) << config.serialize();
      fmt::print("wrote {}\n", layout.config().string());
      return 0;
    }
    if (*ingest) {
      std::filesystem::create_directories(layout.telemetry());
      for (const auto& f : ingest_files) {
        const auto result = gr::ingest_guide_csv(f);
        const auto dest = layout.telemetry() / std::filesystem::path(f).filename();
        std::filesystem::copy_file(f, dest, std::filesystem::copy_options::overwrite_existing);
        fmt::print("{}: {} alerts from {} rows ({} malformed, {} bad timestamps) -> {}\n", f, result.alerts.size(),
                   result.stats.rows_read, result.stats.malformed_rows, result.stats.timestamp_errors,
                   dest.string());
      }
      return 0;
    }
    if (*synth) {
      so.span = gr::days(span_days);
      so.now = synth_now.empty() ? gr::SystemClock().now() : parse_time_or_throw(synth_now);
      const auto alerts = gr::synthesize_guide(so);
      gr::write_synth_csv(layout.telemetry(), alerts, synth_files);
      const auto s = gr::summarize(alerts);
      fmt::print("{} incidents, {} alerts, {} evidence rows, {} actioned alerts, {} distinct hashes -> {}\n",
                 s.incidents, s.alerts, s.evidence_rows, s.actioned_alerts, s.distinct_hashes,
                 layout.telemetry().string());
      return 0;
    }

    gr::Engine engine(layout, config, std::make_shared<gr::SystemClock>());
    if (*train) {
      const auto report = engine.train(optional_time(train_now));
      fmt::print("alerts={} graded={} actioned={} encoder_dim={} incidents={} sampled={}\n", report.alerts,
                 report.graded_alerts, report.actioned_alerts, report.encoder_dimension, report.incidents_formed,
                 report.incidents_sampled);
      print_task(report.triage);
      print_task(report.remediation);
      fmt::print("embeddings upserted={} evicted={}{}\n", report.embeddings_upserted, report.embeddings_evicted,
                 report.store_reset ? " (store reset)" : "");
    } else if (*infer) {
      const auto r = engine.infer(optional_time(window_end));
      fmt::print("window [{}, {}): {} alerts, {} incidents, triage emitted {}, remediation emitted {}, "
                 "similar {}, new revisions {}, embeddings {} ({} unchanged)\n",
                 gr::format_rfc3339(r.window_start), gr::format_rfc3339(r.window_end), r.window_alerts, r.incidents,
                 r.triage_emitted, r.remediation_emitted, r.similar_with_matches, r.new_revisions,
                 r.embeddings_accepted, r.embeddings_unchanged);
    } else if (*backfill) {
      for (const auto& step : engine.backfill(steps, optional_time(backfill_now))) {
        if (step.noop) {
          fmt::print("horizon covered ({} days); nothing to do\n", step.state.days_covered);
          break;
        }
        fmt::print("day [{}, {}): {} incidents, {} embedded, {} evicted\n", gr::format_rfc3339(step.day_start),
                   gr::format_rfc3339(step.day_end), step.incidents, step.upsert.accepted, step.upsert.evicted);
      }
      fmt::print("days covered: {}\n", engine.backfill_state().days_covered);
    } else if (*eval) {
      const auto report = engine.latest_report();
      if (report.is_null()) throw gr::NotFoundError("no cycle report yet; run train first");
      if (as_json) {
        fmt::print("{}\n", report.dump(2));
      } else {
        for (const char* task : {"triage", "remediation"}) {
          const auto& t = report.at(task);
          if (t.value("skipped", false)) {
            fmt::print("{}: skipped\n", task);
            continue;
          }
          fmt::print("{}", gr::format_report_table(gr::report_from_json(t.at("test")), fmt::format("{} (test)", task)));
        }
      }
    } else if (*status) {
      for (auto task : {gr::kTriageTask, gr::kRemediationTask}) {
        const auto v = engine.registry().champion_version(std::string(task));
        fmt::print("{} champion: {}\n", task, v ? gr::version_dir_name(*v) : std::string("none"));
      }
      fmt::print("embeddings: {} (space {})\n", engine.store().size(), engine.store().space_id());
      fmt::print("recommendations: {}, feedback: {}\n", engine.journal().recommendation_count(),
                 engine.journal().feedback().size());
      fmt::print("backfill days covered: {}\n", engine.backfill_state().days_covered);
    } else if (*serve) {
      gr::ApiServer server(engine);
      const auto bound = server.bind(host.empty() ? config.listen_host : host, port >= 0 ? port : config.listen_port);
      if (bound < 0) throw gr::IoError("could not bind the listen socket");
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      fmt::print("listening on {}:{}\n", host.empty() ? config.listen_host : host, bound);
      std::fflush(stdout);
      server.serve();
      g_server = nullptr;
    }
  } catch (const gr::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
