#include "gr/pipeline/config.hpp"

#include <fmt/format.h>

#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"

namespace gr {
namespace {

std::uint32_t parse_count(std::string_view key, std::string_view value) {
  const auto v = parse_int(value);
  if (v < 0 || v > UINT32_MAX) throw ConfigError(fmt::format("{} = {} is out of range", key, value));
  return static_cast<std::uint32_t>(v);
}

Seconds parse_span(std::string_view key, std::string_view value) {
  const auto d = parse_duration(value);
  if (!d) throw ConfigError(fmt::format("{} = '{}' is not a duration", key, value));
  return *d;
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view value) {
  try {
    if (key == "c") min_cardinality = parse_count(key, value);
    else if (key == "k") max_components = parse_count(key, value);
    else if (key == "variance_target") variance_target = parse_double(value);
    else if (key == "m") sample_cap = parse_count(key, value);
    else if (key == "s") store_cap = parse_count(key, value);
    else if (key == "grid") grid = ParamGrid::parse(value);
    else if (key == "triage_precision") triage_precision = parse_double(value);
    else if (key == "remediation_precision") remediation_precision = parse_double(value);
    else if (key == "cosine_cutoff") cosine_cutoff = parse_double(value);
    else if (key == "similar_max") similar_max = parse_count(key, value);
    else if (key == "horizon") horizon = parse_span(key, value);
    else if (key == "inference_window") inference_window = parse_span(key, value);
    else if (key == "backfill_cadence") backfill_cadence = parse_span(key, value);
    else if (key == "train_cadence") train_cadence = parse_span(key, value);
    else if (key == "tolerance") tolerance = parse_double(value);
    else if (key == "seed") seed = std::stoull(std::string(value));
    else if (key == "split") {
      const auto parts = gr::split(value, ',');
      if (parts.size() != 3) throw ConfigError("split needs three comma-separated fractions");
      this->split = SplitFractions{parse_double(trim(parts[0])), parse_double(trim(parts[1])), parse_double(trim(parts[2]))};
    } else if (key == "workers") workers = parse_count(key, value);
    else if (key == "entity_rules") entity_rules = std::string(value);
    else if (key == "listen_host") listen_host = std::string(value);
    else if (key == "listen_port") {
      const auto p = parse_count(key, value);
      if (p == 0 || p > 65535) throw ConfigError(fmt::format("listen_port {} is out of range", p));
      listen_port = static_cast<std::uint16_t>(p);
    } else {
      throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("bad value for {}: '{}' ({})", key, value, e.what()));
  }
}

void PipelineConfig::validate() const {
  auto require = [](bool ok, std::string_view what) {
    if (!ok) throw ConfigError(fmt::format("invalid config: {}", what));
  };
  require(min_cardinality >= 1, "c must be >= 1");
  require(max_components >= 1, "k must be >= 1");
  require(variance_target > 0 && variance_target <= 1, "variance_target must be in (0, 1]");
  require(sample_cap >= 1, "m must be >= 1");
  require(store_cap >= 1, "s must be >= 1");
  require(grid.size() >= 1, "grid must not be empty");
  require(triage_precision > 0 && triage_precision <= 1, "triage_precision must be in (0, 1]");
  require(remediation_precision > 0 && remediation_precision <= 1, "remediation_precision must be in (0, 1]");
  require(cosine_cutoff > 0 && cosine_cutoff <= 1, "cosine_cutoff must be in (0, 1]");
  require(similar_max >= 1, "similar_max must be >= 1");
  require(horizon.count() > 0 && inference_window.count() > 0, "durations must be positive");
  require(backfill_cadence.count() > 0 && train_cadence.count() > 0, "durations must be positive");
  require(inference_window <= horizon, "inference_window must not exceed horizon");
  require(tolerance >= 0, "tolerance must be >= 0");
  require(split.train > 0 && split.val > 0 && split.test > 0, "split fractions must be positive");
}

std::string PipelineConfig::serialize() const {
  std::string out;
  out += fmt::format("c = {}\n", min_cardinality);
  out += fmt::format("k = {}\n", max_components);
  out += fmt::format("variance_target = {}\n", format_double(variance_target));
  out += fmt::format("m = {}\n", sample_cap);
  out += fmt::format("s = {}\n", store_cap);
  out += fmt::format("grid = {}\n", grid.serialize());
  out += fmt::format("triage_precision = {}\n", format_double(triage_precision));
  out += fmt::format("remediation_precision = {}\n", format_double(remediation_precision));
  out += fmt::format("cosine_cutoff = {}\n", format_double(cosine_cutoff));
  out += fmt::format("similar_max = {}\n", similar_max);
  out += fmt::format("horizon = {}\n", format_duration(horizon));
  out += fmt::format("inference_window = {}\n", format_duration(inference_window));
  out += fmt::format("backfill_cadence = {}\n", format_duration(backfill_cadence));
  out += fmt::format("train_cadence = {}\n", format_duration(train_cadence));
  out += fmt::format("tolerance = {}\n", format_double(tolerance));
  out += fmt::format("seed = {}\n", seed);
  out += fmt::format("split = {},{},{}\n", format_double(split.train), format_double(split.val),
                     format_double(split.test));
  out += fmt::format("workers = {}\n", workers);
  if (!entity_rules.empty()) out += fmt::format("entity_rules = {}\n", entity_rules);
  out += fmt::format("listen_host = {}\n", listen_host);
  out += fmt::format("listen_port = {}\n", listen_port);
  return out;
}

PipelineConfig PipelineConfig::parse(std::string_view text) {
  PipelineConfig config;
  std::size_t line_no = 0;
  for (auto line : gr::split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

}  // namespace gr
