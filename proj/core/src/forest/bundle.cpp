#include "gr/forest/bundle.hpp"

#include <map>
#include <sstream>

#include <fmt/format.h>

#include "gr/common/digest.hpp"
#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"

namespace gr {
namespace {

constexpr std::string_view kManifestMagic = "gr-model 1";
constexpr std::string_view kTreesMagic = "gr-trees 1";
constexpr const char* kBundleFiles[] = {"manifest.txt", "trees.txt", "encoder.txt", "pca.txt"};

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  for (auto w : split(line, ' ')) {
    if (!w.empty()) out.push_back(w);
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

struct MetricField {
  const char* name;
  double ModelMetrics::*field;
};
constexpr MetricField kMetricFields[] = {
    {"val_macro_precision", &ModelMetrics::val_macro_precision},
    {"val_macro_recall", &ModelMetrics::val_macro_recall},
    {"val_macro_f1", &ModelMetrics::val_macro_f1},
    {"test_macro_precision", &ModelMetrics::test_macro_precision},
    {"test_macro_recall", &ModelMetrics::test_macro_recall},
    {"test_macro_f1", &ModelMetrics::test_macro_f1},
    {"test_coverage", &ModelMetrics::test_coverage},
    {"test_emitted_precision", &ModelMetrics::test_emitted_precision},
};

}  // namespace

std::string serialize_trees(const ForestModel& model) {
  std::string out;
  out += kTreesMagic;
  out += fmt::format("\ntrees {} classes {}\n", model.trees.size(), model.classes.size());
  for (const auto& tree : model.trees) {
    out += fmt::format("tree {}\n", tree.nodes.size());
    for (const auto& node : tree.nodes) {
      if (node.feature >= 0) {
        out += fmt::format("s {} {} {} {}\n", node.feature, format_double(node.threshold), node.left, node.right);
      } else {
        out += 'l';
        const auto base = static_cast<std::size_t>(node.leaf) * tree.num_classes;
        for (std::size_t c = 0; c < tree.num_classes; ++c) {
          out += ' ';
          out += format_double(tree.leaf_values[base + c]);
        }
        out += '\n';
      }
    }
  }
  return out;
}

void parse_trees(std::string_view text, ForestModel& model) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kTreesMagic) throw SchemaError("tree dump: bad magic line");
  const auto head = words(lines.at(1));
  if (head.size() != 4 || head[0] != "trees" || head[2] != "classes") throw SchemaError("tree dump: bad header");
  const auto tree_count = static_cast<std::size_t>(parse_int(head[1]));
  const auto num_classes = static_cast<std::size_t>(parse_int(head[3]));
  if (num_classes != model.classes.size()) throw SchemaError("tree dump: class count disagrees with manifest");

  model.trees.clear();
  model.trees.reserve(tree_count);
  std::size_t li = 2;
  for (std::size_t t = 0; t < tree_count; ++t) {
    if (li >= lines.size()) throw SchemaError("tree dump: truncated");
    const auto th = words(lines[li++]);
    if (th.size() != 2 || th[0] != "tree") throw SchemaError(fmt::format("tree dump: expected tree header for tree {}", t));
    const auto node_count = static_cast<std::size_t>(parse_int(th[1]));
    DecisionTree tree;
    tree.num_classes = num_classes;
    tree.nodes.resize(node_count);
    for (std::size_t n = 0; n < node_count; ++n) {
      if (li >= lines.size()) throw SchemaError("tree dump: truncated");
      const auto w = words(lines[li++]);
      auto& node = tree.nodes[n];
      if (w.size() == 5 && w[0] == "s") {
        node.feature = static_cast<std::int32_t>(parse_int(w[1]));
        node.threshold = parse_double(w[2]);
        node.left = static_cast<std::int32_t>(parse_int(w[3]));
        node.right = static_cast<std::int32_t>(parse_int(w[4]));
        if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= model.input_dim || node.left <= 0 ||
            node.right <= 0 || static_cast<std::size_t>(node.left) >= node_count ||
            static_cast<std::size_t>(node.right) >= node_count) {
          throw SchemaError(fmt::format("tree dump: split node {} of tree {} is out of range", n, t));
        }
      } else if (w.size() == num_classes + 1 && w[0] == "l") {
        node.leaf = static_cast<std::int32_t>(tree.leaves());
        for (std::size_t c = 0; c < num_classes; ++c) tree.leaf_values.push_back(parse_double(w[c + 1]));
      } else {
        throw SchemaError(fmt::format("tree dump: malformed node {} of tree {}", n, t));
      }
    }
    model.trees.push_back(std::move(tree));
  }
}

std::string serialize_manifest(const ModelBundle& bundle) {
  const auto& m = bundle.model;
  std::string out;
  out += kManifestMagic;
  out += '\n';
  out += fmt::format("task {}\n", bundle.task);
  out += fmt::format("version {}\n", m.version);
  out += fmt::format("parent_version {}\n", m.parent_version);
  out += "classes";
  for (const auto& c : m.classes) out += " " + escape_field(c);
  out += '\n';
  out += fmt::format("input_dim {}\n", m.input_dim);
  out += "threshold_kind vote_fraction\n";
  out += fmt::format("target_precision {}\n", format_double(m.target_precision));
  out += "thresholds";
  for (const auto& t : m.thresholds) out += " " + (t ? format_double(*t) : std::string("never"));
  out += '\n';
  out += fmt::format("n_estimators {}\n", m.params.n_estimators);
  out += fmt::format("max_depth {}\n", m.params.max_depth);
  out += fmt::format("min_samples_split {}\n", m.params.min_samples_split);
  out += fmt::format("class_weight {}\n", to_string(m.params.class_weight));
  out += fmt::format("seed {}\n", m.params.seed);
  out += fmt::format("bootstrap {}\n", m.params.bootstrap ? 1 : 0);
  for (const auto& f : kMetricFields) out += fmt::format("{} {}\n", f.name, format_double(m.metrics.*f.field));
  out += fmt::format("tolerance {}\n", format_double(bundle.tolerance));
  out += fmt::format("sampling_seed {}\n", bundle.sampling_seed);
  return out;
}

namespace {

ModelBundle parse_manifest(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kManifestMagic) throw SchemaError("model manifest: bad magic line");
  std::map<std::string, std::vector<std::string_view>, std::less<>> kv;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto w = words(lines[i]);
    const std::string key(w.front());
    w.erase(w.begin());
    kv[key] = std::move(w);
  }
  auto get = [&](std::string_view key) -> const std::vector<std::string_view>& {
    auto it = kv.find(key);
    if (it == kv.end()) throw SchemaError(fmt::format("model manifest: missing key '{}'", key));
    return it->second;
  };
  auto one = [&](std::string_view key) {
    const auto& v = get(key);
    if (v.size() != 1) throw SchemaError(fmt::format("model manifest: key '{}' needs one value", key));
    return v[0];
  };

  ModelBundle b;
  auto& m = b.model;
  b.task = std::string(one("task"));
  m.version = static_cast<std::uint32_t>(parse_int(one("version")));
  m.parent_version = static_cast<std::uint32_t>(parse_int(one("parent_version")));
  for (auto c : get("classes")) m.classes.push_back(unescape_field(c));
  m.input_dim = static_cast<std::size_t>(parse_int(one("input_dim")));
  if (one("threshold_kind") != "vote_fraction") throw SchemaError("model manifest: unsupported threshold kind");
  m.target_precision = parse_double(one("target_precision"));
  for (auto t : get("thresholds")) {
    m.thresholds.push_back(t == "never" ? std::nullopt : std::optional<double>(parse_double(t)));
  }
  if (m.thresholds.size() != m.classes.size()) throw SchemaError("model manifest: threshold count != class count");
  m.params.n_estimators = static_cast<std::uint32_t>(parse_int(one("n_estimators")));
  m.params.max_depth = static_cast<std::uint32_t>(parse_int(one("max_depth")));
  m.params.min_samples_split = static_cast<std::uint32_t>(parse_int(one("min_samples_split")));
  const auto cw = parse_class_weight(one("class_weight"));
  if (!cw) throw SchemaError("model manifest: bad class_weight");
  m.params.class_weight = *cw;
  m.params.seed = static_cast<std::uint64_t>(std::stoull(std::string(one("seed"))));
  m.params.bootstrap = parse_int(one("bootstrap")) != 0;
  for (const auto& f : kMetricFields) m.metrics.*f.field = parse_double(one(f.name));
  b.tolerance = parse_double(one("tolerance"));
  b.sampling_seed = static_cast<std::uint64_t>(std::stoull(std::string(one("sampling_seed"))));
  return b;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create bundle directory {}: {}", dir.string(), ec.message()));
  write_file_atomic(dir / "trees.txt", serialize_trees(bundle.model));
  write_file_atomic(dir / "encoder.txt", bundle.encoder.serialize());
  write_file_atomic(dir / "pca.txt", bundle.pca.serialize());
  // Written last so a readable manifest implies a complete bundle.
  write_file_atomic(dir / "manifest.txt", serialize_manifest(bundle));
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.txt")) {
    throw NotFoundError(fmt::format("no model bundle at {}", dir.string()));
  }
  auto bundle = parse_manifest(read_file(dir / "manifest.txt"));
  parse_trees(read_file(dir / "trees.txt"), bundle.model);
  if (bundle.model.trees.size() != bundle.model.params.n_estimators) {
    throw SchemaError("model bundle: tree count does not match n_estimators");
  }
  bundle.encoder = EncoderModel::parse(read_file(dir / "encoder.txt"));
  bundle.pca = PcaModel::parse(read_file(dir / "pca.txt"));
  return bundle;
}

std::string bundle_digest(const std::filesystem::path& dir) {
  std::string all;
  for (const char* name : kBundleFiles) {
    const auto content = read_file(dir / name);
    all += fmt::format("{} {}\n", name, content.size());
    all += content;
  }
  return sha256_hex(all);
}

}  // namespace gr
