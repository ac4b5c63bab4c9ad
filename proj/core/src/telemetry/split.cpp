#include "gr/telemetry/split.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gr/common/digest.hpp"
#include "gr/common/error.hpp"
#include "gr/common/random.hpp"
#include "gr/common/text_io.hpp"

namespace gr {
namespace {

constexpr std::string_view kMagic = "gr-split 1";

std::array<std::size_t, 3> allocate(std::size_t n, const SplitFractions& f) {
  const std::array<double, 3> share{f.train * static_cast<double>(n), f.val * static_cast<double>(n),
                                    f.test * static_cast<double>(n)};
  std::array<std::size_t, 3> count{};
  std::size_t assigned = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    count[p] = static_cast<std::size_t>(std::floor(share[p] + 1e-9));
    assigned += count[p];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return share[a] - static_cast<double>(count[a]) > share[b] - static_cast<double>(count[b]) + 1e-12;
  });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3) {
    ++count[order[i]];
    ++assigned;
  }
  return count;
}

}  // namespace

std::string_view to_string(SplitPart part) {
  switch (part) {
    case SplitPart::Train: return "train";
    case SplitPart::Val: return "val";
    case SplitPart::Test: return "test";
  }
  return "?";
}

std::optional<SplitPart> DatasetSplit::part_of(std::string_view id) const {
  auto in = [&](const std::vector<std::string>& ids) {
    return std::binary_search(ids.begin(), ids.end(), id, std::less<>{});
  };
  if (in(train_ids)) return SplitPart::Train;
  if (in(val_ids)) return SplitPart::Val;
  if (in(test_ids)) return SplitPart::Test;
  return std::nullopt;
}

DatasetSplit stratified_split(std::span<const SplitUnit> units, SplitFractions fractions, std::string strata,
                              std::uint64_t seed) {
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 ||
      std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be non-negative and sum to 1");
  }
  DatasetSplit split;
  split.strata = std::move(strata);
  split.seed = seed;
  split.fractions = fractions;

  std::map<std::string, std::vector<std::string>> by_stratum;
  std::unordered_set<std::string_view> seen;
  for (const auto& unit : units) {
    if (!seen.insert(unit.id).second) continue;
    by_stratum[unit.stratum].push_back(unit.id);
  }
  const std::size_t nonzero_parts =
      (fractions.train > 0) + (fractions.val > 0) + (fractions.test > 0);

  for (auto& [stratum, ids] : by_stratum) {
    std::sort(ids.begin(), ids.end());
    Rng rng(splitmix64(seed ^ fnv1a64(stratum)));
    shuffle_in_place(std::span<std::string>(ids), rng);
    if (ids.size() < nonzero_parts) {
      split.warnings.push_back(fmt::format("stratum '{}' has {} unit(s) for {} parts; best-effort assignment",
                                           stratum, ids.size(), nonzero_parts));
      spdlog::warn("{}", split.warnings.back());
    }
    const auto count = allocate(ids.size(), fractions);
    std::size_t pos = 0;
    std::array<std::vector<std::string>*, 3> parts{&split.train_ids, &split.val_ids, &split.test_ids};
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t i = 0; i < count[p]; ++i) parts[p]->push_back(std::move(ids[pos++]));
    }
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.val_ids.begin(), split.val_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

std::string serialize_split(const DatasetSplit& split) {
  std::ostringstream out;
  out << kMagic << '\n';
  out << "seed " << split.seed << '\n';
  out << "strata " << escape_field(split.strata) << '\n';
  out << "fractions " << format_double(split.fractions.train) << ' ' << format_double(split.fractions.val) << ' '
      << format_double(split.fractions.test) << '\n';
  auto part = [&](std::string_view name, const std::vector<std::string>& ids) {
    out << "part " << name << ' ' << ids.size() << '\n';
    for (const auto& id : ids) out << escape_field(id) << '\n';
  };
  part("train", split.train_ids);
  part("val", split.val_ids);
  part("test", split.test_ids);
  out << "warnings " << split.warnings.size() << '\n';
  for (const auto& w : split.warnings) out << escape_field(w) << '\n';
  return std::move(out).str();
}

DatasetSplit parse_split(std::string_view text) {
  auto lines = split(text, '\n');
  std::size_t pos = 0;
  auto next = [&]() -> std::string_view {
    if (pos >= lines.size()) throw SchemaError("split manifest truncated");
    return lines[pos++];
  };
  auto keyed = [&](std::string_view key) {
    auto line = next();
    if (line.size() <= key.size() || line.substr(0, key.size()) != key || line[key.size()] != ' ') {
      throw SchemaError(fmt::format("split manifest: expected '{}'", key));
    }
    return line.substr(key.size() + 1);
  };
  if (next() != kMagic) throw SchemaError("not a split manifest (bad magic)");
  DatasetSplit result;
  result.seed = static_cast<std::uint64_t>(parse_int(keyed("seed")));
  result.strata = unescape_field(keyed("strata"));
  const auto fr = split(keyed("fractions"), ' ');
  if (fr.size() != 3) throw SchemaError("split manifest: fractions needs three values");
  result.fractions = {parse_double(fr[0]), parse_double(fr[1]), parse_double(fr[2])};
  for (auto* ids : {&result.train_ids, &result.val_ids, &result.test_ids}) {
    const auto header = split(keyed("part"), ' ');
    if (header.size() != 2) throw SchemaError("split manifest: bad part header");
    const auto n = static_cast<std::size_t>(parse_int(header[1]));
    ids->reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids->push_back(unescape_field(next()));
  }
  const auto warnings = static_cast<std::size_t>(parse_int(keyed("warnings")));
  for (std::size_t i = 0; i < warnings; ++i) result.warnings.push_back(unescape_field(next()));
  return result;
}

void save_split(const DatasetSplit& split, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_split(split));
}

DatasetSplit load_split(const std::filesystem::path& path) { return parse_split(read_file(path)); }

}  // namespace gr
