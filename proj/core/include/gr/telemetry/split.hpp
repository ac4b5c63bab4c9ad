#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gr {

enum class SplitPart : std::uint8_t { Train = 0, Val = 1, Test = 2 };
std::string_view to_string(SplitPart part);

struct SplitFractions {
  double train = 0.70;
  double val = 0.10;
  double test = 0.20;
};

// One indivisible unit of assignment. Callers pass one unit per incident so
// that every alert of an incident lands in the same part.
struct SplitUnit {
  std::string id;
  std::string stratum;
};

struct DatasetSplit {
  std::vector<std::string> train_ids;  // each list sorted
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::string strata;
  std::uint64_t seed = 0;
  SplitFractions fractions;
  std::vector<std::string> warnings;

  std::optional<SplitPart> part_of(std::string_view id) const;
  std::size_t size() const { return train_ids.size() + val_ids.size() + test_ids.size(); }
};

// Per-stratum part sizes come from largest-remainder rounding of the
// fractions, so they depend only on stratum sizes, never on the seed.
// Strata too small to populate every part are assigned best-effort with a
// warning. Throws ConfigError when the fractions do not sum to 1.
DatasetSplit stratified_split(std::span<const SplitUnit> units, SplitFractions fractions,
                              std::string strata, std::uint64_t seed);

std::string serialize_split(const DatasetSplit& split);
DatasetSplit parse_split(std::string_view text);
void save_split(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit load_split(const std::filesystem::path& path);

}  // namespace gr
