#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gr/forest/bundle.hpp"

namespace gr {

struct ValidationVerdict {
  bool accepted = false;
  double new_f1 = 0.0;
  std::optional<double> old_f1;  // absent on cold start
  double tolerance = 0.03;
  std::uint32_t version = 0;          // version assigned to the new model
  std::uint32_t champion_version = 0;  // live champion after the call
};

// Champion/challenger rule: accepted iff there is no champion or
// new_f1 >= old_f1 - tolerance.
bool accepts(double new_f1, std::optional<double> old_f1, double tolerance);

// Test-split macro-F1 when the model has one, otherwise validation.
double selection_f1(const ForestModel& model);

// On-disk layout under root:
//   <task>/v000001/          accepted bundles
//   <task>/CHAMPION          version number of the live bundle
//   <task>/rejected/v000002/ rejected bundles plus verdict.txt
// Versions are shared by accepted and rejected bundles and only increase.
class ModelRegistry {
 public:
  explicit ModelRegistry(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Assigns the next version and parent, compares against the champion, then
  // writes the bundle. On I/O failure the champion pointer is untouched.
  ValidationVerdict validate_and_store(ModelBundle bundle, double tolerance);

  std::optional<std::uint32_t> champion_version(const std::string& task) const;
  std::optional<ModelBundle> champion(const std::string& task) const;
  ModelBundle load(const std::string& task, std::uint32_t version) const;  // throws NotFoundError
  std::filesystem::path bundle_dir(const std::string& task, std::uint32_t version) const;
  std::vector<std::uint32_t> versions(const std::string& task) const;           // accepted only
  std::vector<std::uint32_t> rejected_versions(const std::string& task) const;

 private:
  std::filesystem::path root_;
};

std::string version_dir_name(std::uint32_t version);

}  // namespace gr
