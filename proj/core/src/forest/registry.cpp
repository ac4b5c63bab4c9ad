#include "gr/forest/registry.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gr/common/error.hpp"
#include "gr/common/text_io.hpp"

namespace fs = std::filesystem;

namespace gr {
namespace {

class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
      if (fd_ >= 0) ::close(fd_);
      throw IoError(fmt::format("cannot lock {}", path.string()));
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::vector<std::uint32_t> scan_versions(const fs::path& dir) {
  std::vector<std::uint32_t> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || name.size() < 2 || name[0] != 'v') continue;
    if (!fs::exists(entry.path() / "manifest.txt")) continue;  // incomplete write
    try {
      out.push_back(static_cast<std::uint32_t>(parse_int(std::string_view(name).substr(1))));
    } catch (const Error&) {
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

bool accepts(double new_f1, std::optional<double> old_f1, double tolerance) {
  return !old_f1 || new_f1 >= *old_f1 - tolerance;
}

double selection_f1(const ForestModel& model) {
  return model.metrics.test_macro_f1 > 0.0 ? model.metrics.test_macro_f1 : model.metrics.val_macro_f1;
}

std::string version_dir_name(std::uint32_t version) { return fmt::format("v{:06d}", version); }

ModelRegistry::ModelRegistry(fs::path root) : root_(std::move(root)) {}

fs::path ModelRegistry::bundle_dir(const std::string& task, std::uint32_t version) const {
  return root_ / task / version_dir_name(version);
}

std::vector<std::uint32_t> ModelRegistry::versions(const std::string& task) const { return scan_versions(root_ / task); }

std::vector<std::uint32_t> ModelRegistry::rejected_versions(const std::string& task) const {
  return scan_versions(root_ / task / "rejected");
}

std::optional<std::uint32_t> ModelRegistry::champion_version(const std::string& task) const {
  const auto path = root_ / task / "CHAMPION";
  if (!fs::exists(path)) return std::nullopt;
  return static_cast<std::uint32_t>(parse_int(trim(read_file(path))));
}

ModelBundle ModelRegistry::load(const std::string& task, std::uint32_t version) const {
  return load_bundle(bundle_dir(task, version));
}

std::optional<ModelBundle> ModelRegistry::champion(const std::string& task) const {
  const auto v = champion_version(task);
  if (!v) return std::nullopt;
  return load(task, *v);
}

ValidationVerdict ModelRegistry::validate_and_store(ModelBundle bundle, double tolerance) {
  if (bundle.task.empty()) throw ConfigError("model bundle has no task name");
  const auto task_dir = root_ / bundle.task;
  std::error_code ec;
  fs::create_directories(task_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create registry directory {}: {}", task_dir.string(), ec.message()));
  FileLock lock(task_dir / ".lock");

  const auto accepted_versions = versions(bundle.task);
  const auto rejected = rejected_versions(bundle.task);
  std::uint32_t latest = 0;
  if (!accepted_versions.empty()) latest = accepted_versions.back();
  if (!rejected.empty()) latest = std::max(latest, rejected.back());

  ValidationVerdict verdict;
  verdict.tolerance = tolerance;
  verdict.version = latest + 1;
  verdict.new_f1 = selection_f1(bundle.model);

  const auto current = champion_version(bundle.task);
  if (current) verdict.old_f1 = selection_f1(load(bundle.task, *current).model);
  verdict.accepted = accepts(verdict.new_f1, verdict.old_f1, tolerance);

  bundle.model.version = verdict.version;
  bundle.model.parent_version = current.value_or(0);
  bundle.tolerance = tolerance;

  if (verdict.accepted) {
    save_bundle(bundle, bundle_dir(bundle.task, verdict.version));
    write_file_atomic(task_dir / "CHAMPION", fmt::format("{}\n", verdict.version));
    verdict.champion_version = verdict.version;
  } else {
    const auto dir = task_dir / "rejected" / version_dir_name(verdict.version);
    save_bundle(bundle, dir);
    write_file_atomic(dir / "verdict.txt",
                      fmt::format("accepted 0\nnew_f1 {}\nold_f1 {}\ntolerance {}\nchampion {}\n",
                                  format_double(verdict.new_f1), format_double(*verdict.old_f1),
                                  format_double(tolerance), *current));
    verdict.champion_version = *current;
    spdlog::warn("{} model v{} rejected: macro-F1 {:.4f} < champion {:.4f} - {}", bundle.task, verdict.version,
                 verdict.new_f1, *verdict.old_f1, tolerance);
  }
  return verdict;
}

}  // namespace gr
