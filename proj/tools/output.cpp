#include "output.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <system_error>

#include <fmt/format.h>

namespace photocount::cli {

void RunMeta::write_csv(std::ostream& out) const {
  out << "# photocount-version=" << PHOTOCOUNT_VERSION << '\n';
  out << "# command=" << command << '\n';
  for (const auto& [key, value] : config) out << "# config." << key << '=' << value << '\n';
}

nlohmann::json RunMeta::to_json() const {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [key, value] : config) cfg[key] = value;
  return {{"version", PHOTOCOUNT_VERSION}, {"command", command}, {"config", cfg}};
}

OutputFile::OutputFile(std::filesystem::path path) : path_(std::move(path)) {
  if (path_ == "-") return;
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
    if (ec) throw std::runtime_error(fmt::format("cannot create directory '{}': {}", path_.parent_path().string(), ec.message()));
  }
  staging_ = path_;
  staging_ += ".partial";
  auto file = std::make_unique<std::ofstream>(staging_, std::ios::binary | std::ios::trunc);
  if (!*file) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path_.string()));
  file_ = std::move(file);
}

OutputFile::~OutputFile() {
  if (file_ && !committed_) {
    file_.reset();
    std::error_code ec;
    std::filesystem::remove(staging_, ec);
  }
}

std::ostream& OutputFile::stream() { return file_ ? *file_ : std::cout; }

void OutputFile::commit() {
  if (!file_) {
    std::cout.flush();
    return;
  }
  file_->flush();
  if (!*file_) throw std::runtime_error(fmt::format("write to '{}' failed", path_.string()));
  file_.reset();
  std::error_code ec;
  std::filesystem::rename(staging_, path_, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot move output into '{}': {}", path_.string(), ec.message()));
  committed_ = true;
}

std::filesystem::path resolve_output(const std::string& explicit_path, const std::string& default_stem, Format format) {
  if (!explicit_path.empty()) return explicit_path;
  std::filesystem::path dir = ".";
  if (const char* env = std::getenv("PHOTOCOUNT_OUTPUT_DIR"); env != nullptr && *env != '\0') dir = env;
  return dir / (default_stem + (format == Format::json ? ".json" : ".csv"));
}

std::filesystem::path tagged_path(const std::filesystem::path& path, const std::string& tag) {
  if (path == "-") return path;
  std::filesystem::path out = path.parent_path() / (path.stem().string() + "_" + tag);
  out += path.extension();
  return out;
}

}  // namespace photocount::cli
