#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace photocount::cli {

enum class Format { csv, json };

/// Provenance written at the top of every emitted file.
struct RunMeta {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;

  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;
};

/// Destination stream: a file, or stdout for "-". Files are written to a
/// temporary sibling and renamed on commit so that failed runs leave no
/// partial output.
class OutputFile {
 public:
  explicit OutputFile(std::filesystem::path path);
  ~OutputFile();
  OutputFile(const OutputFile&) = delete;
  OutputFile& operator=(const OutputFile&) = delete;

  std::ostream& stream();
  void commit();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::filesystem::path staging_;
  std::unique_ptr<std::ostream> file_;
  bool committed_ = false;
};

/// explicit_path if given, otherwise default_name (with the extension of
/// format) inside $PHOTOCOUNT_OUTPUT_DIR or the working directory.
std::filesystem::path resolve_output(const std::string& explicit_path, const std::string& default_stem, Format format);

/// path with "_<tag>" inserted before the extension.
std::filesystem::path tagged_path(const std::filesystem::path& path, const std::string& tag);

}  // namespace photocount::cli
