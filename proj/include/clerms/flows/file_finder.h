#pragma once

#include "clerms/flows/types.h"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace clerms::flows {

// Glob over '/'-separated segments: `*` matches within one segment, `**`
// matches zero or more whole segments, every other character is literal.
class Glob {
 public:
  // Throws PathEscape for ".." segments, InvalidFormat for an empty pattern.
  explicit Glob(std::string_view pattern);

  bool matches(const std::vector<std::string>& path_segments) const;
  bool matches(std::string_view rooted_path) const;

  // Leading segments without wildcards; the walk starts there.
  std::vector<std::string> literal_prefix() const;
  const std::vector<std::string>& segments() const { return segments_; }

 private:
  std::vector<std::string> segments_;
};

std::vector<std::string> split_path(std::string_view path);

struct FileMatch {
  std::string path;  // sandbox-rooted, e.g. "/var/lib/mysql/fluxbb/users.ibd"
  std::filesystem::path real;
  std::uint64_t size_bytes = 0;
};

// Regular files under `root` matching `glob`, sorted by path. Symlinks are
// never followed. Every match is re-checked to lie inside root.
std::vector<FileMatch> find_files(const std::filesystem::path& root, std::string_view glob);

// Agent-side FileFinder. stat reports sizes; hash and fetch add sha256. For
// fetch the content itself is streamed by the caller. AgentIoError on read
// failures.
FlowResult run_file_finder(const std::filesystem::path& root, const FileFinderSpec& spec, const std::string& flow_id,
                           Timestamp now);

FlowResult run_process_list(const std::vector<ProcessEntry>& table, const std::string& flow_id, Timestamp now);

}  // namespace clerms::flows
