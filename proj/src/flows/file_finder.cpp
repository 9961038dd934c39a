#include "clerms/flows/file_finder.h"

#include "clerms/core/hash.h"

#include <algorithm>
#include <fstream>

namespace clerms::flows {

namespace fs = std::filesystem;

namespace {

// `*` within one segment.
bool match_segment(std::string_view pat, std::string_view s) {
  std::size_t p = 0, i = 0, star = std::string_view::npos, mark = 0;
  while (i < s.size()) {
    if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = i;
    } else if (p < pat.size() && pat[p] == s[i]) {
      ++p;
      ++i;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      i = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

bool match_from(const std::vector<std::string>& pat, std::size_t pi, const std::vector<std::string>& segs,
                std::size_t si) {
  if (pi == pat.size()) return si == segs.size();
  if (pat[pi] == "**") {
    for (std::size_t k = si; k <= segs.size(); ++k)
      if (match_from(pat, pi + 1, segs, k)) return true;
    return false;
  }
  if (si == segs.size()) return false;
  return match_segment(pat[pi], segs[si]) && match_from(pat, pi + 1, segs, si + 1);
}

bool inside(const fs::path& root_canon, const fs::path& p) {
  std::error_code ec;
  fs::path c = fs::weakly_canonical(p, ec);
  if (ec) return false;
  auto rel = c.lexically_relative(root_canon);
  return !rel.empty() && *rel.begin() != "..";
}

}  // namespace

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    std::string_view seg = path.substr(start, end - start);
    if (!seg.empty() && seg != ".") out.emplace_back(seg);
    start = end + 1;
  }
  return out;
}

Glob::Glob(std::string_view pattern) {
  segments_ = split_path(pattern);
  if (segments_.empty()) fail(Errc::InvalidFormat, "empty glob");
  for (const auto& s : segments_)
    if (s == "..") fail(Errc::PathEscape, "glob leaves the sandbox root: " + std::string(pattern));
}

bool Glob::matches(const std::vector<std::string>& path_segments) const {
  return match_from(segments_, 0, path_segments, 0);
}

bool Glob::matches(std::string_view rooted_path) const { return matches(split_path(rooted_path)); }

std::vector<std::string> Glob::literal_prefix() const {
  std::vector<std::string> prefix;
  for (const auto& s : segments_) {
    if (s.find('*') != std::string::npos) break;
    prefix.push_back(s);
  }
  return prefix;
}

std::vector<FileMatch> find_files(const fs::path& root, std::string_view pattern) {
  Glob glob(pattern);
  std::error_code ec;
  const fs::path root_canon = fs::canonical(root, ec);
  if (ec) fail(Errc::AgentIoError, "sandbox root unavailable: " + root.string());

  fs::path start = root_canon;
  for (const auto& s : glob.literal_prefix()) start /= s;
  std::vector<FileMatch> out;

  auto consider = [&](const fs::path& p) {
    auto st = fs::symlink_status(p, ec);
    if (ec || !fs::is_regular_file(st)) return;
    fs::path rel = p.lexically_relative(root_canon);
    std::vector<std::string> segs;
    for (const auto& part : rel) segs.push_back(part.string());
    if (!glob.matches(segs)) return;
    if (!inside(root_canon, p)) fail(Errc::PathEscape, "match outside sandbox: " + p.string());
    std::string rooted = "/" + rel.generic_string();
    out.push_back({rooted, p, fs::file_size(p)});
  };

  auto st = fs::symlink_status(start, ec);
  if (ec || !fs::exists(st)) return out;
  if (fs::is_regular_file(st)) {
    consider(start);
  } else if (fs::is_directory(st)) {
    if (!inside(root_canon, start)) fail(Errc::PathEscape, "glob leaves the sandbox root");
    for (fs::recursive_directory_iterator it(start, fs::directory_options::skip_permission_denied, ec), end;
         !ec && it != end; it.increment(ec))
      consider(it->path());
    if (ec) fail(Errc::AgentIoError, "walk failed: " + ec.message());
  }
  std::sort(out.begin(), out.end(), [](const FileMatch& a, const FileMatch& b) { return a.path < b.path; });
  return out;
}

FlowResult run_file_finder(const fs::path& root, const FileFinderSpec& spec, const std::string& flow_id, Timestamp now) {
  FlowResult result;
  result.flow_id = flow_id;
  for (const auto& m : find_files(root, spec.glob)) {
    FileItem item{m.path, m.size_bytes, std::nullopt, std::nullopt};
    if (spec.action != FileAction::stat) {
      std::ifstream in(m.real, std::ios::binary);
      if (!in) fail(Errc::AgentIoError, "cannot read " + m.path);
      Sha256 h;
      char buf[64 * 1024];
      while (in) {
        in.read(buf, sizeof buf);
        h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
      }
      if (in.bad()) fail(Errc::AgentIoError, "read failed on " + m.path);
      item.sha256 = h.hex_digest();
    }
    result.files.push_back(std::move(item));
  }
  result.status = FlowStatus::complete;
  result.completed_at = now;
  return result;
}

FlowResult run_process_list(const std::vector<ProcessEntry>& table, const std::string& flow_id, Timestamp now) {
  FlowResult result;
  result.flow_id = flow_id;
  for (const auto& p : table)
    if (auto why = check_process_entry(p)) fail(Errc::AgentIoError, "bad process table row: " + *why);
  result.processes = table;
  result.status = FlowStatus::complete;
  result.completed_at = now;
  return result;
}

}  // namespace clerms::flows
