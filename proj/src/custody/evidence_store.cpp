#include "clerms/custody/evidence_store.h"

#include "clerms/custody/tar.h"

#include <algorithm>
#include <fstream>
#include <set>

namespace clerms::custody {

namespace fs = std::filesystem;

namespace {

Json event_body(const CustodyEvent& e) {
  return Json{{"seq", e.seq},         {"evidence_id", e.evidence_id}, {"action", e.action},
              {"actor", e.actor},     {"timestamp", e.timestamp},     {"details", e.details},
              {"prev_hash", e.prev_hash}};
}

std::vector<std::string> split_lines(const Bytes& data, bool& trailing_newline) {
  std::vector<std::string> lines;
  std::string cur;
  for (auto b : data) {
    if (b == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(b));
    }
  }
  trailing_newline = cur.empty();
  if (!cur.empty()) lines.push_back(std::move(cur));
  return lines;
}

}  // namespace

std::string compute_event_hash(const CustodyEvent& e) { return sha256_hex(canonical(event_body(e)) + e.prev_hash); }

Json TransportManifest::body() const {
  return Json{{"manifest_id", manifest_id}, {"case_id", case_id},       {"entries", entries},
              {"recipient", recipient},     {"created_at", created_at}};
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> data) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoFailure, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) fail(Errc::IoFailure, "short write on " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) fail(Errc::IoFailure, "rename failed for " + path.string() + ": " + ec.message());
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

EvidenceStore::EvidenceStore(fs::path root, Clock& clock, IdGenerator& ids)
    : EvidenceStore(std::move(root), clock, ids, Options{}) {}

EvidenceStore::EvidenceStore(fs::path root, Clock& clock, IdGenerator& ids, Options options)
    : root_(std::move(root)), clock_(clock), ids_(ids), options_(options) {
  for (const char* sub : {"objects", "chains", "meta", "manifests", "exports"}) fs::create_directories(root_ / sub);
}

fs::path EvidenceStore::blob_path(const std::string& id) const { return root_ / "objects" / id.substr(0, 2) / id.substr(2); }
fs::path EvidenceStore::chain_path(const std::string& id) const { return root_ / "chains" / (id + ".jsonl"); }
fs::path EvidenceStore::meta_path(const std::string& id) const { return root_ / "meta" / (id + ".json"); }

std::shared_mutex& EvidenceStore::chain_lock(const std::string& id) const {
  std::lock_guard lock(locks_mu_);
  auto& slot = chain_locks_[id];
  if (!slot) slot = std::make_unique<std::shared_mutex>();
  return *slot;
}

std::uint64_t EvidenceStore::used_bytes() const {
  std::uint64_t total = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root_ / "objects"))
    if (entry.is_regular_file()) total += entry.file_size();
  return total;
}

void EvidenceStore::write_meta(const EvidenceItem& item) const {
  std::lock_guard lock(meta_mu_);
  write_file_atomic(meta_path(item.evidence_id), as_bytes(canonical(Json(item))));
}

bool EvidenceStore::contains(const std::string& id) const {
  return is_sha256_hex(id) && fs::exists(meta_path(id));
}

EvidenceItem EvidenceStore::item(const std::string& id) const {
  if (!contains(id)) fail(Errc::NotFound, "no evidence item " + id);
  Bytes raw = read_file(meta_path(id));
  return Json::parse(raw.begin(), raw.end()).get<EvidenceItem>();
}

std::vector<std::string> EvidenceStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "meta"))
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

EvidenceItem EvidenceStore::store(std::span<const std::uint8_t> content, Format format, const Source& source,
                                  const std::string& actor) {
  const std::string id = sha256_hex(content);
  std::unique_lock lock(chain_lock(id));

  std::optional<EvidenceItem> existing;
  if (contains(id)) {
    existing = item(id);
    if (existing->destroyed()) fail(Errc::AfterDestruction, "evidence " + id + " was destroyed");
  }

  const fs::path blob = blob_path(id);
  if (!fs::exists(blob)) {
    if (options_.capacity_bytes && used_bytes() + content.size() > *options_.capacity_bytes)
      fail(Errc::StorageFull, "evidence store capacity exceeded");
    std::error_code ec;
    auto space = fs::space(root_, ec);
    if (!ec && space.available < content.size()) fail(Errc::StorageFull, "no space left for evidence blob");
    write_file_atomic(blob, content);
  }

  EvidenceItem result;
  if (existing) {
    result = *existing;
  } else {
    result.evidence_id = id;
    result.size_bytes = content.size();
    result.format = format;
    result.source = source;
    result.created_at = clock_.now();
    write_meta(result);
  }

  if (const auto* flow = std::get_if<FlowSource>(&source))
    append_locked(id, CustodyAction::collected, actor,
                  "agent " + flow->agent_id + " path " + flow->path + " flow " + flow->flow_id);
  append_locked(id, CustodyAction::stored, actor, "blob " + blob.lexically_relative(root_).generic_string());
  return result;
}

Bytes EvidenceStore::retrieve(const std::string& id, const std::optional<Examination>& examination) {
  EvidenceItem it = item(id);
  if (it.destroyed()) fail(Errc::Destroyed, "evidence " + id + " was destroyed");
  Bytes data;
  try {
    data = read_file(blob_path(id));
  } catch (const Error&) {
    fail(Errc::IntegrityViolation, "blob missing for " + id);
  }
  if (sha256_hex(data) != id) fail(Errc::IntegrityViolation, "stored bytes no longer match " + id);
  if (examination) append_custody_event(id, CustodyAction::examined, examination->actor, examination->details);
  return data;
}

CustodyEvent EvidenceStore::append_custody_event(const std::string& id, CustodyAction action, const std::string& actor,
                                                 const std::string& details) {
  if (!contains(id)) fail(Errc::NotFound, "no evidence item " + id);
  std::unique_lock lock(chain_lock(id));
  return append_locked(id, action, actor, details);
}

CustodyEvent EvidenceStore::append_locked(const std::string& id, CustodyAction action, const std::string& actor,
                                          const std::string& details) {
  ChainStatus status = verify_locked(id);
  if (!status.ok)
    fail(Errc::ChainBroken, "custody chain of " + id + " broken at seq " + std::to_string(status.broken_at),
         Json{{"seq", status.broken_at}});
  if (status.length > 0) {
    // verify_locked guarantees a parseable chain; only the last action matters.
    bool trailing = true;
    auto lines = split_lines(read_file(chain_path(id)), trailing);
    if (Json::parse(lines.back()).at("action") == "destroyed")
      fail(Errc::AfterDestruction, "custody chain of " + id + " ends with destruction");
  }

  CustodyEvent e;
  e.seq = status.length;
  e.evidence_id = id;
  e.action = action;
  e.actor = actor;
  e.timestamp = clock_.now();
  e.details = details;
  e.prev_hash = status.head;
  e.event_hash = compute_event_hash(e);

  std::ofstream out(chain_path(id), std::ios::binary | std::ios::app);
  if (!out) fail(Errc::IoFailure, "cannot open custody chain for " + id);
  out << canonical(Json(e)) << '\n';
  out.flush();
  if (!out) fail(Errc::IoFailure, "custody append failed for " + id);
  return e;
}

ChainStatus EvidenceStore::verify_chain(const std::string& id) const {
  if (!is_sha256_hex(id) || !fs::exists(chain_path(id))) fail(Errc::NotFound, "no custody chain for " + id);
  std::shared_lock lock(chain_lock(id));
  return verify_locked(id);
}

ChainStatus EvidenceStore::verify_locked(const std::string& id) const {
  if (!fs::exists(chain_path(id))) return ChainStatus::good(0, std::string(kZeroHash));
  bool trailing_newline = true;
  auto lines = split_lines(read_file(chain_path(id)), trailing_newline);
  std::string prev(kZeroHash);
  bool destroyed = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::uint64_t seq = i;
    if (destroyed) return ChainStatus::broken(seq, "event after destruction");
    if (i + 1 == lines.size() && !trailing_newline) return ChainStatus::broken(seq, "unterminated line");
    Json j = Json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object()) return ChainStatus::broken(seq, "unparseable event");
    CustodyEvent e;
    try {
      e = j.get<CustodyEvent>();
    } catch (const std::exception&) {
      return ChainStatus::broken(seq, "malformed event");
    }
    if (j.size() != 8 || canonical(Json(e)) != lines[i]) return ChainStatus::broken(seq, "non-canonical event encoding");
    if (e.seq != seq) return ChainStatus::broken(seq, "sequence gap");
    if (e.evidence_id != id) return ChainStatus::broken(seq, "event belongs to another item");
    if (e.prev_hash != prev) return ChainStatus::broken(seq, "prev_hash does not link to previous event");
    if (e.event_hash != compute_event_hash(e)) return ChainStatus::broken(seq, "event_hash mismatch");
    destroyed = e.action == CustodyAction::destroyed;
    prev = e.event_hash;
  }
  return ChainStatus::good(lines.size(), prev);
}

std::vector<CustodyEvent> EvidenceStore::chain(const std::string& id) const {
  if (!is_sha256_hex(id) || !fs::exists(chain_path(id))) fail(Errc::NotFound, "no custody chain for " + id);
  std::shared_lock lock(chain_lock(id));
  ChainStatus status = verify_locked(id);
  if (!status.ok)
    fail(Errc::ChainBroken, "custody chain of " + id + " broken at seq " + std::to_string(status.broken_at),
         Json{{"seq", status.broken_at}});
  bool trailing = true;
  std::vector<CustodyEvent> events;
  for (const auto& line : split_lines(read_file(chain_path(id)), trailing)) events.push_back(Json::parse(line).get<CustodyEvent>());
  return events;
}

ExportResult EvidenceStore::export_transport_package(const CaseBundle& bundle, const std::string& recipient,
                                                     const std::string& actor) {
  std::vector<std::string> ids = bundle.evidence_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) fail(Errc::EmptyCase, "case " + bundle.case_id + " has no linked evidence");
  for (const auto& id : ids) {
    ChainStatus st = verify_chain(id);
    if (!st.ok)
      fail(Errc::ChainBroken, "custody chain of " + id + " broken at seq " + std::to_string(st.broken_at),
           Json{{"evidence_id", id}, {"seq", st.broken_at}});
  }

  TransportManifest m;
  m.manifest_id = ids_.uuid();
  m.case_id = bundle.case_id;
  m.recipient = recipient;
  m.created_at = clock_.now();

  std::vector<TarEntry> entries;
  for (const auto& id : ids) {
    EvidenceItem it = item(id);
    CustodyEvent ev = append_custody_event(id, CustodyAction::exported, actor,
                                           "manifest " + m.manifest_id + " to " + recipient);
    m.entries.push_back({id, it.size_bytes, ev.event_hash});
    entries.push_back({"chains/" + id + ".jsonl", read_file(chain_path(id))});
    if (!it.destroyed()) entries.push_back({"evidence/" + id, retrieve(id)});
  }
  m.manifest_hash = sha256_hex(canonical(m.body()));

  std::string manifest_text = canonical(Json(m));
  entries.push_back({"manifest.json", Bytes(manifest_text.begin(), manifest_text.end())});
  std::string dossier = canonical(bundle.dossier);
  entries.push_back({"case.json", Bytes(dossier.begin(), dossier.end())});
  std::sort(entries.begin(), entries.end(), [](const TarEntry& a, const TarEntry& b) { return a.name < b.name; });

  Bytes archive = write_tar(entries);
  ExportResult result;
  result.manifest = m;
  result.archive_path = root_ / "exports" / (m.manifest_id + ".tar");
  result.archive_sha256 = sha256_hex(archive);
  write_file_atomic(root_ / "manifests" / (m.manifest_id + ".json"), as_bytes(manifest_text));
  write_file_atomic(result.archive_path, archive);
  return result;
}

void EvidenceStore::destroy(const std::string& id, const DestructionRecord& authorization) {
  EvidenceItem it = item(id);
  std::set<std::string> signers(authorization.authorized_by.begin(), authorization.authorized_by.end());
  signers.erase("");
  if (signers.size() < 2) fail(Errc::InsufficientAuthorization, "destruction requires two distinct authorizing principals");
  if (it.destroyed()) fail(Errc::AfterDestruction, "evidence " + id + " already destroyed");

  std::unique_lock lock(chain_lock(id));
  DestructionRecord record = authorization;
  record.evidence_id = id;
  append_locked(id, CustodyAction::destroyed, *signers.begin(), canonical(Json(record)));
  std::error_code ec;
  fs::remove(blob_path(id), ec);
  if (ec) fail(Errc::IoFailure, "cannot remove blob " + id + ": " + ec.message());
  it.destruction = record;
  write_meta(it);
}

std::vector<std::string> EvidenceStore::audit() const {
  std::vector<std::string> bad;
  for (const auto& id : list()) {
    EvidenceItem it = item(id);
    if (it.destroyed()) continue;
    if (!fs::exists(blob_path(id)) || sha256_hex(read_file(blob_path(id))) != id) bad.push_back(id);
  }
  return bad;
}

// --- serialization ---

void to_json(Json& j, const Source& v) {
  if (const auto* f = std::get_if<FlowSource>(&v))
    j = Json{{"kind", "flow"}, {"agent_id", f->agent_id}, {"path", f->path}, {"flow_id", f->flow_id}};
  else
    j = Json{{"kind", "upload"}, {"uploader", std::get<UploadSource>(v).uploader}};
}

void from_json(const Json& j, Source& v) {
  if (j.at("kind") == "flow")
    v = FlowSource{j.at("agent_id").get<std::string>(), j.at("path").get<std::string>(), j.at("flow_id").get<std::string>()};
  else
    v = UploadSource{j.at("uploader").get<std::string>()};
}

void to_json(Json& j, const DestructionRecord& v) {
  j = Json{{"evidence_id", v.evidence_id}, {"authorized_by", v.authorized_by}, {"reason", v.reason},
           {"destroyed_at", v.destroyed_at}};
}

void from_json(const Json& j, DestructionRecord& v) {
  v.evidence_id = j.value("evidence_id", "");
  v.authorized_by = j.at("authorized_by").get<std::vector<std::string>>();
  v.reason = j.value("reason", "");
  v.destroyed_at = j.at("destroyed_at").get<Timestamp>();
}

void to_json(Json& j, const EvidenceItem& v) {
  j = Json{{"evidence_id", v.evidence_id}, {"size_bytes", v.size_bytes}, {"format", v.format},
           {"source", v.source},           {"created_at", v.created_at}};
  j["destruction"] = v.destruction ? Json(*v.destruction) : Json(nullptr);
}

void from_json(const Json& j, EvidenceItem& v) {
  v.evidence_id = j.at("evidence_id").get<std::string>();
  v.size_bytes = j.at("size_bytes").get<std::uint64_t>();
  v.format = j.at("format").get<Format>();
  v.source = j.at("source").get<Source>();
  v.created_at = j.at("created_at").get<Timestamp>();
  v.destruction = j.at("destruction").is_null() ? std::nullopt : std::optional(j.at("destruction").get<DestructionRecord>());
}

void to_json(Json& j, const CustodyEvent& v) {
  j = event_body(v);
  j["event_hash"] = v.event_hash;
}

void from_json(const Json& j, CustodyEvent& v) {
  const Json& seq = j.at("seq");
  if (!seq.is_number_unsigned()) fail(Errc::InvalidFormat, "seq must be a non-negative integer");
  v.seq = seq.get<std::uint64_t>();
  v.evidence_id = j.at("evidence_id").get<std::string>();
  v.action = j.at("action").get<CustodyAction>();
  v.actor = j.at("actor").get<std::string>();
  v.timestamp = j.at("timestamp").get<Timestamp>();
  v.details = j.at("details").get<std::string>();
  v.prev_hash = j.at("prev_hash").get<std::string>();
  v.event_hash = j.at("event_hash").get<std::string>();
}

void to_json(Json& j, const ManifestEntry& v) {
  j = Json{{"evidence_id", v.evidence_id}, {"size_bytes", v.size_bytes}, {"chain_head_hash", v.chain_head_hash}};
}

void to_json(Json& j, const TransportManifest& v) {
  j = v.body();
  j["manifest_hash"] = v.manifest_hash;
}

void from_json(const Json& j, TransportManifest& v) {
  v.manifest_id = j.at("manifest_id").get<std::string>();
  v.case_id = j.at("case_id").get<std::string>();
  v.entries.clear();
  for (const auto& e : j.at("entries"))
    v.entries.push_back({e.at("evidence_id").get<std::string>(), e.at("size_bytes").get<std::uint64_t>(),
                         e.at("chain_head_hash").get<std::string>()});
  v.recipient = j.at("recipient").get<std::string>();
  v.created_at = j.at("created_at").get<Timestamp>();
  v.manifest_hash = j.at("manifest_hash").get<std::string>();
}

}  // namespace clerms::custody
