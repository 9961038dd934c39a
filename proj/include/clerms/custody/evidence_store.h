#pragma once

#include "clerms/core/enum.h"
#include "clerms/core/hash.h"
#include "clerms/core/ids.h"
#include "clerms/core/json.h"
#include "clerms/core/time.h"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace clerms::custody {

using clerms::from_json;
using clerms::to_json;

enum class Format { raw, aff4, deb, log_archive, document };
enum class CustodyAction { collected, stored, transferred, examined, exported, destroyed };

struct FlowSource {
  std::string agent_id;
  std::string path;
  std::string flow_id;

  bool operator==(const FlowSource&) const = default;
};

struct UploadSource {
  std::string uploader;

  bool operator==(const UploadSource&) const = default;
};

using Source = std::variant<FlowSource, UploadSource>;

struct DestructionRecord {
  std::string evidence_id;
  std::vector<std::string> authorized_by;
  std::string reason;
  Timestamp destroyed_at;

  bool operator==(const DestructionRecord&) const = default;
};

struct EvidenceItem {
  std::string evidence_id;  // SHA-256 of the content
  std::uint64_t size_bytes = 0;
  Format format = Format::raw;
  Source source;
  Timestamp created_at;
  std::optional<DestructionRecord> destruction;

  bool destroyed() const { return destruction.has_value(); }
  bool operator==(const EvidenceItem&) const = default;
};

struct CustodyEvent {
  std::uint64_t seq = 0;
  std::string evidence_id;
  CustodyAction action{};
  std::string actor;
  Timestamp timestamp;
  std::string details;
  std::string prev_hash;
  std::string event_hash;

  bool operator==(const CustodyEvent&) const = default;
};

// event_hash = SHA-256(canonical JSON of every field but event_hash, followed
// by prev_hash).
std::string compute_event_hash(const CustodyEvent& e);

struct ChainStatus {
  bool ok = true;
  std::uint64_t broken_at = 0;  // first failing seq when !ok
  std::string reason;
  std::uint64_t length = 0;
  std::string head;  // event_hash of the last event, kZeroHash for an empty chain

  static ChainStatus good(std::uint64_t length, std::string head) { return {true, 0, {}, length, std::move(head)}; }
  static ChainStatus broken(std::uint64_t seq, std::string why) { return {false, seq, std::move(why), 0, {}}; }
};

struct ManifestEntry {
  std::string evidence_id;
  std::uint64_t size_bytes = 0;
  std::string chain_head_hash;

  bool operator==(const ManifestEntry&) const = default;
};

struct TransportManifest {
  std::string manifest_id;
  std::string case_id;
  std::vector<ManifestEntry> entries;
  std::string recipient;
  Timestamp created_at;
  std::string manifest_hash;

  Json body() const;  // everything but manifest_hash
  bool operator==(const TransportManifest&) const = default;
};

// What the case module hands over for a transport export.
struct CaseBundle {
  std::string case_id;
  std::vector<std::string> evidence_ids;
  Json dossier;
};

struct ExportResult {
  TransportManifest manifest;
  std::filesystem::path archive_path;
  std::string archive_sha256;
};

struct Examination {
  std::string actor;
  std::string details;
};

// Content-addressed evidence store with one hash-chained custody log per item.
//
// Layout under root:
//   objects/<2 hex>/<62 hex>    blobs
//   chains/<evidence_id>.jsonl  custody events, one canonical JSON per line
//   meta/<evidence_id>.json     item metadata (kept after destruction)
//   manifests/<manifest_id>.json
//   exports/<manifest_id>.tar
class EvidenceStore {
 public:
  struct Options {
    std::optional<std::uint64_t> capacity_bytes;  // StorageFull beyond this
  };

  EvidenceStore(std::filesystem::path root, Clock& clock, IdGenerator& ids);
  EvidenceStore(std::filesystem::path root, Clock& clock, IdGenerator& ids, Options options);

  const std::filesystem::path& root() const { return root_; }

  // Appends `collected` (flow sources only) and `stored` custody events.
  EvidenceItem store(std::span<const std::uint8_t> content, Format format, const Source& source,
                     const std::string& actor);

  bool contains(const std::string& evidence_id) const;
  EvidenceItem item(const std::string& evidence_id) const;  // NotFound
  std::vector<std::string> list() const;

  Bytes retrieve(const std::string& evidence_id, const std::optional<Examination>& examination = std::nullopt);

  CustodyEvent append_custody_event(const std::string& evidence_id, CustodyAction action, const std::string& actor,
                                    const std::string& details);
  ChainStatus verify_chain(const std::string& evidence_id) const;  // NotFound
  // Parsed events; throws ChainBroken when the chain does not verify.
  std::vector<CustodyEvent> chain(const std::string& evidence_id) const;

  ExportResult export_transport_package(const CaseBundle& bundle, const std::string& recipient,
                                        const std::string& actor);
  void destroy(const std::string& evidence_id, const DestructionRecord& authorization);

  // Ids of live items whose blob no longer hashes to the id.
  std::vector<std::string> audit() const;

  std::filesystem::path blob_path(const std::string& evidence_id) const;
  std::filesystem::path chain_path(const std::string& evidence_id) const;
  std::filesystem::path meta_path(const std::string& evidence_id) const;

 private:
  std::shared_mutex& chain_lock(const std::string& evidence_id) const;
  ChainStatus verify_locked(const std::string& evidence_id) const;
  CustodyEvent append_locked(const std::string& evidence_id, CustodyAction action, const std::string& actor,
                             const std::string& details);
  void write_meta(const EvidenceItem& item) const;
  std::uint64_t used_bytes() const;

  std::filesystem::path root_;
  Clock& clock_;
  IdGenerator& ids_;
  Options options_;

  mutable std::mutex locks_mu_;
  mutable std::map<std::string, std::unique_ptr<std::shared_mutex>> chain_locks_;
  mutable std::mutex meta_mu_;
};

void to_json(Json& j, const Source& v);
void from_json(const Json& j, Source& v);
void to_json(Json& j, const DestructionRecord& v);
void from_json(const Json& j, DestructionRecord& v);
void to_json(Json& j, const EvidenceItem& v);
void from_json(const Json& j, EvidenceItem& v);
void to_json(Json& j, const CustodyEvent& v);
void from_json(const Json& j, CustodyEvent& v);
void to_json(Json& j, const ManifestEntry& v);
void to_json(Json& j, const TransportManifest& v);
void from_json(const Json& j, TransportManifest& v);

// Atomic file replacement: write to a sibling temp file, then rename.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);
Bytes read_file(const std::filesystem::path& path);

}  // namespace clerms::custody

namespace clerms {

template <>
struct EnumNames<custody::Format> {
  static constexpr std::array<std::string_view, 5> names{"raw", "aff4", "deb", "log_archive", "document"};
};
template <>
struct EnumNames<custody::CustodyAction> {
  static constexpr std::array<std::string_view, 6> names{"collected", "stored",   "transferred",
                                                         "examined",  "exported", "destroyed"};
};

}  // namespace clerms
