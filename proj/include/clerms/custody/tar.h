#pragma once

#include "clerms/core/hash.h"

#include <string>
#include <vector>

namespace clerms::custody {

struct TarEntry {
  std::string name;  // at most 100 bytes
  Bytes data;
};

// ustar archive with fixed metadata (mode 0644, uid/gid 0, mtime 0, no
// owner names). Entries are written in the given order.
Bytes write_tar(const std::vector<TarEntry>& entries);

// Reads regular-file entries back. Throws Error(MalformedFrame) on a
// truncated or checksum-invalid header.
std::vector<TarEntry> read_tar(const Bytes& archive);

}  // namespace clerms::custody
