#include "clerms/custody/tar.h"

#include "clerms/core/error.h"

#include <cstdio>
#include <cstring>

namespace clerms::custody {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  // width-1 digits followed by NUL
  std::snprintf(reinterpret_cast<char*>(field), width, "%0*llo", static_cast<int>(width - 1),
                static_cast<unsigned long long>(value));
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width && field[i] >= '0' && field[i] <= '7'; ++i) v = v * 8 + (field[i] - '0');
  return v;
}

unsigned header_checksum(const std::uint8_t* h) {
  unsigned sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) sum += (i >= 148 && i < 156) ? ' ' : h[i];
  return sum;
}

}  // namespace

Bytes write_tar(const std::vector<TarEntry>& entries) {
  Bytes out;
  for (const auto& e : entries) {
    if (e.name.empty() || e.name.size() > 100) fail(Errc::IoFailure, "tar entry name must be 1..100 bytes: " + e.name);
    std::uint8_t h[kBlock] = {};
    std::memcpy(h, e.name.data(), e.name.size());
    put_octal(h + 100, 8, 0644);
    put_octal(h + 108, 8, 0);
    put_octal(h + 116, 8, 0);
    put_octal(h + 124, 12, e.data.size());
    put_octal(h + 136, 12, 0);
    h[156] = '0';
    std::memcpy(h + 257, "ustar", 6);
    h[263] = '0';
    h[264] = '0';
    put_octal(h + 329, 8, 0);
    put_octal(h + 337, 8, 0);
    std::snprintf(reinterpret_cast<char*>(h + 148), 7, "%06o", header_checksum(h));
    h[154] = 0;
    h[155] = ' ';
    out.insert(out.end(), h, h + kBlock);
    out.insert(out.end(), e.data.begin(), e.data.end());
    out.resize(out.size() + (kBlock - e.data.size() % kBlock) % kBlock, 0);
  }
  out.resize(out.size() + 2 * kBlock, 0);
  return out;
}

std::vector<TarEntry> read_tar(const Bytes& archive) {
  std::vector<TarEntry> entries;
  std::size_t pos = 0;
  while (pos + kBlock <= archive.size()) {
    const std::uint8_t* h = archive.data() + pos;
    bool zero = true;
    for (std::size_t i = 0; i < kBlock && zero; ++i) zero = h[i] == 0;
    if (zero) return entries;
    if (get_octal(h + 148, 8) != header_checksum(h)) fail(Errc::MalformedFrame, "tar header checksum mismatch");
    std::uint64_t size = get_octal(h + 124, 12);
    pos += kBlock;
    if (pos + size > archive.size()) fail(Errc::MalformedFrame, "tar entry truncated");
    TarEntry e;
    e.name.assign(reinterpret_cast<const char*>(h), strnlen(reinterpret_cast<const char*>(h), 100));
    e.data.assign(archive.begin() + static_cast<std::ptrdiff_t>(pos), archive.begin() + static_cast<std::ptrdiff_t>(pos + size));
    if (h[156] == '0' || h[156] == 0) entries.push_back(std::move(e));
    pos += size + (kBlock - size % kBlock) % kBlock;
  }
  fail(Errc::MalformedFrame, "tar archive missing end marker");
}

}  // namespace clerms::custody
