#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clerms {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::string_view kZeroHash =
    "0000000000000000000000000000000000000000000000000000000000000000";

// Incremental SHA-256 (OpenSSL EVP underneath).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::span<const std::uint8_t> data);
  void update(std::string_view data);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);

// 64 lowercase hex characters.
bool is_sha256_hex(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> data);
// Returns false on malformed input.
bool base64_decode(std::string_view text, Bytes& out);

// n_bytes from the OpenSSL CSPRNG, hex encoded.
std::string random_hex(std::size_t n_bytes);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace clerms
