#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

namespace clerms {

// Lowercase canonical 8-4-4-4-12 form.
bool is_uuid(std::string_view text);

class IdGenerator {
 public:
  virtual ~IdGenerator() = default;
  virtual std::string uuid() = 0;
};

// Version-4 UUIDs. Seeded generators are reproducible, for tests and fixtures.
class RandomIdGenerator final : public IdGenerator {
 public:
  RandomIdGenerator();
  explicit RandomIdGenerator(std::uint64_t seed);
  std::string uuid() override;

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
};

}  // namespace clerms
