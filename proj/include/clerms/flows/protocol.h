#pragma once

#include "clerms/core/enum.h"
#include "clerms/core/hash.h"
#include "clerms/core/json.h"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace clerms::flows {

using clerms::from_json;
using clerms::to_json;

// Agent channel framing: 4-byte big-endian body length, then the UTF-8 JSON
// body {"payload":{...},"type":"...","v":1} in canonical form.
inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameBody = 16u * 1024u * 1024u;
inline constexpr std::size_t kFetchChunkSize = 1024u * 1024u;

enum class MessageType { REGISTER, POLL, FLOW_ASSIGN, RESULT_CHUNK, FLOW_DONE, LOG_BATCH, ERROR };

struct Message {
  MessageType type{};
  Json payload = Json::object();

  bool operator==(const Message&) const = default;
};

Bytes encode_frame(const Message& message);  // FrameTooLarge
// Decodes exactly one complete frame. Never throws anything but
// Error{FrameTooLarge, MalformedFrame, UnsupportedVersion}.
Message decode_frame(std::span<const std::uint8_t> frame);

// Incremental decoder for a byte stream carrying back-to-back frames.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> data);
  // Next complete message, or nullopt when more bytes are needed.
  std::optional<Message> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  Bytes buffer_;
};

Message error_message(std::string_view code, const std::string& message);

}  // namespace clerms::flows

namespace clerms {

template <>
struct EnumNames<flows::MessageType> {
  static constexpr std::array<std::string_view, 7> names{"REGISTER", "POLL",      "FLOW_ASSIGN", "RESULT_CHUNK",
                                                         "FLOW_DONE", "LOG_BATCH", "ERROR"};
};

}  // namespace clerms
