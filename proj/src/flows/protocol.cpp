#include "clerms/flows/protocol.h"

namespace clerms::flows {

namespace {

constexpr std::size_t kMaxNesting = 64;

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

// Rejects pathological nesting before handing the body to the recursive parser.
bool nesting_ok(std::span<const std::uint8_t> body) {
  std::size_t depth = 0;
  bool in_string = false, escaped = false;
  for (auto c : body) {
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      if (++depth > kMaxNesting) return false;
    } else if ((c == '}' || c == ']') && depth > 0) {
      --depth;
    }
  }
  return true;
}

}  // namespace

Bytes encode_frame(const Message& message) {
  if (!message.payload.is_object()) fail(Errc::MalformedFrame, "payload must be an object");
  std::string body = canonical(Json{{"v", kProtocolVersion}, {"type", message.type}, {"payload", message.payload}});
  if (body.size() > kMaxFrameBody) fail(Errc::FrameTooLarge, "frame body of " + std::to_string(body.size()) + " bytes");
  Bytes out(4 + body.size());
  const auto n = static_cast<std::uint32_t>(body.size());
  out[0] = static_cast<std::uint8_t>(n >> 24);
  out[1] = static_cast<std::uint8_t>(n >> 16);
  out[2] = static_cast<std::uint8_t>(n >> 8);
  out[3] = static_cast<std::uint8_t>(n);
  std::copy(body.begin(), body.end(), out.begin() + 4);
  return out;
}

Message decode_frame(std::span<const std::uint8_t> frame) {
  if (frame.size() < 4) fail(Errc::MalformedFrame, "frame shorter than its length prefix");
  const std::uint32_t len = read_be32(frame.data());
  if (len > kMaxFrameBody) fail(Errc::FrameTooLarge, "frame claims " + std::to_string(len) + " bytes");
  if (frame.size() != 4 + std::size_t{len}) fail(Errc::MalformedFrame, "frame length does not match prefix");
  auto body = frame.subspan(4);
  if (!nesting_ok(body)) fail(Errc::MalformedFrame, "frame body nested too deeply");

  Json j = Json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(Errc::MalformedFrame, "frame body is not a JSON object");
  auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer()) fail(Errc::MalformedFrame, "missing protocol version");
  if (*v != kProtocolVersion) fail(Errc::UnsupportedVersion, "unsupported protocol version " + v->dump());
  if (j.size() != 3) fail(Errc::MalformedFrame, "unexpected envelope fields");
  auto type = j.find("type");
  auto payload = j.find("payload");
  if (type == j.end() || !type->is_string() || payload == j.end() || !payload->is_object())
    fail(Errc::MalformedFrame, "envelope needs type and payload");
  auto t = enum_from<MessageType>(type->get_ref<const std::string&>());
  if (!t) fail(Errc::MalformedFrame, "unknown message type");
  return Message{*t, std::move(*payload)};
}

void FrameReader::feed(std::span<const std::uint8_t> data) { buffer_.insert(buffer_.end(), data.begin(), data.end()); }

std::optional<Message> FrameReader::next() {
  if (buffer_.size() < 4) return std::nullopt;
  const std::uint32_t len = read_be32(buffer_.data());
  if (len > kMaxFrameBody) fail(Errc::FrameTooLarge, "frame claims " + std::to_string(len) + " bytes");
  if (buffer_.size() < 4 + std::size_t{len}) return std::nullopt;
  const auto end = static_cast<std::ptrdiff_t>(4 + std::size_t{len});
  Bytes frame(buffer_.begin(), buffer_.begin() + end);
  buffer_.erase(buffer_.begin(), buffer_.begin() + end);
  return decode_frame(frame);
}

Message error_message(std::string_view code, const std::string& message) {
  return Message{MessageType::ERROR, Json{{"code", std::string(code)}, {"message", message}}};
}

}  // namespace clerms::flows
