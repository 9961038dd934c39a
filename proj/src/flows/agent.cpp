#include "clerms/flows/agent.h"

#include "clerms/flows/file_finder.h"

#include <fstream>
#include <sstream>
#include <thread>

namespace clerms::flows {

Message TcpTransport::receive() {
  auto m = read_message(sock_, reader_);
  if (!m) fail(Errc::IoFailure, "server closed the connection");
  return *m;
}

void LoopbackTransport::send(const Message& message) {
  // Round-trip through the codec so framing is exercised.
  Message decoded = decode_frame(encode_frame(message));
  if (auto reply = session_.handle(decoded)) replies_.push_back(decode_frame(encode_frame(*reply)));
}

Message LoopbackTransport::receive() {
  if (replies_.empty()) fail(Errc::IoFailure, "no reply pending");
  Message m = std::move(replies_.front());
  replies_.pop_front();
  return m;
}

std::vector<ProcessEntry> load_process_table(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(Errc::IoFailure, "cannot read " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    fail(Errc::InvalidFormat, file.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("processes")) j = j["processes"];
  if (!j.is_array()) fail(Errc::InvalidFormat, "process table must be an array");
  std::vector<ProcessEntry> out;
  for (const auto& e : j) {
    ProcessEntry p = e.get<ProcessEntry>();
    if (auto bad = check_process_entry(p)) fail(Errc::InvalidFormat, *bad);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Json> load_log_records(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(Errc::IoFailure, "cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  auto first = text.find_first_not_of(" \t\r\n");
  std::vector<Json> out;
  try {
    if (first != std::string::npos && text[first] == '[') {
      for (auto& r : Json::parse(text)) out.push_back(r);
      return out;
    }
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.push_back(Json::parse(line));
    }
  } catch (const Json::exception& e) {
    fail(Errc::InvalidFormat, file.string() + ": " + e.what());
  }
  return out;
}

Message SimulatedAgent::expect(AgentTransport& t, MessageType type) {
  Message m = t.receive();
  if (m.type == MessageType::ERROR) {
    std::string code = m.payload.value("code", "MalformedFrame");
    std::string msg = m.payload.value("message", "");
    if (auto c = errc_from_name(code)) fail(*c, msg);
    fail(Errc::MalformedFrame, code + ": " + msg);
  }
  if (m.type != type) fail(Errc::MalformedFrame, "expected " + std::string(name_of(type)));
  return m;
}

const AgentInfo& SimulatedAgent::register_with(AgentTransport& t) {
  Json hello{{"hostname", config_.hostname}, {"os", config_.os}, {"labels", config_.labels}};
  if (info_)
    hello["agent_id"] = info_->agent_id;
  else if (config_.agent_id)
    hello["agent_id"] = *config_.agent_id;
  t.send({MessageType::REGISTER, hello});
  info_ = expect(t, MessageType::REGISTER).payload.get<AgentInfo>();
  return *info_;
}

IngestResult SimulatedAgent::push_logs(AgentTransport& t, const std::vector<Json>& records) {
  t.send({MessageType::LOG_BATCH, Json{{"records", records}}});
  Json r = expect(t, MessageType::LOG_BATCH).payload;
  IngestResult out;
  out.accepted = r.value("accepted", std::size_t{0});
  out.duplicates = r.value("duplicates", std::size_t{0});
  for (const auto& rej : r.value("rejected", Json::array()))
    out.rejected.push_back({rej.value("index", std::size_t{0}), rej.value("reason", "")});
  return out;
}

std::vector<FlowResult> SimulatedAgent::poll_once(AgentTransport& t) {
  if (!info_) fail(Errc::UnknownAgent, "not registered");
  t.send({MessageType::POLL, Json{{"agent_id", info_->agent_id}}});
  Json assigned = expect(t, MessageType::FLOW_ASSIGN).payload;
  std::vector<FlowResult> out;
  for (const auto& f : assigned.value("flows", Json::array())) out.push_back(execute(f.get<FlowRequest>(), t));
  return out;
}

void SimulatedAgent::stream_file(AgentTransport& t, const std::string& flow_id, const FileItem& item) {
  std::filesystem::path real = config_.root;
  for (const auto& seg : split_path(item.path)) real /= seg;
  std::ifstream in(real, std::ios::binary);
  if (!in) fail(Errc::AgentIoError, "cannot open " + item.path);
  std::uint64_t offset = 0;
  std::vector<char> buf(config_.chunk_size);
  for (;;) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    auto n = static_cast<std::size_t>(in.gcount());
    if (in.bad()) fail(Errc::AgentIoError, "read failed for " + item.path);
    bool last = in.eof() || offset + n >= item.size_bytes;
    Json p{{"flow_id", flow_id},
           {"path", item.path},
           {"offset", offset},
           {"data", base64_encode({reinterpret_cast<const std::uint8_t*>(buf.data()), n})},
           {"last", last}};
    if (last) {
      p["sha256"] = item.sha256.value_or("");
      p["size"] = offset + n;
    }
    t.send({MessageType::RESULT_CHUNK, p});
    offset += n;
    if (last) break;
  }
}

FlowResult SimulatedAgent::execute(const FlowRequest& flow, AgentTransport& t) {
  FlowResult result;
  result.flow_id = flow.flow_id;
  try {
    if (const auto* ff = std::get_if<FileFinderSpec>(&flow.kind)) {
      result = run_file_finder(config_.root, *ff, flow.flow_id, clock_.now());
      if (ff->action == FileAction::fetch)
        for (const auto& item : result.files) stream_file(t, flow.flow_id, item);
    } else if (std::holds_alternative<ProcessListSpec>(flow.kind)) {
      result = run_process_list(config_.processes, flow.flow_id, clock_.now());
    } else {
      result.status = FlowStatus::failed;
      result.error = "DiskImage not supported in prototype";
    }
  } catch (const Error& e) {
    result = FlowResult{};
    result.flow_id = flow.flow_id;
    result.status = FlowStatus::failed;
    result.error = std::string(e.name()) + ": " + e.what();
  }
  if (!result.completed_at) result.completed_at = clock_.now();
  t.send({MessageType::FLOW_DONE, Json(result)});
  return expect(t, MessageType::FLOW_DONE).payload.get<FlowResult>();
}

void run_agent(SimulatedAgent& agent, AgentTransport& t, const AgentRunOptions& options) {
  agent.register_with(t);
  if (!agent.config().logs.empty()) agent.push_logs(t, agent.config().logs);
  for (int round = 0; options.max_polls == 0 || round < options.max_polls; ++round) {
    if (options.stop && options.stop()) break;
    for (const auto& r : agent.poll_once(t))
      if (options.on_result) options.on_result(r);
    if (options.max_polls != 0 && round + 1 == options.max_polls) break;
    std::this_thread::sleep_for(options.interval);
  }
}

}  // namespace clerms::flows
