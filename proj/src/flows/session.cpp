#include "clerms/flows/session.h"

#include "clerms/core/hash.h"

namespace clerms::flows {

namespace {

const Json& field(const Json& payload, const char* name) {
  auto it = payload.find(name);
  if (it == payload.end()) fail(Errc::MalformedFrame, std::string("missing payload field ") + name);
  return *it;
}

std::string string_field(const Json& payload, const char* name) {
  const Json& v = field(payload, name);
  if (!v.is_string()) fail(Errc::MalformedFrame, std::string(name) + " must be a string");
  return v.get<std::string>();
}

}  // namespace

std::optional<Message> ProtocolSession::handle(const Message& message) {
  // Agent-side error reports carry no reply.
  if (message.type == MessageType::ERROR) return std::nullopt;
  if (message.type == MessageType::RESULT_CHUNK) {
    try {
      on_chunk(message.payload);
    } catch (const Error& e) {
      auto flow = message.payload.is_object() && message.payload.contains("flow_id") &&
                          message.payload["flow_id"].is_string()
                      ? message.payload["flow_id"].get<std::string>()
                      : std::string();
      if (!flow.empty() && !chunk_failures_.count(flow))
        chunk_failures_[flow] = std::string(e.name()) + ": " + e.what();
    }
    return std::nullopt;
  }
  try {
    return dispatch(message);
  } catch (const Error& e) {
    return error_message(e.name(), e.what());
  } catch (const std::exception& e) {
    return error_message(to_string(Errc::MalformedFrame), e.what());
  }
}

const std::string& ProtocolSession::require_agent() const {
  if (!agent_id_) fail(Errc::UnknownAgent, "REGISTER first");
  return *agent_id_;
}

Message ProtocolSession::dispatch(const Message& message) {
  const Json& p = message.payload;
  switch (message.type) {
    case MessageType::REGISTER: {
      RegisterHello hello = parse_hello(p);
      AgentInfo info = backend_.agent_register(hello);
      agent_id_ = info.agent_id;
      return {MessageType::REGISTER, Json(info)};
    }
    case MessageType::POLL: {
      const std::string& id = require_agent();
      if (p.contains("agent_id") && p["agent_id"] != id) fail(Errc::Forbidden, "agent_id does not match session");
      Json flows = Json::array();
      for (const auto& f : backend_.agent_poll(id)) flows.push_back(f);
      return {MessageType::FLOW_ASSIGN, Json{{"flows", flows}}};
    }
    case MessageType::FLOW_DONE:
      return on_done(p);
    case MessageType::LOG_BATCH: {
      const std::string& id = require_agent();
      const Json& records = field(p, "records");
      if (!records.is_array()) fail(Errc::MalformedFrame, "records must be an array");
      std::vector<Json> batch(records.begin(), records.end());
      return {MessageType::LOG_BATCH, to_json(backend_.agent_logs(id, batch))};
    }
    default:
      fail(Errc::MalformedFrame, "unexpected message type " + std::string(name_of(message.type)));
  }
}

void ProtocolSession::on_chunk(const Json& p) {
  const std::string& agent = require_agent();
  std::string flow_id = string_field(p, "flow_id");
  FlowRequest flow = backend_.agent_flow(agent, flow_id);
  const auto* ff = std::get_if<FileFinderSpec>(&flow.kind);
  if (!ff || ff->action != FileAction::fetch) fail(Errc::InvalidState, "flow does not fetch content");

  std::string path = string_field(p, "path");
  const Json& off = field(p, "offset");
  if (!off.is_number_unsigned() && !(off.is_number_integer() && off.get<std::int64_t>() >= 0))
    fail(Errc::MalformedFrame, "offset must be a non-negative integer");
  const Json& last = field(p, "last");
  if (!last.is_boolean()) fail(Errc::MalformedFrame, "last must be a boolean");

  Transfer& t = transfers_[flow_id][path];
  if (t.finished) fail(Errc::MalformedFrame, "chunk after last for " + path);
  if (off.get<std::uint64_t>() != t.data.size()) fail(Errc::MalformedFrame, "out-of-order chunk for " + path);
  Bytes piece;
  if (!base64_decode(string_field(p, "data"), piece)) fail(Errc::MalformedFrame, "data is not base64");
  if (piece.size() > kFetchChunkSize) fail(Errc::FrameTooLarge, "chunk exceeds 1 MiB");
  t.data.insert(t.data.end(), piece.begin(), piece.end());
  if (!last.get<bool>()) return;

  t.finished = true;
  std::string reported = string_field(p, "sha256");
  const Json& size = field(p, "size");
  if (!size.is_number_integer() || size.get<std::uint64_t>() != t.data.size())
    fail(Errc::IntegrityViolation, "size mismatch for " + path);
  std::string actual = sha256_hex(t.data);
  if (actual != reported) fail(Errc::IntegrityViolation, "sha256 mismatch for " + path);
  std::string evidence_id = backend_.agent_fetched(flow, path, t.data);
  if (evidence_id != reported) fail(Errc::IntegrityViolation, "stored evidence id differs from agent hash for " + path);
  t.evidence_id = evidence_id;
  t.data.clear();
  t.data.shrink_to_fit();
}

Message ProtocolSession::on_done(const Json& p) {
  const std::string& agent = require_agent();
  FlowResult result = p.get<FlowResult>();
  FlowRequest flow = backend_.agent_flow(agent, result.flow_id);
  const auto* ff = std::get_if<FileFinderSpec>(&flow.kind);
  bool fetch = ff && ff->action == FileAction::fetch;

  auto failure = chunk_failures_.find(result.flow_id);
  if (failure != chunk_failures_.end()) {
    result.status = FlowStatus::failed;
    result.error = failure->second;
  } else if (fetch && result.status == FlowStatus::complete) {
    auto& transfers = transfers_[result.flow_id];
    for (auto& file : result.files) {
      auto it = transfers.find(file.path);
      if (it == transfers.end() || !it->second.evidence_id) {
        result.status = FlowStatus::failed;
        result.error = "IntegrityViolation: no content received for " + file.path;
        break;
      }
      if (file.sha256 != it->second.evidence_id) {
        result.status = FlowStatus::failed;
        result.error = "IntegrityViolation: reported hash differs for " + file.path;
        break;
      }
      file.evidence_id = it->second.evidence_id;
    }
  }
  if (result.status == FlowStatus::failed) {
    for (auto& file : result.files) file.evidence_id.reset();
  }
  transfers_.erase(result.flow_id);
  chunk_failures_.erase(result.flow_id);
  FlowResult stored = backend_.agent_done(agent, std::move(result));
  return {MessageType::FLOW_DONE, Json(stored)};
}

AgentServer::AgentServer(AgentBackend& backend, const std::string& host, std::uint16_t port)
    : backend_(backend), listener_(host, port) {}

AgentServer::~AgentServer() { stop(); }

void AgentServer::start() {
  if (running_.exchange(true)) return;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void AgentServer::stop() {
  if (!running_.exchange(false)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(mu_);
    for (auto& c : conns_) c->sock.shutdown();
  }
  reap(true);
}

void AgentServer::accept_loop() {
  while (running_) {
    Socket s = listener_.accept();
    if (!s.valid()) break;
    if (!running_) break;
    reap(false);
    std::lock_guard lock(mu_);
    auto conn = std::make_unique<Conn>();
    conn->sock = std::move(s);
    Conn& ref = *conn;
    conns_.push_back(std::move(conn));
    ref.thread = std::thread([this, &ref] { serve(ref); });
  }
}

void AgentServer::reap(bool all) {
  std::list<std::unique_ptr<Conn>> finished;
  {
    std::lock_guard lock(mu_);
    for (auto it = conns_.begin(); it != conns_.end();) {
      if (all || (*it)->done) {
        finished.push_back(std::move(*it));
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& c : finished)
    if (c->thread.joinable()) c->thread.join();
}

void AgentServer::serve(Conn& conn) {
  ProtocolSession session(backend_);
  FrameReader reader;
  try {
    for (;;) {
      std::optional<Message> msg;
      try {
        msg = read_message(conn.sock, reader);
      } catch (const Error& e) {
        if (e.code() == Errc::IoFailure) break;
        // Framing is lost after a bad frame; report and drop the connection.
        send_message(conn.sock, error_message(e.name(), e.what()));
        break;
      }
      if (!msg) break;
      if (auto reply = session.handle(*msg)) send_message(conn.sock, *reply);
    }
  } catch (const std::exception&) {
  }
  conn.sock.shutdown();
  conn.done = true;
}

}  // namespace clerms::flows
