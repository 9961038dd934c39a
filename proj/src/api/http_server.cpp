#include "clerms/api/http_server.h"

#include "clerms/domain/schema.h"

#include <httplib.h>

namespace clerms::api {

namespace {

using Req = httplib::Request;
using Res = httplib::Response;

void send_json(Res& res, int status, const Json& body) {
  res.status = status;
  res.set_content(canonical(body), "application/json");
}

Json parse_body(const Req& req) {
  if (req.body.empty()) return Json::object();
  try {
    Json j = Json::parse(req.body);
    if (!j.is_object()) fail(Errc::BadRequest, "body must be a JSON object");
    return j;
  } catch (const Json::parse_error& e) {
    fail(Errc::BadRequest, std::string("malformed JSON body: ") + e.what());
  }
}

std::string bearer(const Req& req) {
  std::string h = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (h.rfind(kPrefix, 0) != 0) return {};
  return h.substr(kPrefix.size());
}

std::optional<std::string> param(const Req& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

bool flag(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return false;
  if (!it->is_boolean()) fail(Errc::InvalidFormat, std::string(key) + " must be a boolean", Json{{"field", key}});
  return it->get<bool>();
}

std::string text(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return {};
  if (!it->is_string()) fail(Errc::InvalidFormat, std::string(key) + " must be a string", Json{{"field", key}});
  return it->get<std::string>();
}

}  // namespace

int http_status(Errc code) {
  switch (code) {
    case Errc::Unauthenticated:
      return 401;
    case Errc::Forbidden:
    case Errc::InsufficientAuthorization:
      return 403;
    case Errc::UnknownRequest:
    case Errc::UnknownDocument:
    case Errc::NotFound:
    case Errc::UnknownAgent:
    case Errc::UnknownFlow:
    case Errc::UnknownTask:
    case Errc::UnknownRecipient:
    case Errc::UnknownTicket:
      return 404;
    case Errc::DuplicateRequest:
    case Errc::InvalidState:
    case Errc::NotEligible:
    case Errc::Destroyed:
    case Errc::ChainBroken:
    case Errc::AfterDestruction:
    case Errc::EmptyCase:
    case Errc::CaseClosed:
    case Errc::InvalidRequestState:
    case Errc::DuplicateCase:
    case Errc::OpenTasks:
    case Errc::MissingForensicReport:
      return 409;
    case Errc::FrameTooLarge:
      return 413;
    case Errc::StorageFull:
      return 507;
    case Errc::IoFailure:
    case Errc::IntegrityViolation:
    case Errc::CorruptLog:
    case Errc::AgentIoError:
      return 500;
    default:
      return 400;
  }
}

HttpServer::HttpServer(Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  server_->set_payload_max_length(64u * 1024u * 1024u);
  server_->set_exception_handler([](const Req&, Res& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_json(res, http_status(e.code()), e.to_json());
    } catch (const Json::exception& e) {
      send_json(res, 400, Json{{"error", "InvalidFormat"}, {"message", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, Json{{"error", "IoFailure"}, {"message", e.what()}});
    }
  });
  server_->set_error_handler([](const Req&, Res& res) {
    if (res.status == 404 && res.body.empty())
      send_json(res, 404, Json{{"error", "NotFound"}, {"message", "no such endpoint"}});
  });
  routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else if (server_->bind_to_port(host, port)) {
    port_ = port;
  } else {
    port_ = -1;
  }
  if (port_ <= 0) fail(Errc::IoFailure, "cannot bind HTTP port " + std::to_string(port) + " on " + host);
  return port_;
}

void HttpServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void HttpServer::routes() {
  auto& s = *server_;
  Service& svc = service_;
  const std::string api = "/api/v1";
  auto who = [&svc](const Req& req) -> const Principal& { return svc.config().authenticate(bearer(req)); };

  // Public documents.
  s.Get(api + "/health", [](const Req&, Res& res) { send_json(res, 200, Json{{"status", "ok"}}); });
  s.Get(api + "/schema/request",
        [](const Req&, Res& res) { send_json(res, 200, domain::request_schema()); });
  s.Get(api + "/workflow/transitions",
        [](const Req&, Res& res) { send_json(res, 200, workflow::transition_table()); });

  // Requests.
  s.Post(api + "/requests", [&svc, who](const Req& req, Res& res) {
    send_json(res, 201, svc.submit_request(who(req), parse_body(req)));
  });
  s.Get(api + "/requests", [&svc, who](const Req& req, Res& res) { send_json(res, 200, svc.list_requests(who(req))); });
  s.Get(api + R"(/requests/([^/]+))", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.get_request(who(req), req.matches[1]));
  });
  s.Get(api + R"(/requests/([^/]+)/transitions)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.successors(who(req), req.matches[1]));
  });
  s.Post(api + R"(/requests/([^/]+)/documents)", [&svc, who](const Req& req, Res& res) {
    Json body = parse_body(req);
    if (!body.contains("document_refs")) fail(Errc::MissingField, "document_refs", Json{{"field", "document_refs"}});
    send_json(res, 200,
              svc.receive_documents(who(req), req.matches[1], body["document_refs"].get<std::vector<std::string>>()));
  });
  s.Post(api + R"(/requests/([^/]+)/evaluation)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.begin_evaluation(who(req), req.matches[1]));
  });
  s.Post(api + R"(/requests/([^/]+)/provisional)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.apply_provisional(who(req), req.matches[1], text(parse_body(req), "measure")));
  });
  s.Post(api + R"(/requests/([^/]+)/preservation/extend)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.extend_preservation(who(req), req.matches[1]));
  });
  s.Post(api + R"(/requests/([^/]+)/decision)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.record_decision(who(req), req.matches[1], parse_body(req)));
  });
  s.Post(api + R"(/requests/([^/]+)/reopen)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.reopen_evaluation(who(req), req.matches[1]));
  });
  s.Post(api + R"(/requests/([^/]+)/escalate)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.escalate(who(req), req.matches[1], flag(parse_body(req), "override")));
  });
  s.Post(api + R"(/requests/([^/]+)/action)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.apply_action(who(req), req.matches[1], text(parse_body(req), "summary")));
  });
  s.Post(api + R"(/requests/([^/]+)/response)", [&svc, who](const Req& req, Res& res) {
    Json body = parse_body(req);
    send_json(res, 200,
              svc.issue_response(who(req), req.matches[1], text(body, "body"),
                                 flag(body, "suppress_target_notification")));
  });
  s.Post(api + R"(/requests/([^/]+)/acknowledge)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.acknowledge(who(req), req.matches[1]));
  });

  // Documents (legal scans, reports).
  s.Post(api + "/documents", [&svc, who](const Req& req, Res& res) {
    const Principal& p = who(req);
    Bytes content;
    if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
      Json body = parse_body(req);
      if (!base64_decode(text(body, "content_b64"), content))
        fail(Errc::InvalidFormat, "content_b64 is not base64", Json{{"field", "content_b64"}});
    } else {
      content.assign(req.body.begin(), req.body.end());
    }
    send_json(res, 201, svc.upload_document(p, content));
  });

  // Tickets.
  s.Get(api + R"(/tickets/([^/]+))", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.get_ticket(who(req), req.matches[1]));
  });
  s.Get(api + R"(/tickets/([^/]+)/messages)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.get_ticket(who(req), req.matches[1])["messages"]);
  });
  s.Post(api + R"(/tickets/([^/]+)/messages)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 201, svc.post_ticket_message(who(req), req.matches[1], text(parse_body(req), "body")));
  });
  s.Get(api + "/notifications", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.notifications(who(req)));
  });

  // Cases.
  s.Get(api + R"(/cases/([^/]+))", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.read_case(who(req), req.matches[1]));
  });
  s.Get(api + R"(/cases/([^/]+)/dossier)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.dossier(who(req), req.matches[1]));
  });
  s.Post(api + R"(/cases/([^/]+)/evidence)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.link_evidence(who(req), req.matches[1], text(parse_body(req), "evidence_id")));
  });
  s.Post(api + R"(/cases/([^/]+)/reports)", [&svc, who](const Req& req, Res& res) {
    Json body = parse_body(req);
    auto kind = enum_from<cases::DocumentKind>(text(body, "kind"));
    if (!kind) fail(Errc::InvalidFormat, "unknown document kind", Json{{"field", "kind"}});
    send_json(res, 201, svc.add_report(who(req), req.matches[1], text(body, "doc_id"), *kind));
  });
  s.Post(api + R"(/cases/([^/]+)/tasks)", [&svc, who](const Req& req, Res& res) {
    Json body = parse_body(req);
    auto role = enum_from<domain::Role>(text(body, "assignee_role"));
    if (!role) fail(Errc::InvalidFormat, "unknown assignee_role", Json{{"field", "assignee_role"}});
    std::optional<Timestamp> due;
    if (auto d = text(body, "due"); !d.empty()) due = Timestamp::from_iso(d);
    send_json(res, 201, svc.assign_task(who(req), req.matches[1], text(body, "description"), *role, due));
  });
  s.Post(api + R"(/cases/([^/]+)/tasks/([^/]+)/(complete|cancel))", [&svc, who](const Req& req, Res& res) {
    auto outcome = req.matches[3] == "complete" ? cases::TaskStatus::done : cases::TaskStatus::cancelled;
    send_json(res, 200, svc.finish_task(who(req), req.matches[1], req.matches[2], outcome));
  });
  s.Post(api + R"(/cases/([^/]+)/close)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.close_case(who(req), req.matches[1]));
  });
  s.Post(api + R"(/cases/([^/]+)/export)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 201, svc.export_case(who(req), req.matches[1], text(parse_body(req), "recipient")));
  });

  // Reporting.
  s.Get(api + "/reports/transparency", [&svc, who](const Req& req, Res& res) {
    const Principal& p = who(req);
    auto from = param(req, "from");
    auto to = param(req, "to");
    if (!from || !to) fail(Errc::MissingField, "from and to are required");
    auto format = reporting::parse_export_format(param(req, "format").value_or("json"));
    auto report = svc.transparency_report(p, {Timestamp::from_iso(*from), Timestamp::from_iso(*to)},
                                          param(req, "previous"));
    res.status = 200;
    if (format == reporting::ExportFormat::csv)
      res.set_content(reporting::export_report(report, format), "text/csv");
    else
      res.set_content(reporting::export_report(report, format), "application/json");
  });
  s.Post(api + "/invoices", [&svc, who](const Req& req, Res& res) {
    const Principal& p = who(req);
    Json body = parse_body(req);
    auto format = reporting::parse_export_format(text(body, "format").empty() ? "json" : text(body, "format"));
    auto inv = svc.compute_invoice(p, body);
    res.status = 201;
    res.set_content(reporting::export_invoice(inv, format),
                    format == reporting::ExportFormat::csv ? "text/csv" : "application/json");
  });

  // Collection.
  s.Get(api + "/agents", [&svc, who](const Req& req, Res& res) { send_json(res, 200, svc.list_agents(who(req))); });
  s.Post(api + "/flows", [&svc, who](const Req& req, Res& res) {
    send_json(res, 201, svc.launch_flow(who(req), parse_body(req)));
  });
  s.Get(api + R"(/flows/([^/]+))", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.get_flow(who(req), req.matches[1]));
  });
  s.Get(api + "/logs/query", [&svc, who](const Req& req, Res& res) {
    const Principal& p = who(req);
    flows::LogFilter f;
    f.client_ip = param(req, "client_ip");
    f.substring = param(req, "contains");
    auto from = param(req, "from");
    auto to = param(req, "to");
    if (from || to) {
      if (!from || !to) fail(Errc::MissingField, "from and to must be given together");
      f.time_range = std::pair{Timestamp::from_iso(*from), Timestamp::from_iso(*to)};
    }
    send_json(res, 200, svc.query_logs(p, f));
  });

  // Evidence.
  s.Get(api + R"(/evidence/([0-9a-f]{64}))", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.evidence_info(who(req), req.matches[1]));
  });
  s.Get(api + R"(/evidence/([0-9a-f]{64})/verify)", [&svc, who](const Req& req, Res& res) {
    auto st = svc.verify_evidence(who(req), req.matches[1]);
    Json body = st.ok ? Json{{"status", "Ok"}, {"length", st.length}, {"head", st.head}}
                      : Json{{"status", "BrokenAt"}, {"seq", st.broken_at}, {"reason", st.reason}};
    send_json(res, 200, body);
  });
  s.Get(api + R"(/evidence/([0-9a-f]{64})/chain)", [&svc, who](const Req& req, Res& res) {
    send_json(res, 200, svc.evidence_chain(who(req), req.matches[1]));
  });
  s.Post(api + R"(/evidence/([0-9a-f]{64})/destroy)", [&svc, who](const Req& req, Res& res) {
    const Principal& p = who(req);
    Json body = parse_body(req);
    auto signers = body.value("signers", std::vector<std::string>{});
    send_json(res, 200, svc.destroy_evidence(p, req.matches[1], signers, text(body, "reason")));
  });

  s.Get(api + "/state", [&svc, who](const Req& req, Res& res) {
    Json summary = svc.state_summary(who(req));
    summary["digest"] = svc.state_digest();
    send_json(res, 200, summary);
  });
}

}  // namespace clerms::api
