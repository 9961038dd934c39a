#include "clerms/api/service.h"
#include "clerms/domain/schema.h"
#include "clerms/domain/validation.h"
#include "clerms/flows/agent.h"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;

namespace {

using clerms::Json;
namespace api = clerms::api;

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    clerms::fail(clerms::Errc::InvalidFormat, std::string("malformed JSON: ") + e.what());
  }
}

std::string dump(const Json& j) { return clerms::canonical(j); }

// Service plus the config it was opened with. Tokens authenticate every call.
class PyService {
 public:
  PyService(const std::string& config_file, bool read_only, bool start_worker) {
    api::ServiceOptions o;
    o.config = api::load_config(config_file);
    o.read_only = read_only;
    o.start_worker = start_worker;
    service_ = std::make_unique<api::Service>(std::move(o));
  }

  const api::Principal& who(const std::string& token) const { return service_->config().authenticate(token); }
  api::Service& svc() { return *service_; }

 private:
  std::unique_ptr<api::Service> service_;
};

std::string verify_text(const clerms::custody::ChainStatus& st) {
  Json j = st.ok ? Json{{"status", "Ok"}, {"length", st.length}, {"head", st.head}}
                 : Json{{"status", "BrokenAt"}, {"seq", st.broken_at}, {"reason", st.reason}};
  return dump(j);
}

}  // namespace

PYBIND11_MODULE(_clerms, m) {
  m.doc() = "clerms core bindings; structured values cross as canonical JSON text";

  static py::exception<clerms::Error> error_type(m, "ClermsError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const clerms::Error& e) {
      // args = (code, message, detail JSON)
      py::tuple args = py::make_tuple(std::string(e.name()), std::string(e.what()), dump(e.detail()));
      PyErr_SetObject(error_type.ptr(), args.ptr());
    }
  });

  m.def("sha256_hex", [](py::bytes data) { return clerms::sha256_hex(std::string_view(data)); });

  m.def("validate_submission", [](const std::string& body) {
    clerms::RandomIdGenerator ids;
    clerms::SystemClock clock;
    auto r = clerms::domain::validate_submission(parse(body), ids, clock.now());
    Json out = {{"ok", r.ok()}, {"errors", r.errors}};
    if (r.request) out["request"] = *r.request;
    return dump(out);
  });
  m.def("request_schema", [] { return dump(clerms::domain::request_schema()); });
  m.def("transition_table", [] { return dump(clerms::workflow::transition_table()); });

  m.def(
      "compute_line_cost",
      [](const std::string& rate, const std::string& hours, std::int64_t quantity) {
        using namespace clerms::reporting;
        return format_cents(compute_line_cost(parse_decimal(rate, 6), parse_decimal(hours, 3), quantity));
      },
      py::arg("hourly_rate"), py::arg("hours"), py::arg("quantity") = 1);
  m.def(
      "compute_invoice",
      [](const std::string& body, const std::string& format) {
        using namespace clerms::reporting;
        Json b = parse(body);
        auto inv = compute_invoice(b.value("invoice_id", ""), b.value("case_id", ""),
                                   b.value("resource_lines", std::vector<ResourceLine>{}),
                                   b.value("labor_lines", std::vector<LaborLine>{}),
                                   b.contains("support_fees") ? decimal_from_json(b["support_fees"], 2) : 0);
        return export_invoice(inv, parse_export_format(format));
      },
      py::arg("body"), py::arg("format") = "json");

  m.def("encode_frame", [](const std::string& type, const std::string& payload) {
    auto t = clerms::enum_from<clerms::flows::MessageType>(type);
    if (!t) clerms::fail(clerms::Errc::MalformedFrame, "unknown message type " + type);
    auto bytes = clerms::flows::encode_frame({*t, parse(payload)});
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("decode_frame", [](py::bytes frame) {
    std::string_view v(frame);
    auto msg = clerms::flows::decode_frame(clerms::as_bytes(v));
    return py::make_tuple(std::string(clerms::name_of(msg.type)), dump(msg.payload));
  });

  py::class_<PyService>(m, "Service")
      .def(py::init<const std::string&, bool, bool>(), py::arg("config_file"), py::arg("read_only") = false,
           py::arg("start_worker") = false)
      .def("submit_request",
           [](PyService& s, const std::string& token, const std::string& body) {
             return dump(s.svc().submit_request(s.who(token), parse(body)));
           })
      .def("get_request",
           [](PyService& s, const std::string& token, const std::string& id) {
             return dump(s.svc().get_request(s.who(token), id));
           })
      .def("list_requests",
           [](PyService& s, const std::string& token) { return dump(s.svc().list_requests(s.who(token))); })
      .def("upload_document",
           [](PyService& s, const std::string& token, py::bytes content) {
             return dump(s.svc().upload_document(s.who(token), clerms::as_bytes(std::string_view(content))));
           })
      .def("receive_documents",
           [](PyService& s, const std::string& token, const std::string& id, const std::vector<std::string>& refs) {
             return dump(s.svc().receive_documents(s.who(token), id, refs));
           })
      .def("begin_evaluation",
           [](PyService& s, const std::string& token, const std::string& id) {
             return dump(s.svc().begin_evaluation(s.who(token), id));
           })
      .def("record_decision",
           [](PyService& s, const std::string& token, const std::string& id, const std::string& body) {
             return dump(s.svc().record_decision(s.who(token), id, parse(body)));
           })
      .def(
          "escalate",
          [](PyService& s, const std::string& token, const std::string& id, bool override_objective) {
            return dump(s.svc().escalate(s.who(token), id, override_objective));
          },
          py::arg("token"), py::arg("request_id"), py::arg("override") = false)
      .def("apply_action",
           [](PyService& s, const std::string& token, const std::string& id, const std::string& summary) {
             return dump(s.svc().apply_action(s.who(token), id, summary));
           })
      .def("issue_response",
           [](PyService& s, const std::string& token, const std::string& id, const std::string& body) {
             return dump(s.svc().issue_response(s.who(token), id, body, false));
           })
      .def("read_case",
           [](PyService& s, const std::string& token, const std::string& id) {
             return dump(s.svc().read_case(s.who(token), id));
           })
      .def("add_report",
           [](PyService& s, const std::string& token, const std::string& case_id, const std::string& doc_id,
              const std::string& kind) {
             auto k = clerms::enum_from<clerms::cases::DocumentKind>(kind);
             if (!k) clerms::fail(clerms::Errc::InvalidFormat, "unknown document kind " + kind);
             return dump(s.svc().add_report(s.who(token), case_id, doc_id, *k));
           })
      .def("close_case",
           [](PyService& s, const std::string& token, const std::string& id) {
             return dump(s.svc().close_case(s.who(token), id));
           })
      .def("launch_flow",
           [](PyService& s, const std::string& token, const std::string& body) {
             return dump(s.svc().launch_flow(s.who(token), parse(body)));
           })
      .def("get_flow",
           [](PyService& s, const std::string& token, const std::string& id) {
             return dump(s.svc().get_flow(s.who(token), id));
           })
      .def("list_agents", [](PyService& s, const std::string& token) { return dump(s.svc().list_agents(s.who(token))); })
      .def(
          "query_logs",
          [](PyService& s, const std::string& token, std::optional<std::string> client_ip,
             std::optional<std::string> contains) {
            clerms::flows::LogFilter f;
            f.client_ip = std::move(client_ip);
            f.substring = std::move(contains);
            return dump(s.svc().query_logs(s.who(token), f));
          },
          py::arg("token"), py::arg("client_ip") = py::none(), py::arg("contains") = py::none())
      .def(
          "transparency_report",
          [](PyService& s, const std::string& token, const std::string& from, const std::string& to,
             const std::string& format) {
            auto report = s.svc().transparency_report(
                s.who(token), {clerms::Timestamp::from_iso(from), clerms::Timestamp::from_iso(to)}, std::nullopt);
            return clerms::reporting::export_report(report, clerms::reporting::parse_export_format(format));
          },
          py::arg("token"), py::arg("from_"), py::arg("to"), py::arg("format") = "json")
      .def(
          "compute_invoice",
          [](PyService& s, const std::string& token, const std::string& body, const std::string& format) {
            auto inv = s.svc().compute_invoice(s.who(token), parse(body));
            return clerms::reporting::export_invoice(inv, clerms::reporting::parse_export_format(format));
          },
          py::arg("token"), py::arg("body"), py::arg("format") = "json")
      .def("verify_evidence",
           [](PyService& s, const std::string& evidence_id) {
             return verify_text(s.svc().evidence().verify_chain(evidence_id));
           })
      .def(
          "run_agent",
          [](PyService& s, const std::string& root, const std::string& processes_file, const std::string& logs_file,
             int polls, const std::string& agent_id) {
            // In-process simulated agent talking framed messages to this service.
            clerms::flows::AgentConfig cfg;
            cfg.root = root;
            if (!agent_id.empty()) cfg.agent_id = agent_id;
            if (!processes_file.empty()) cfg.processes = clerms::flows::load_process_table(processes_file);
            if (!logs_file.empty()) cfg.logs = clerms::flows::load_log_records(logs_file);
            clerms::flows::SimulatedAgent agent(cfg, s.svc().clock());
            clerms::flows::LoopbackTransport transport(s.svc());
            Json results = Json::array();
            clerms::flows::AgentRunOptions opts;
            opts.max_polls = polls;
            opts.interval = std::chrono::milliseconds(0);
            opts.on_result = [&](const clerms::flows::FlowResult& r) { results.push_back(r); };
            clerms::flows::run_agent(agent, transport, opts);
            return dump(Json{{"agent_id", agent.info()->agent_id}, {"results", results}});
          },
          py::arg("root"), py::arg("processes_file") = "", py::arg("logs_file") = "", py::arg("polls") = 1,
          py::arg("agent_id") = "")
      .def("state_digest", [](PyService& s) { return s.svc().state_digest(); })
      .def("last_seq", [](PyService& s) { return s.svc().last_seq(); });
}
