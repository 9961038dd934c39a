#pragma once

#include "clerms/api/service.h"

#include <memory>
#include <thread>

namespace httplib {
class Server;
}

namespace clerms::api {

// HTTP status for an error code: 400 validation, 401, 403, 404 unknown id,
// 409 state conflicts, 500 storage failures.
int http_status(Errc code);

// JSON API under /api/v1 in front of a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds an ephemeral port. Returns the bound port.
  int bind(const std::string& host, int port);
  void start();  // background thread
  void run();    // blocks until stop()
  void stop();
  int port() const { return port_; }

 private:
  void routes();

  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace clerms::api
