// Eigen must precede httplib: <resolv.h> defines a _res macro.
#include "prognos/service.hpp"

#include <httplib.h>

#include "prognos/errors.hpp"

namespace prognos {

struct HttpServer::Impl {
  PredictionService& service;
  ServerOptions options;
  httplib::Server server;
  bool bound = false;
};

namespace {

void send(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

}  // namespace

HttpServer::HttpServer(PredictionService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& svc = impl_->service;
  auto& server = impl_->server;
  server.Get("/v1/health", [&svc](const httplib::Request&, httplib::Response& res) {
    send(res, svc.health());
  });
  server.Get("/v1/model", [&svc](const httplib::Request&, httplib::Response& res) {
    send(res, svc.model_info());
  });
  server.Post("/v1/predict", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.predict(req.body));
  });
  if (!impl_->options.ui_dir.empty() && !server.set_mount_point("/ui", impl_->options.ui_dir)) {
    throw Error(ErrorKind::Io, "cannot serve UI directory '" + impl_->options.ui_dir + "'");
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& o = impl_->options;
  int port = o.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(o.host);
    if (port < 0) throw Error(ErrorKind::Io, "cannot bind " + o.host);
  } else if (!impl_->server.bind_to_port(o.host, port)) {
    throw Error(ErrorKind::Io, "cannot bind " + o.host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return port;
}

void HttpServer::listen() {
  if (!impl_->bound) throw Error(ErrorKind::InvalidArgument, "server is not bound");
  impl_->server.listen_after_bind();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace prognos
