// SPDX-License-Identifier: Apache-2.0

#include <charconv>

#include "httplib.h"

#include "arguagent/service.hpp"

namespace arguagent::service {

struct HttpServer::Impl {
  Impl(ClassService& s, HttpOptions o) : service(s), options(std::move(o)) {}
  ClassService& service;
  HttpOptions options;
  httplib::Server server;
  int port = -1;
};

namespace {

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_content(reply.body.dump(), "application/json");
}

Reply bad_request(const std::string& message) {
  return Reply{400, Json{{"error", "ParseError"}, {"message", message}}};
}

std::optional<Json> body_json(const httplib::Request& req, httplib::Response& res) {
  if (req.body.empty()) return Json::object();
  auto j = Json::parse(req.body, nullptr, false);
  if (j.is_discarded()) {
    send(res, bad_request("request body is not valid JSON"));
    return std::nullopt;
  }
  return j;
}

template <typename T>
std::optional<T> number_param(const httplib::Request& req, const char* name, httplib::Response& res,
                              bool& ok) {
  ok = true;
  if (!req.has_param(name)) return std::nullopt;
  const auto text = req.get_param_value(name);
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    send(res, bad_request(std::string("query parameter '") + name + "' must be a non-negative integer"));
    ok = false;
    return std::nullopt;
  }
  return value;
}

}  // namespace

HttpServer::HttpServer(ClassService& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;
  const std::string token = impl_->options.auth_token;

  srv.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
    if (token.empty() || !req.path.starts_with("/classes")) return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") == "Bearer " + token) {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    res.status = 401;
    res.set_header("WWW-Authenticate", "Bearer");
    res.set_content(Json{{"error", "Unauthorized"}, {"message", "missing or wrong bearer token"}}.dump(),
                    "application/json");
    return httplib::Server::HandlerResponse::Handled;
  });

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  srv.Post("/classes", [&svc](const httplib::Request& req, httplib::Response& res) {
    if (const auto body = body_json(req, res)) send(res, svc.ingest(*body));
  });
  srv.Get("/classes", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.list()); });
  srv.Get(R"(/classes/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.get(req.matches[1]));
  });
  srv.Post(R"(/classes/([^/]+)/score)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.score(req.matches[1], req.get_param_value("backend")));
  });
  srv.Post(R"(/classes/([^/]+)/cluster)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.cluster(req.matches[1], req.get_param_value("backend")));
  });
  srv.Post(R"(/classes/([^/]+)/groups)", [&svc](const httplib::Request& req, httplib::Response& res) {
    bool ok = false;
    const auto seed = number_param<std::uint64_t>(req, "seed", res, ok);
    if (!ok) return;
    const auto size = number_param<int>(req, "size", res, ok);
    if (!ok) return;
    send(res, svc.groups(req.matches[1], seed, size));
  });
  srv.Patch(R"(/classes/([^/]+)/assessments/([^/]+))",
            [&svc](const httplib::Request& req, httplib::Response& res) {
              if (const auto body = body_json(req, res)) {
                send(res, svc.patch_assessment(req.matches[1], req.matches[2], *body));
              }
            });
  srv.Patch(R"(/classes/([^/]+)/groups)", [&svc](const httplib::Request& req, httplib::Response& res) {
    if (const auto body = body_json(req, res)) send(res, svc.patch_groups(req.matches[1], *body));
  });
  srv.Post(R"(/classes/([^/]+)/finalize)", [&svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.finalize(req.matches[1]));
  });

  if (!impl_->options.static_dir.empty() && !srv.set_mount_point("/", impl_->options.static_dir.string())) {
    throw Error(ErrorKind::Io, "static directory '" + impl_->options.static_dir.string() + "' does not exist");
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->port >= 0) return impl_->port;
  if (impl_->options.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->options.host);
  } else if (impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
    impl_->port = impl_->options.port;
  }
  if (impl_->port < 0) {
    throw Error(ErrorKind::Io, "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  return impl_->port;
}

void HttpServer::listen() {
  bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace arguagent::service
