#pragma once

// Binds Service to a loopback HTTP listener.

#include <charconv>
#include <cstdlib>
#include <string>

// Eigen goes first: <resolv.h>, reached through httplib, defines _res.
#include "sld/service.hpp"

#include <httplib.h>

namespace sld {

inline constexpr int kDefaultPort = 8765;
inline constexpr const char* kPortVariable = "SLD_PORT";

/// Port from SLD_PORT, else the default.
inline int port_from_environment() {
    const char* raw = std::getenv(kPortVariable);
    if (!raw || !*raw) return kDefaultPort;
    const std::string text(raw);
    int port = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), port);
    if (ec != std::errc{} || p != text.data() + text.size() || port < 0 || port > 65535)
        fail(ErrorCode::BadRequest, std::string(kPortVariable) + " must be a port number");
    return port;
}

inline void mount(httplib::Server& server, Service& service) {
    auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
        const auto out = service.handle(req.method, req.path, req.body);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    const std::string any = R"(/.*)";
    server.Get(any, handler);
    server.Post(any, handler);
    server.Put(any, handler);
    server.Delete(any, handler);
}

}  // namespace sld
