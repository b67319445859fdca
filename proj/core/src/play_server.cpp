#include "cirl/play_server.hpp"

#include <httplib.h>

namespace cirl {

using nlohmann::json;

struct PlayServer::Impl {
    SessionManager& sessions;
    httplib::Server server;

    explicit Impl(SessionManager& s) : sessions(s) { routes(); }

    static void send(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    template <class Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const ServiceError& e) {
            send(res, e.http_status(), e.to_json());
        } catch (const json::exception& e) {
            send(res, 400, {{"code", "bad-request"}, {"message", e.what()}});
        } catch (const UsageError& e) {
            send(res, 400, {{"code", "bad-request"}, {"message", e.what()}});
        } catch (const std::exception& e) {
            send(res, 500, {{"code", "internal"}, {"message", e.what()}});
        }
    }

    static json body_of(const httplib::Request& req) {
        if (req.body.empty()) return json::object();
        try {
            return json::parse(req.body);
        } catch (const json::exception& e) {
            throw ServiceError(400, "bad-request", std::string("request body is not JSON: ") + e.what());
        }
    }

    void routes() {
        server.Get("/scenarios", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] { send(res, 200, sessions.scenarios()); });
        });
        server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send(res, 201, sessions.create_session(CreateRequest::from_json(body_of(req)))); });
        });
        server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send(res, 200, sessions.get_session(req.matches[1])); });
        });
        server.Post(R"(/sessions/([^/]+)/action)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto body = body_of(req);
                if (!body.is_object() || !body.contains("action"))
                    throw ServiceError(400, "bad-request", "body needs an 'action' field");
                for (const auto& [key, value] : body.items())
                    if (key != "action" && key != "turn") throw ServiceError(400, "bad-request", "unknown field '" + key + "'");
                std::optional<int> turn;
                if (body.contains("turn")) turn = body.at("turn").get<int>();
                send(res, 200, sessions.submit_human_action(req.matches[1], body.at("action"), turn));
            });
        });
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) send(res, res.status, {{"code", "not-found"}, {"message", "no such endpoint"}});
        });
    }
};

PlayServer::PlayServer(SessionManager& sessions) : impl_(std::make_unique<Impl>(sessions)) {}
PlayServer::~PlayServer() { stop(); }

int PlayServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool PlayServer::serve() { return impl_->server.listen_after_bind(); }
void PlayServer::stop() { impl_->server.stop(); }
bool PlayServer::running() const { return impl_->server.is_running(); }

}  // namespace cirl
