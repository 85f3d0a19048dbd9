#include "dosefind/http_api.hpp"

#include <httplib.h>

#include "dosefind/trialsvc.hpp"

namespace dosefind::trialsvc {

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

// Maps service exceptions onto status codes.
template <class F>
void guarded(httplib::Response& res, F&& handler) {
    try {
        handler();
    } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
    } catch (const ConflictError& e) {
        send_error(res, 409, e.what());
    } catch (const ValidationError& e) {
        send_error(res, 422, e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, std::string("malformed request: ") + e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, e.what());
    }
}

int parse_int_param(const std::string& text, const char* name) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(text, &used);
    } catch (const std::exception&) {
        throw ValidationError(std::string(name) + " must be an integer");
    }
    if (used != text.size()) {
        throw ValidationError(std::string(name) + " must be an integer");
    }
    return v;
}

}  // namespace

void mount_routes(httplib::Server& server, TrialService& service, const ApiOptions& options) {
    if (!options.cors_origin.empty()) {
        server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                    {"Access-Control-Allow-Headers", "Content-Type"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.status = 204;
        });
    }

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });

    server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = json::parse(req.body);
            send_json(res, 201, session_to_json(*service.create_session(body)));
        });
    });

    server.Get(R"(/sessions/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, session_to_json(*service.get(req.matches[1]))); });
    });

    server.Post(R"(/sessions/([^/]+)/cohorts)",
                [&service](const httplib::Request& req, httplib::Response& res) {
                    guarded(res, [&] {
                        const json body = json::parse(req.body);
                        if (!body.is_object()) {
                            throw ValidationError("request body must be a JSON object");
                        }
                        for (const auto& [key, value] : body.items()) {
                            if (key != "dlt" && key != "cohort") {
                                throw ValidationError(key + ": unknown field");
                            }
                        }
                        if (!body.contains("dlt") || !body["dlt"].is_number_integer()) {
                            throw ValidationError("dlt: expected an integer");
                        }
                        std::optional<int> cohort;
                        if (body.contains("cohort")) {
                            if (!body["cohort"].is_number_integer()) {
                                throw ValidationError("cohort: expected an integer");
                            }
                            cohort = body["cohort"].get<int>();
                        }
                        const auto s = service.record_cohort(req.matches[1], body["dlt"].get<int>(), cohort);
                        send_json(res, 200, session_to_json(*s));
                    });
                });

    server.Get(R"(/sessions/([^/]+)/whatif)",
               [&service](const httplib::Request& req, httplib::Response& res) {
                   guarded(res, [&] {
                       if (!req.has_param("dlt")) {
                           throw ValidationError("dlt query parameter is required");
                       }
                       const int dlt = parse_int_param(req.get_param_value("dlt"), "dlt");
                       send_json(res, 200, preview_to_json(service.whatif(req.matches[1], dlt)));
                   });
               });

    server.Post(R"(/sessions/([^/]+)/finalize)",
                [&service](const httplib::Request& req, httplib::Response& res) {
                    guarded(res, [&] {
                        const std::string id = req.matches[1];
                        const auto mtd = service.finalize(id);
                        const auto s = service.get(id);
                        send_json(res, 200,
                                  {{"id", id},
                                   {"selected_mtd", mtd ? json(*mtd) : json(nullptr)},
                                   {"stopped_early", s->stopped_early}});
                    });
                });
}

}  // namespace dosefind::trialsvc
