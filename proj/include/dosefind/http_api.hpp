#pragma once

#include <string>

namespace httplib {
class Server;
}

namespace dosefind::trialsvc {

class TrialService;

struct ApiOptions {
    std::string cors_origin;  // empty: no CORS headers
};

/// Registers the session REST endpoints on `server`:
///   GET  /healthz
///   POST /sessions                      -> 201 session
///   GET  /sessions/{id}                 -> session, recommendation, history
///   POST /sessions/{id}/cohorts         {"dlt": k, "cohort": i?} -> 200 | 409 | 422
///   GET  /sessions/{id}/whatif?dlt=k    -> preview
///   POST /sessions/{id}/finalize        -> selected MTD once complete, else 409
/// Errors are {"error": message} with 400, 404, 409, 422 or 500.
void mount_routes(httplib::Server& server, TrialService& service, const ApiOptions& options = {});

}  // namespace dosefind::trialsvc
