#pragma once
// HTTP session service: one session per loaded scene, driven by prompts.
//
// Routes (all JSON, served under /v1; the unprefixed forms are accepted too):
//   POST /scenes                   create a session from a scene document
//   GET  /scenes/{id}              session summary
//   POST /scenes/{id}/prompts      {"text", "provider"} → updated posteriors, new field version
//   GET  /scenes/{id}/field        current potential grid
//   POST /scenes/{id}/plan         {"strategy", "params"} → path
//   GET  /scenes/{id}/coefficients coefficient store
//   POST /scenes/{id}/reset        drop evidence, posteriors back to priors
//   GET  /healthz

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptnav/bayes.hpp"
#include "promptnav/field.hpp"
#include "promptnav/metrics.hpp"
#include "promptnav/scene.hpp"
#include "promptnav/sentiment.hpp"

namespace httplib {
class Server;
}

namespace promptnav::service {

struct Response {
    int status = 200;
    nlohmann::json body;
};

/// Builds a provider for a request's "provider" field ("lexicon" or "remote").
using ProviderFactory = std::function<std::unique_ptr<SentimentProvider>(const std::string& kind)>;

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8787;
    std::optional<std::filesystem::path> persist_dir;
    std::string default_provider = "lexicon";
    ProviderConfig remote = ProviderConfig::from_env(ProviderKind::Remote);
    Lexicon lexicon = Lexicon::defaults();
    FieldInjection injection;
};

/// Parses "host:port".
std::pair<std::string, int> parse_address(const std::string& addr);

class SessionService {
public:
    explicit SessionService(ServiceConfig config, ProviderFactory factory = {});
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    /// Route one request. Never throws; errors become 4xx/5xx bodies `{"error": ...}`.
    Response handle(const std::string& method, const std::string& path, const std::string& body);

    /// Digest of everything a mutation may change in a session; nullopt for unknown ids.
    std::optional<std::string> state_hash(const std::string& session_id) const;

    std::vector<std::string> session_ids() const;

    /// Bind and serve until stop(). Port 0 picks a free port. Returns false if binding fails.
    bool listen(const std::function<void(int)>& on_bound = {});
    void stop();

private:
    struct Session {
        mutable std::mutex mutex;
        std::string id;
        SceneSpec spec;
        OccupancyGrid grid;
        CoefficientStore store;
        PotentialGrid field;
        std::uint64_t field_version = 0;
        std::vector<nlohmann::json> history;
    };

    // Everything a mutation may replace; committed in one assignment.
    struct SessionState {
        CoefficientStore store;
        PotentialGrid field;
        std::uint64_t field_version = 0;
        std::vector<nlohmann::json> history;
    };

    Response create_session(const nlohmann::json& body);
    Response get_session(Session& s) const;
    Response post_prompt(Session& s, const nlohmann::json& body);
    Response get_field(Session& s) const;
    Response post_plan(Session& s, const nlohmann::json& body);
    Response get_coefficients(Session& s) const;
    Response post_reset(Session& s);

    std::shared_ptr<Session> find(const std::string& id) const;
    std::unique_ptr<SentimentProvider> provider(const std::string& kind) const;
    void commit(Session& s, SessionState next);
    void persist(const Session& s, const SessionState& state) const;
    void load_persisted();
    std::string new_id();

    ServiceConfig config_;
    ProviderFactory factory_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t id_counter_ = 0;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace promptnav::service
