#include "promptnav/service.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "promptnav/errors.hpp"
#include "promptnav/planner.hpp"

namespace promptnav::service {

namespace {

using nlohmann::json;

class BadRequest : public Error {
public:
    using Error::Error;
};

Response error(int status, const std::string& message, const std::string& raw = {}) {
    json body = {{"error", message}};
    if (!raw.empty()) body["provider_reply"] = raw;
    return {status, body};
}

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

json parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw BadRequest("request body must be a JSON object");
    return doc;
}

json path_report(const PathResult& path, const OccupancyGrid& grid, std::uint64_t field_version) {
    json out = path_to_json(path, grid.resolution());
    const auto mdo = min_dist_to_obstacles(path, grid);
    out["mdo_m"] = mdo ? json(*mdo) : json(nullptr);
    out["field_version"] = field_version;
    return out;
}

}  // namespace

std::pair<std::string, int> parse_address(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0) throw Error("address must be host:port, got \"" + addr + "\"");
    const std::string host = addr.substr(0, colon);
    const std::string port_text = addr.substr(colon + 1);
    char* end = nullptr;
    const long port = std::strtol(port_text.c_str(), &end, 10);
    if (port_text.empty() || *end != '\0' || port < 0 || port > 65535) {
        throw Error("invalid port in \"" + addr + "\"");
    }
    return {host, static_cast<int>(port)};
}

SessionService::SessionService(ServiceConfig config, ProviderFactory factory)
    : config_(std::move(config)), factory_(std::move(factory)), server_(std::make_unique<httplib::Server>()) {
    if (!factory_) {
        factory_ = [this](const std::string& kind) -> std::unique_ptr<SentimentProvider> {
            const ProviderKind k = provider_kind_from_string(kind);
            if (k == ProviderKind::Lexicon) return std::make_unique<LexiconProvider>(config_.lexicon);
            return make_provider(config_.remote);
        };
    }
    if (config_.persist_dir) {
        std::filesystem::create_directories(*config_.persist_dir);
        load_persisted();
    }
}

SessionService::~SessionService() { stop(); }

std::unique_ptr<SentimentProvider> SessionService::provider(const std::string& kind) const {
    const std::string chosen = kind.empty() ? config_.default_provider : kind;
    if (chosen != "lexicon" && chosen != "remote") throw BadRequest("unknown provider \"" + chosen + "\"");
    return factory_(chosen);
}

std::string SessionService::new_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%016llx%04llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(++id_counter_ & 0xffff));
    return buf;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> SessionService::session_ids() const {
    std::shared_lock lock(sessions_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
}

std::optional<std::string> SessionService::state_hash(const std::string& session_id) const {
    auto s = find(session_id);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mutex);
    std::uint64_t h = fnv1a(store_to_json(s->store).dump());
    h = fnv1a(std::to_string(s->field_version), h);
    for (const json& entry : s->history) h = fnv1a(entry.dump(), h);
    const auto values = s->field.values();
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(values.data()), values.size_bytes()), h);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

Response SessionService::handle(const std::string& method, const std::string& raw_path, const std::string& body) {
    std::string path = raw_path;
    if (path.rfind("/v1/", 0) == 0) path = path.substr(3);
    while (path.size() > 1 && path.back() == '/') path.pop_back();

    static const std::regex session_route(R"(^/scenes/([^/]+)(/[a-z]+)?$)");
    try {
        if (path == "/healthz") {
            if (method != "GET") return error(405, "method not allowed");
            return {200, {{"status", "ok"}}};
        }
        if (path == "/scenes") {
            if (method != "POST") return error(405, "method not allowed");
            return create_session(parse_body(body));
        }

        std::smatch m;
        if (!std::regex_match(path, m, session_route)) return error(404, "no route for " + raw_path);
        auto session = find(m[1].str());
        if (!session) return error(404, "unknown session \"" + m[1].str() + "\"");
        const std::string action = m[2].matched ? m[2].str() : "";

        std::lock_guard lock(session->mutex);
        if (action.empty() && method == "GET") return get_session(*session);
        if (action == "/prompts" && method == "POST") return post_prompt(*session, parse_body(body));
        if (action == "/field" && method == "GET") return get_field(*session);
        if (action == "/plan" && method == "POST") return post_plan(*session, parse_body(body));
        if (action == "/coefficients" && method == "GET") return get_coefficients(*session);
        if (action == "/reset" && method == "POST") return post_reset(*session);
        return error(404, "no route for " + method + " " + raw_path);
    } catch (const BadRequest& e) {
        return error(400, e.what());
    } catch (const NoPathError& e) {
        return error(409, e.what());
    } catch (const ProviderError& e) {
        return error(502, e.what(), e.raw_reply());
    } catch (const SceneError& e) {
        return error(400, e.what());
    } catch (const PlannerError& e) {
        return error(400, e.what());
    } catch (const BayesError& e) {
        return error(400, e.what());
    } catch (const FieldError& e) {
        return error(400, e.what());
    } catch (const json::exception& e) {
        return error(400, e.what());
    } catch (const std::exception& e) {
        return error(500, e.what());
    }
}

Response SessionService::create_session(const json& body) {
    const json& scene_doc = body.contains("scene") ? body.at("scene") : body;
    auto session = std::make_shared<Session>();
    session->spec = scene_from_json(scene_doc);
    session->grid = rasterize(session->spec);

    const std::vector<std::string> families = session->spec.families();
    FamilyValues priors;
    if (body.contains("priors")) {
        try {
            priors = body.at("priors").get<FamilyValues>();
        } catch (const json::exception& e) {
            throw BayesError(std::string("\"priors\" must map family names to numbers: ") + e.what());
        }
    } else {
        priors = provider(body.value("provider", ""))->estimate_priors(families);
    }

    SessionState state;
    state.store = init_priors(families, priors);
    state.field = field_for_store(state.store, session->grid, config_.injection);
    state.field_version = 1;

    std::unique_lock lock(sessions_mutex_);
    session->id = new_id();
    persist(*session, state);
    commit(*session, std::move(state));
    sessions_[session->id] = session;
    return {201, {{"session", session->id}, {"posteriors", session->store.posteriors()},
                  {"field_version", session->field_version}}};
}

Response SessionService::get_session(Session& s) const {
    return {200,
            {{"session", s.id},
             {"scene", scene_to_json(s.spec)},
             {"grid", {{"cols", s.grid.cols()}, {"rows", s.grid.rows()}, {"resolution_m", s.grid.resolution()}}},
             {"start", {s.spec.cell_of(s.spec.start).col, s.spec.cell_of(s.spec.start).row}},
             {"goal", {s.spec.cell_of(s.spec.goal).col, s.spec.cell_of(s.spec.goal).row}},
             {"posteriors", s.store.posteriors()},
             {"field_version", s.field_version},
             {"history", s.history}}};
}

Response SessionService::post_prompt(Session& s, const json& body) {
    if (!body.contains("text") || !body.at("text").is_string() || body.at("text").get<std::string>().empty()) {
        throw BadRequest("prompt body needs a non-empty \"text\"");
    }
    const std::string text = body.at("text").get<std::string>();
    auto prov = provider(body.value("provider", ""));

    SessionState next{s.store, s.field, s.field_version, s.history};
    const FamilyValues before = s.store.posteriors();
    next.store = apply_prompt(s.store, text, *prov, now_ms());
    next.field = field_for_store(next.store, s.grid, config_.injection);
    next.field_version = s.field_version + 1;

    const EvidenceRecord& rec = next.store.evidence().back();
    json entry = {{"kind", "prompt"},      {"text", text},
                  {"provider", rec.provider}, {"likelihoods", rec.likelihoods},
                  {"before", before},         {"after", next.store.posteriors()},
                  {"field_version", next.field_version}};
    next.history.push_back(entry);

    persist(s, next);
    commit(s, std::move(next));
    return {200,
            {{"posteriors", s.store.posteriors()},
             {"previous", before},
             {"likelihoods", rec.likelihoods},
             {"provider", rec.provider},
             {"field_version", s.field_version}}};
}

Response SessionService::get_field(Session& s) const {
    json out = field_to_json(s.field);
    out["version"] = s.field_version;
    return {200, out};
}

Response SessionService::post_plan(Session& s, const json& body) {
    const std::string strategy = body.value("strategy", "mha_star");
    const Cell start = s.spec.cell_of(s.spec.start);
    const Cell goal = s.spec.cell_of(s.spec.goal);

    PathResult path;
    if (strategy == "baseline" || strategy == "astar") {
        path = astar_baseline(s.grid, start, goal);
    } else if (strategy == "mha_star") {
        const PlannerParams params = PlannerParams::from_json(body.value("params", json::object()));
        path = mha_star(s.grid, s.field, start, goal, params);
    } else {
        throw BadRequest("unknown strategy \"" + strategy + "\"");
    }

    json report = path_report(path, s.grid, s.field_version);
    SessionState next{s.store, s.field, s.field_version, s.history};
    json entry = report;
    entry.erase("cells");
    entry["kind"] = "plan";
    next.history.push_back(entry);

    persist(s, next);
    commit(s, std::move(next));
    return {200, report};
}

Response SessionService::get_coefficients(Session& s) const { return {200, store_to_json(s.store)}; }

Response SessionService::post_reset(Session& s) {
    SessionState next{s.store.reset(), {}, s.field_version + 1, s.history};
    next.field = field_for_store(next.store, s.grid, config_.injection);
    next.history.push_back({{"kind", "reset"}, {"field_version", next.field_version}});
    persist(s, next);
    commit(s, std::move(next));
    return {200, {{"posteriors", s.store.posteriors()}, {"field_version", s.field_version}}};
}

void SessionService::commit(Session& s, SessionState next) {
    s.store = std::move(next.store);
    s.field = std::move(next.field);
    s.field_version = next.field_version;
    s.history = std::move(next.history);
}

void SessionService::persist(const Session& s, const SessionState& state) const {
    if (!config_.persist_dir) return;
    const json snapshot = {{"session", s.id},
                           {"scene", scene_to_json(s.spec)},
                           {"coefficients", store_to_json(state.store)},
                           {"field_version", state.field_version},
                           {"history", state.history}};
    const auto target = *config_.persist_dir / (s.id + ".json");
    const auto tmp = *config_.persist_dir / (s.id + ".json.tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << snapshot.dump(2);
        if (!out) throw Error("cannot write session snapshot " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

void SessionService::load_persisted() {
    for (const auto& entry : std::filesystem::directory_iterator(*config_.persist_dir)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        const json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) throw Error("corrupt session snapshot " + entry.path().string());

        auto session = std::make_shared<Session>();
        session->id = doc.at("session").get<std::string>();
        session->spec = scene_from_json(doc.at("scene"));
        session->grid = rasterize(session->spec);
        session->store = store_from_json(doc.at("coefficients"));
        session->field = field_for_store(session->store, session->grid, config_.injection);
        session->field_version = doc.at("field_version").get<std::uint64_t>();
        session->history = doc.at("history").get<std::vector<json>>();
        sessions_[session->id] = session;
    }
}

bool SessionService::listen(const std::function<void(int)>& on_bound) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        const Response r = handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server_->Get(R"(/.*)", route);
    server_->Post(R"(/.*)", route);

    int port = config_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(config_.host);
        if (port < 0) return false;
    } else if (!server_->bind_to_port(config_.host, port)) {
        return false;
    }
    if (on_bound) on_bound(port);
    return server_->listen_after_bind();
}

void SessionService::stop() { server_->stop(); }

}  // namespace promptnav::service
