#include "promptnav/sentiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "promptnav/errors.hpp"

namespace promptnav {

namespace {

using Clock = std::chrono::steady_clock;

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::set<std::string> string_set(const nlohmann::json& node) {
    std::set<std::string> out;
    for (const auto& item : node) out.insert(lowercase(item.get<std::string>()));
    return out;
}

bool mentions(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return false;
    return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

const nlohmann::json* find_family_value(const nlohmann::json& obj, const std::string& family) {
    if (auto it = obj.find(family); it != obj.end()) return &*it;
    const std::string want = lowercase(family);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (lowercase(it.key()) == want) return &*it;
    }
    return nullptr;
}

// Byte offset one past the brace matching the '{' at `open`, or npos.
std::size_t matching_brace(const std::string& s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i + 1;
    }
    return std::string::npos;
}

// Trials are numbered from 1 in messages.
std::string rethrow_prefix(int trial, int trials) {
    return "trial " + std::to_string(trial + 1) + " of " + std::to_string(trials) + ": ";
}

}  // namespace

Lexicon Lexicon::defaults() {
    Lexicon lx;
    lx.danger = {"dangerous", "danger", "hazard", "hazardous", "unsafe", "careful",
                 "caution", "risky", "busy", "crowded", "cluttered"};
    lx.safe = {"safe", "safely", "empty", "clear", "quickly", "fine", "calm"};
    lx.intensifiers = {"incredibly", "very", "extremely"};
    lx.family_priors = {{"wall", 0.2}, {"grinder", 0.8}, {"chainsaw", 0.95}, {"robot", 0.9}, {"chair", 0.6}};
    return lx;
}

Lexicon Lexicon::from_json(const nlohmann::json& doc) {
    Lexicon lx = defaults();
    try {
        if (doc.contains("danger")) lx.danger = string_set(doc.at("danger"));
        if (doc.contains("safe")) lx.safe = string_set(doc.at("safe"));
        if (doc.contains("intensifiers")) lx.intensifiers = string_set(doc.at("intensifiers"));
        if (doc.contains("intensifier_factor")) lx.intensifier_factor = doc.at("intensifier_factor").get<double>();
        if (doc.contains("weight")) lx.weight = doc.at("weight").get<double>();
        if (doc.contains("default_prior")) lx.default_prior = doc.at("default_prior").get<double>();
        if (doc.contains("family_priors")) {
            lx.family_priors.clear();
            for (const auto& [k, v] : doc.at("family_priors").items()) lx.family_priors[lowercase(k)] = v.get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("malformed lexicon: ") + e.what());
    }
    if (lx.intensifier_factor < 1.0 || lx.weight < 0.0) {
        throw ProviderError("lexicon intensifier_factor must be >= 1 and weight >= 0");
    }
    return lx;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

double lexicon_score(std::string_view prompt, const Lexicon& lexicon) {
    double balance = 0.0;
    double boost = 1.0;
    for (const std::string& tok : tokenize(prompt)) {
        // A run of intensifiers applies the factor once; compounding would let an
        // inserted word split a run and move the score against its own polarity.
        if (lexicon.intensifiers.contains(tok)) {
            boost = lexicon.intensifier_factor;
            continue;
        }
        if (lexicon.danger.contains(tok)) balance += boost;
        else if (lexicon.safe.contains(tok)) balance -= boost;
        boost = 1.0;
    }
    return 0.5 + 0.5 * std::tanh(lexicon.weight * balance);
}

std::string to_string(ProviderKind kind) { return kind == ProviderKind::Lexicon ? "lexicon" : "remote"; }

ProviderKind provider_kind_from_string(const std::string& s) {
    if (s == "lexicon") return ProviderKind::Lexicon;
    if (s == "remote") return ProviderKind::Remote;
    throw ProviderError("unknown provider \"" + s + "\"");
}

ProviderConfig ProviderConfig::from_env(ProviderKind kind) {
    ProviderConfig cfg;
    cfg.kind = kind;
    if (const char* url = std::getenv("PROMPTNAV_LLM_URL")) cfg.endpoint = url;
    if (const char* t = std::getenv("PROMPTNAV_LLM_TIMEOUT_S")) {
        char* end = nullptr;
        const double v = std::strtod(t, &end);
        if (end == t || *end != '\0') throw ProviderError("PROMPTNAV_LLM_TIMEOUT_S is not a number");
        cfg.timeout_s = v;
    }
    return cfg;
}

void ProviderConfig::validate() const {
    if (!(timeout_s > 0.0)) throw ProviderError("provider timeout must be positive");
    if (retries < 0) throw ProviderError("provider retries must be >= 0");
    if (kind == ProviderKind::Remote && endpoint.empty()) {
        throw ProviderError("remote provider requires an endpoint (PROMPTNAV_LLM_URL)");
    }
}

HttpTransport::HttpTransport(std::string endpoint, std::string auth_token) : auth_token_(std::move(auth_token)) {
    const std::string prefix = "http://";
    if (endpoint.rfind(prefix, 0) != 0) {
        throw TransportError("unsupported endpoint \"" + endpoint + "\": only http:// is available");
    }
    const std::size_t slash = endpoint.find('/', prefix.size());
    scheme_host_port_ = endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
}

std::string HttpTransport::complete(const std::string& prompt, std::chrono::milliseconds timeout) {
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!auth_token_.empty()) headers.emplace("Authorization", "Bearer " + auth_token_);
    const std::string body = nlohmann::json{{"prompt", prompt}}.dump();

    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
        throw TransportError("request to " + scheme_host_port_ + path_ + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("endpoint returned HTTP " + std::to_string(res->status), res->body);
    }
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_object() && parsed.contains("text") && parsed["text"].is_string()) {
        return parsed["text"].get<std::string>();
    }
    return res->body;
}

LikelihoodAssignment LexiconProvider::analyze(const std::string& prompt, const std::vector<std::string>& families,
                                              const CoefficientStore&) {
    if (families.empty()) throw ProviderError("no families to analyze");
    const std::vector<std::string> tokens = tokenize(prompt);
    const double score = clamp_probability(lexicon_score(prompt, lexicon_));

    std::vector<std::string> targeted;
    for (const std::string& f : families) {
        if (mentions(tokens, tokenize(f))) targeted.push_back(f);
    }

    LikelihoodAssignment out;
    out.provider = tag();
    for (const std::string& f : families) {
        const bool applies = targeted.empty() || std::find(targeted.begin(), targeted.end(), f) != targeted.end();
        out.likelihoods[f] = applies ? score : 0.5;
    }
    std::ostringstream raw;
    raw << "score=" << score;
    out.raw_reply = raw.str();
    return out;
}

FamilyValues LexiconProvider::estimate_priors(const std::vector<std::string>& families) {
    FamilyValues out;
    for (const std::string& f : families) {
        auto it = lexicon_.family_priors.find(lowercase(f));
        out[f] = clamp_probability(it == lexicon_.family_priors.end() ? lexicon_.default_prior : it->second);
    }
    return out;
}

RemoteProvider::RemoteProvider(ProviderConfig config, std::shared_ptr<CompletionTransport> transport,
                               Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleeper)) {
    if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string RemoteProvider::call(const std::string& text) {
    using std::chrono::milliseconds;
    const auto deadline = Clock::now() + milliseconds(static_cast<long>(config_.timeout_s * 1000.0));
    auto backoff = milliseconds(static_cast<long>(config_.backoff_s * 1000.0));
    std::string last_error;

    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        const auto remaining = std::chrono::duration_cast<milliseconds>(deadline - Clock::now());
        if (remaining <= milliseconds(0)) break;
        try {
            return transport_->complete(text, remaining);
        } catch (const TransportError& e) {
            last_error = e.what();
        }
        if (attempt == config_.retries) break;
        if (Clock::now() + backoff >= deadline) break;
        sleep_(backoff);
        backoff *= 2;
    }
    throw TransportError("remote provider unavailable after " + std::to_string(config_.retries + 1) +
                         " attempt(s): " + last_error);
}

LikelihoodAssignment RemoteProvider::analyze(const std::string& prompt, const std::vector<std::string>& families,
                                             const CoefficientStore& store) {
    if (families.empty()) throw ProviderError("no families to analyze");
    FamilyValues current;
    for (const std::string& f : families) current[f] = store.contains(f) ? store.posterior(f) : 0.5;
    const std::string reply = call(render_prompt_template(config_.template_id, families, current, prompt));
    LikelihoodAssignment out = parse_remote_reply(reply, families);
    out.provider = tag();
    return out;
}

FamilyValues RemoteProvider::estimate_priors(const std::vector<std::string>& families) {
    if (families.empty()) return {};
    const std::string reply = call(render_prompt_template("prior-v1", families, {}, ""));
    return parse_remote_reply(reply, families).likelihoods;
}

std::unique_ptr<SentimentProvider> make_provider(const ProviderConfig& config) {
    config.validate();
    if (config.kind == ProviderKind::Lexicon) return std::make_unique<LexiconProvider>(config.lexicon);
    const char* key = config.auth_token_env.empty() ? nullptr : std::getenv(config.auth_token_env.c_str());
    auto transport = std::make_shared<HttpTransport>(config.endpoint, key ? key : "");
    return std::make_unique<RemoteProvider>(config, std::move(transport));
}

std::string render_prompt_template(const std::string& template_id, const std::vector<std::string>& families,
                                   const FamilyValues& posteriors, const std::string& prompt) {
    std::ostringstream out;
    if (template_id == "danger-v1") {
        out << "You rate hazards around objects on a construction site for a mobile robot.\n"
               "BIM families with their current danger coefficients (0 = safe, 1 = dangerous):\n";
        for (const std::string& f : families) {
            char buf[32];
            auto it = posteriors.find(f);
            std::snprintf(buf, sizeof buf, "%.3f", it == posteriors.end() ? 0.5 : it->second);
            out << "- " << f << ": " << buf << "\n";
        }
        out << "Operator says: \"" << prompt << "\"\n"
               "Given the operator's statement and the current coefficients, estimate for every family the "
               "probability in [0, 1] that its surroundings are dangerous. Use 0.5 when the statement says "
               "nothing about a family. Reply with only one JSON object mapping each family name to a number.";
    } else if (template_id == "prior-v1") {
        out << "You rate hazards around objects on a construction site for a mobile robot.\n"
               "For each BIM family below, give a danger coefficient in [0, 1] reflecting how risky it is "
               "for a robot to pass close to it (dynamism, value, localization error).\n";
        for (const std::string& f : families) out << "- " << f << "\n";
        out << "Reply with only one JSON object mapping each family name to a number.";
    } else {
        throw ProviderError("unknown prompt template \"" + template_id + "\"");
    }
    return out.str();
}

LikelihoodAssignment analyze(const std::string& prompt, const std::vector<std::string>& families,
                             const CoefficientStore& store, const ProviderConfig& config) {
    return make_provider(config)->analyze(prompt, families, store);
}

LikelihoodAssignment parse_remote_reply(const std::string& reply, const std::vector<std::string>& families) {
    nlohmann::json object;
    bool found = false;
    for (std::size_t open = reply.find('{'); open != std::string::npos; open = reply.find('{', open + 1)) {
        const std::size_t close = matching_brace(reply, open);
        if (close == std::string::npos) continue;
        auto parsed = nlohmann::json::parse(reply.substr(open, close - open), nullptr, false);
        if (parsed.is_object()) {
            object = std::move(parsed);
            found = true;
            break;
        }
    }
    if (!found) throw ReplyError("reply contains no JSON object", reply);

    LikelihoodAssignment out;
    out.provider = "remote";
    out.raw_reply = reply;
    for (const std::string& f : families) {
        const nlohmann::json* value = find_family_value(object, f);
        if (!value) throw ReplyError("reply is missing family \"" + f + "\"", reply);
        if (!value->is_number()) throw ReplyError("reply value for \"" + f + "\" is not a number", reply);
        const double v = value->get<double>();
        if (!std::isfinite(v)) throw ReplyError("reply value for \"" + f + "\" is not finite", reply);
        out.likelihoods[f] = clamp_probability(v);
    }
    return out;
}

CoefficientStore apply_prompt(const CoefficientStore& store, const std::string& prompt, SentimentProvider& provider,
                              std::int64_t timestamp_ms) {
    const std::vector<std::string> families = store.family_names();
    if (families.empty()) return store;
    LikelihoodAssignment a = provider.analyze(prompt, families, store);
    return update(store, EvidenceRecord{prompt, std::move(a.likelihoods), a.provider, timestamp_ms});
}

std::string StabilityReport::format(const std::string& family) const {
    const FamilyStats& s = families.at(family);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", s.mean, s.stddev);
    return buf;
}

std::string StabilityReport::render_table() const {
    std::size_t width = std::string("BIM family").size();
    for (const auto& [name, s] : families) width = std::max(width, name.size());
    std::ostringstream out;
    out << "Prompt: " << (prompt.empty() ? "(none)" : "\"" + prompt + "\"") << "  trials: " << trials << "\n";
    out << std::string("BIM family") << std::string(width - 10 + 2, ' ') << "Danger level\n";
    for (const auto& [name, s] : families) {
        out << name << std::string(width - name.size() + 2, ' ') << format(name) << "\n";
    }
    return out.str();
}

nlohmann::json StabilityReport::to_json() const {
    nlohmann::json fam = nlohmann::json::object();
    for (const auto& [name, s] : families) fam[name] = {{"mean", s.mean}, {"std", s.stddev}};
    return {{"prompt", prompt}, {"trials", trials}, {"families", fam}};
}

StabilityReport stability_report(SentimentProvider& provider, const std::string& prompt,
                                 const std::vector<std::string>& families, const CoefficientStore& store,
                                 int trials) {
    if (trials < 1) throw ProviderError("stability report needs at least one trial");
    std::map<std::string, std::vector<double>> samples;
    for (int t = 0; t < trials; ++t) {
        LikelihoodAssignment a;
        try {
            a = provider.analyze(prompt, families, store);
        } catch (const TransportError& e) {
            throw TransportError(rethrow_prefix(t, trials) + e.what(), e.raw_reply());
        } catch (const ReplyError& e) {
            throw ReplyError(rethrow_prefix(t, trials) + e.what(), e.raw_reply());
        } catch (const ProviderError& e) {
            throw ProviderError(rethrow_prefix(t, trials) + e.what(), e.raw_reply());
        }
        for (const std::string& f : families) samples[f].push_back(a.likelihoods.at(f));
    }

    StabilityReport report;
    report.prompt = prompt;
    report.trials = trials;
    for (const auto& [name, xs] : samples) {
        // Shifted by the first sample so identical samples give an exact mean and zero spread.
        double shifted = 0.0;
        for (double x : xs) shifted += x - xs.front();
        const double mean = xs.front() + shifted / xs.size();
        double sq = 0.0;
        for (double x : xs) sq += (x - mean) * (x - mean);
        report.families[name] = {mean, std::sqrt(sq / xs.size())};
    }
    return report;
}

StabilityReport stability_report(const ProviderConfig& config, const std::string& prompt,
                                 const std::vector<std::string>& families, const CoefficientStore& store,
                                 int trials) {
    auto provider = make_provider(config);
    return stability_report(*provider, prompt, families, store, trials);
}

}  // namespace promptnav
