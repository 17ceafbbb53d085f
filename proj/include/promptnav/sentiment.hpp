#pragma once
// Prompt → per-family likelihood extraction.
//
// Two providers ship: a deterministic keyword lexicon, and a remote completion
// model reached over HTTP that is asked to answer with a JSON object mapping
// family names to danger probabilities.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "promptnav/bayes.hpp"

namespace promptnav {

struct Lexicon {
    std::set<std::string> danger;
    std::set<std::string> safe;
    std::set<std::string> intensifiers;
    double intensifier_factor = 2.0;
    double weight = 0.5;

    /// Danger coefficients used as priors by the lexicon provider, keyed by
    /// lowercase family name. Unlisted families get `default_prior`.
    FamilyValues family_priors;
    double default_prior = 0.5;

    static Lexicon defaults();
    /// Overrides from a JSON object with any of the keys
    /// danger, safe, intensifiers, intensifier_factor, weight, family_priors, default_prior.
    static Lexicon from_json(const nlohmann::json& doc);
};

/// Lowercase alphanumeric tokens; everything else separates words.
std::vector<std::string> tokenize(std::string_view text);

/// 0.5 + 0.5 * tanh(weight * (danger_hits - safe_hits)). A sentiment word directly
/// after one or more intensifiers counts `intensifier_factor` times.
double lexicon_score(std::string_view prompt, const Lexicon& lexicon = Lexicon::defaults());

enum class ProviderKind { Lexicon, Remote };

std::string to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(const std::string& s);

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Lexicon;
    std::string endpoint;
    std::string auth_token_env = "PROMPTNAV_LLM_KEY";
    double timeout_s = 30.0;
    int retries = 2;
    double backoff_s = 0.5;
    std::string template_id = "danger-v1";
    Lexicon lexicon = Lexicon::defaults();

    /// Reads PROMPTNAV_LLM_URL and PROMPTNAV_LLM_TIMEOUT_S.
    static ProviderConfig from_env(ProviderKind kind);
    void validate() const;
};

struct LikelihoodAssignment {
    FamilyValues likelihoods;
    std::string provider;
    std::string raw_reply;
};

/// Text-in/text-out completion call. Throws TransportError.
class CompletionTransport {
public:
    virtual ~CompletionTransport() = default;
    virtual std::string complete(const std::string& prompt, std::chrono::milliseconds timeout) = 0;
};

/// POSTs `{"prompt": ...}` to an http:// endpoint. A reply that is a JSON object
/// with a string "text" member yields that member, otherwise the raw body.
class HttpTransport : public CompletionTransport {
public:
    HttpTransport(std::string endpoint, std::string auth_token);
    std::string complete(const std::string& prompt, std::chrono::milliseconds timeout) override;

private:
    std::string scheme_host_port_;
    std::string path_;
    std::string auth_token_;
};

class SentimentProvider {
public:
    virtual ~SentimentProvider() = default;
    virtual std::string tag() const = 0;
    virtual LikelihoodAssignment analyze(const std::string& prompt, const std::vector<std::string>& families,
                                         const CoefficientStore& store) = 0;
    /// Initial danger coefficients from the family names alone.
    virtual FamilyValues estimate_priors(const std::vector<std::string>& families) = 0;
};

class LexiconProvider : public SentimentProvider {
public:
    explicit LexiconProvider(Lexicon lexicon = Lexicon::defaults()) : lexicon_(std::move(lexicon)) {}

    std::string tag() const override { return "lexicon"; }
    LikelihoodAssignment analyze(const std::string& prompt, const std::vector<std::string>& families,
                                 const CoefficientStore& store) override;
    FamilyValues estimate_priors(const std::vector<std::string>& families) override;

private:
    Lexicon lexicon_;
};

class RemoteProvider : public SentimentProvider {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RemoteProvider(ProviderConfig config, std::shared_ptr<CompletionTransport> transport, Sleeper sleeper = {});

    std::string tag() const override { return "remote"; }
    LikelihoodAssignment analyze(const std::string& prompt, const std::vector<std::string>& families,
                                 const CoefficientStore& store) override;
    FamilyValues estimate_priors(const std::vector<std::string>& families) override;

private:
    std::string call(const std::string& text);

    ProviderConfig config_;
    std::shared_ptr<CompletionTransport> transport_;
    Sleeper sleep_;
};

std::unique_ptr<SentimentProvider> make_provider(const ProviderConfig& config);

/// Instantiate a versioned template. Known ids: "danger-v1" (prompt evidence), "prior-v1" (priors).
std::string render_prompt_template(const std::string& template_id, const std::vector<std::string>& families,
                                   const FamilyValues& posteriors, const std::string& prompt);

/// Likelihoods for `prompt`. Never modifies `store`.
LikelihoodAssignment analyze(const std::string& prompt, const std::vector<std::string>& families,
                             const CoefficientStore& store, const ProviderConfig& config);

/// First JSON object in `reply` mapping every family to a number; values clamped.
/// Throws ReplyError (with the raw reply attached).
LikelihoodAssignment parse_remote_reply(const std::string& reply, const std::vector<std::string>& families);

/// Analyze `prompt` over the store's families and fold the result into a new store.
CoefficientStore apply_prompt(const CoefficientStore& store, const std::string& prompt, SentimentProvider& provider,
                              std::int64_t timestamp_ms = 0);

struct FamilyStats {
    double mean = 0.0;
    double stddev = 0.0;
};

struct StabilityReport {
    std::string prompt;
    int trials = 0;
    std::map<std::string, FamilyStats> families;

    /// "0.43 ± 0.31"
    std::string format(const std::string& family) const;
    std::string render_table() const;
    nlohmann::json to_json() const;
};

/// Runs `trials` sequential analyses; population standard deviation per family.
StabilityReport stability_report(SentimentProvider& provider, const std::string& prompt,
                                 const std::vector<std::string>& families, const CoefficientStore& store,
                                 int trials);
StabilityReport stability_report(const ProviderConfig& config, const std::string& prompt,
                                 const std::vector<std::string>& families, const CoefficientStore& store,
                                 int trials);

}  // namespace promptnav
