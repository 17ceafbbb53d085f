#include "promptnav/bayes.hpp"

#include <algorithm>
#include <cmath>

#include "promptnav/errors.hpp"

namespace promptnav {

double clamp_probability(double p) {
    if (!std::isfinite(p)) throw BayesError("probability is not finite");
    return std::clamp(p, kProbabilityEps, 1.0 - kProbabilityEps);
}

double bayes_update(double prior, double likelihood) {
    if (likelihood == 0.5) return prior;
    const double num = likelihood * prior;
    const double den = num + (1.0 - likelihood) * (1.0 - prior);
    return clamp_probability(num / den);
}

double closed_form_posterior(double prior, std::span<const double> likelihoods) {
    double for_h = prior;
    double against_h = 1.0 - prior;
    for (double l : likelihoods) {
        for_h *= l;
        against_h *= 1.0 - l;
    }
    return for_h / (for_h + against_h);
}

double consolidate(double prior, std::span<const double> likelihoods) {
    std::vector<double> ordered(likelihoods.begin(), likelihoods.end());
    std::sort(ordered.begin(), ordered.end());
    double p = prior;
    for (double l : ordered) p = bayes_update(p, l);
    return p;
}

double CoefficientStore::prior(const std::string& family) const {
    auto it = families_.find(family);
    if (it == families_.end()) throw BayesError("unknown family \"" + family + "\"");
    return it->second.prior;
}

double CoefficientStore::posterior(const std::string& family) const {
    auto it = families_.find(family);
    if (it == families_.end()) throw BayesError("unknown family \"" + family + "\"");
    return it->second.posterior;
}

std::vector<std::string> CoefficientStore::family_names() const {
    std::vector<std::string> out;
    for (const auto& [name, c] : families_) out.push_back(name);
    return out;
}

FamilyValues CoefficientStore::posteriors() const {
    FamilyValues out;
    for (const auto& [name, c] : families_) out[name] = c.posterior;
    return out;
}

FamilyValues CoefficientStore::priors() const {
    FamilyValues out;
    for (const auto& [name, c] : families_) out[name] = c.prior;
    return out;
}

void CoefficientStore::recompute(const std::string& family) {
    std::vector<double> chain;
    chain.reserve(evidence_.size());
    for (const EvidenceRecord& r : evidence_) chain.push_back(r.likelihoods.at(family));
    FamilyCoefficient& c = families_.at(family);
    c.posterior = consolidate(c.prior, chain);
}

CoefficientStore CoefficientStore::replayed() const {
    CoefficientStore out = *this;
    for (auto& [name, c] : out.families_) out.recompute(name);
    return out;
}

CoefficientStore CoefficientStore::reset() const {
    CoefficientStore out = *this;
    out.evidence_.clear();
    for (auto& [name, c] : out.families_) c.posterior = c.prior;
    return out;
}

CoefficientStore init_priors(const std::vector<std::string>& families, const FamilyValues& assignments) {
    CoefficientStore store;
    for (const std::string& f : families) {
        auto it = assignments.find(f);
        if (it == assignments.end()) throw BayesError("no prior assigned to family \"" + f + "\"");
        const double p = clamp_probability(it->second);
        store.families_[f] = {p, p};
    }
    return store;
}

CoefficientStore update(const CoefficientStore& store, EvidenceRecord record) {
    for (const auto& [name, c] : store.families_) {
        auto it = record.likelihoods.find(name);
        if (it == record.likelihoods.end()) throw BayesError("evidence is missing family \"" + name + "\"");
        it->second = clamp_probability(it->second);
    }
    for (const auto& [name, l] : record.likelihoods) {
        if (!store.families_.contains(name)) throw BayesError("evidence names unknown family \"" + name + "\"");
    }

    CoefficientStore out = store;
    out.evidence_.push_back(std::move(record));
    for (const auto& [name, c] : store.families_) out.recompute(name);
    return out;
}

CoefficientStore update(const CoefficientStore& store, const FamilyValues& likelihoods) {
    return update(store, EvidenceRecord{"", likelihoods, "direct", 0});
}

CoefficientStore update_sequence(const CoefficientStore& store, const std::vector<FamilyValues>& chain) {
    CoefficientStore out = store;
    for (const FamilyValues& l : chain) out = update(out, l);
    return out;
}

CoefficientStore update_sequence(const CoefficientStore& store, const std::vector<EvidenceRecord>& chain) {
    CoefficientStore out = store;
    for (const EvidenceRecord& r : chain) out = update(out, r);
    return out;
}

FieldParams to_field_params(const CoefficientStore& store, const OccupancyGrid& grid, double k_global,
                            double d_max, FieldMode mode) {
    FieldParams params;
    params.d_max = d_max;
    params.mode = mode;
    for (const auto& [id, family] : grid.obstacle_families()) {
        if (!store.contains(family)) {
            throw BayesError("obstacle \"" + id + "\" has family \"" + family + "\" with no coefficient");
        }
        const double posterior = store.posterior(family);
        if (mode == FieldMode::ScaleKrep) {
            params.per_obstacle[id] = {posterior * k_global, d_max};
        } else {
            params.per_obstacle[id] = {k_global, posterior * d_max};
        }
    }
    params.validate();
    return params;
}

nlohmann::json store_to_json(const CoefficientStore& store) {
    nlohmann::json families = nlohmann::json::object();
    for (const auto& [name, c] : store.families()) {
        nlohmann::json evidence = nlohmann::json::array();
        for (const EvidenceRecord& r : store.evidence()) {
            evidence.push_back({{"prompt", r.prompt},
                                {"likelihoods", {{name, r.likelihoods.at(name)}}},
                                {"provider", r.provider},
                                {"timestamp_ms", r.timestamp_ms}});
        }
        families[name] = {{"prior", c.prior}, {"posterior", c.posterior}, {"evidence", evidence}};
    }
    return {{"families", families}};
}

CoefficientStore store_from_json(const nlohmann::json& doc) {
    CoefficientStore store;
    try {
        const auto& families = doc.at("families");
        if (!families.is_object()) throw BayesError("\"families\" must be an object");

        std::size_t count = 0;
        bool first = true;
        for (const auto& [name, entry] : families.items()) {
            const double prior = entry.at("prior").get<double>();
            if (!std::isfinite(prior) || prior < kProbabilityEps || prior > 1.0 - kProbabilityEps) {
                throw BayesError("prior of \"" + name + "\" outside [eps, 1-eps]");
            }
            store.families_[name] = {prior, entry.at("posterior").get<double>()};

            const auto& evidence = entry.contains("evidence") ? entry.at("evidence") : nlohmann::json::array();
            if (first) {
                count = evidence.size();
                store.evidence_.resize(count);
            } else if (evidence.size() != count) {
                throw BayesError("families disagree on evidence count");
            }
            for (std::size_t i = 0; i < count; ++i) {
                const auto& item = evidence[i];
                EvidenceRecord& rec = store.evidence_[i];
                const std::string prompt = item.value("prompt", "");
                const std::string provider = item.value("provider", "");
                const std::int64_t ts = item.value("timestamp_ms", std::int64_t{0});
                if (first) {
                    rec.prompt = prompt;
                    rec.provider = provider;
                    rec.timestamp_ms = ts;
                } else if (rec.prompt != prompt || rec.provider != provider || rec.timestamp_ms != ts) {
                    throw BayesError("families disagree on evidence record " + std::to_string(i));
                }
                const double l = item.at("likelihoods").at(name).get<double>();
                if (!std::isfinite(l) || l < kProbabilityEps || l > 1.0 - kProbabilityEps) {
                    throw BayesError("likelihood outside [eps, 1-eps] in evidence of \"" + name + "\"");
                }
                rec.likelihoods[name] = l;
            }
            first = false;
        }
    } catch (const nlohmann::json::exception& e) {
        throw BayesError(std::string("malformed coefficient store: ") + e.what());
    }

    if (store.replayed() != store) throw BayesError("stored posteriors do not match the evidence log");
    return store;
}

}  // namespace promptnav
