#pragma once
// Per-family danger coefficients and sequential Bayesian consolidation of prompt evidence.
//
// Each family carries a binary hypothesis H ("surroundings are hazardous").
// A prompt contributes a likelihood L = P(E|H) and the complement model
// P(E|not H) = 1 - L, so one update multiplies the posterior odds by L / (1 - L).

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptnav/field.hpp"
#include "promptnav/scene.hpp"

namespace promptnav {

inline constexpr double kProbabilityEps = 1e-6;

/// Per-family likelihoods P(E|H) or danger values.
using FamilyValues = std::map<std::string, double>;

/// Clamp into [eps, 1 - eps]. Throws BayesError on NaN/inf.
double clamp_probability(double p);

/// One update step: L*p / (L*p + (1-L)*(1-p)), clamped. L == 0.5 returns p unchanged.
double bayes_update(double prior, double likelihood);

/// Product form over a chain of conditionally independent likelihoods (no clamping
/// between steps): p*prod(L) / (p*prod(L) + (1-p)*prod(1-L)).
double closed_form_posterior(double prior, std::span<const double> likelihoods);

/// Canonical posterior for a prior and an evidence multiset: steps are folded in
/// ascending likelihood order so the result does not depend on arrival order.
double consolidate(double prior, std::span<const double> likelihoods);

struct EvidenceRecord {
    std::string prompt;
    FamilyValues likelihoods;
    std::string provider;
    std::int64_t timestamp_ms = 0;

    friend bool operator==(const EvidenceRecord&, const EvidenceRecord&) = default;
};

struct FamilyCoefficient {
    double prior = 0.5;
    double posterior = 0.5;

    friend bool operator==(const FamilyCoefficient&, const FamilyCoefficient&) = default;
};

/// Value type. Operations below return new stores and never modify their input.
class CoefficientStore {
public:
    const std::map<std::string, FamilyCoefficient>& families() const { return families_; }
    const std::vector<EvidenceRecord>& evidence() const { return evidence_; }

    bool contains(const std::string& family) const { return families_.contains(family); }
    double prior(const std::string& family) const;
    double posterior(const std::string& family) const;
    std::vector<std::string> family_names() const;
    FamilyValues posteriors() const;
    FamilyValues priors() const;

    /// Recompute every posterior from priors + evidence log.
    CoefficientStore replayed() const;
    /// Drop the evidence log; posteriors return to priors.
    CoefficientStore reset() const;

    friend bool operator==(const CoefficientStore&, const CoefficientStore&) = default;

private:
    friend CoefficientStore init_priors(const std::vector<std::string>&, const FamilyValues&);
    friend CoefficientStore update(const CoefficientStore&, EvidenceRecord);
    friend CoefficientStore store_from_json(const nlohmann::json&);

    void recompute(const std::string& family);

    std::map<std::string, FamilyCoefficient> families_;
    std::vector<EvidenceRecord> evidence_;
};

/// Priors are clamped; posterior starts equal to the prior.
CoefficientStore init_priors(const std::vector<std::string>& families, const FamilyValues& assignments);

/// Append one evidence record. Likelihoods are clamped and must cover exactly the store's families.
CoefficientStore update(const CoefficientStore& store, EvidenceRecord record);
CoefficientStore update(const CoefficientStore& store, const FamilyValues& likelihoods);

CoefficientStore update_sequence(const CoefficientStore& store, const std::vector<FamilyValues>& chain);
CoefficientStore update_sequence(const CoefficientStore& store, const std::vector<EvidenceRecord>& chain);

/// Map posteriors onto field coefficients for every obstacle of `grid`.
///   ScaleKrep: k_rep = posterior * k_global, cutoff d_max.
///   ScaleDmax: k_rep = k_global, cutoff posterior * d_max.
FieldParams to_field_params(const CoefficientStore& store, const OccupancyGrid& grid, double k_global,
                            double d_max, FieldMode mode);

inline constexpr double kDefaultKGlobal = 5.0;

nlohmann::json store_to_json(const CoefficientStore& store);
/// Rejects documents whose stored posteriors disagree with their evidence log.
CoefficientStore store_from_json(const nlohmann::json& doc);

}  // namespace promptnav
