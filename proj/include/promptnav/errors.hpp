#pragma once

#include <stdexcept>
#include <string>

namespace promptnav {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SceneError : public Error {
public:
    using Error::Error;
};

class FieldError : public Error {
public:
    using Error::Error;
};

class BayesError : public Error {
public:
    using Error::Error;
};

/// Provider failure. `raw_reply` holds whatever the provider returned, if anything.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what, std::string raw_reply = {})
        : Error(what), raw_reply_(std::move(raw_reply)) {}

    const std::string& raw_reply() const noexcept { return raw_reply_; }

private:
    std::string raw_reply_;
};

/// Network-level failure: unreachable endpoint, timeout, non-2xx status.
class TransportError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

/// The provider answered but the answer could not be turned into likelihoods.
class ReplyError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class PlannerError : public Error {
public:
    using Error::Error;
};

class NoPathError : public PlannerError {
public:
    using PlannerError::PlannerError;
};

}  // namespace promptnav
