#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mprox {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model data violates a structural invariant (probabilities, rewards, shapes).
class InvalidModel : public Error {
public:
    using Error::Error;
};

class NonUniqueStationary : public Error {
public:
    using Error::Error;
};

class AllZeroInput : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class ZeroMassReference : public Error {
public:
    using Error::Error;
};

class NumericOverflow : public Error {
public:
    using Error::Error;
};

/// Raised by the strict mixing estimate; carries the deterministic policy that failed.
class NotErgodic : public Error {
public:
    NotErgodic(const std::string& msg, std::vector<int> policy)
        : Error(msg), policy_(std::move(policy)) {}
    const std::vector<int>& policy() const { return policy_; }

private:
    std::vector<int> policy_;
};

class ConstructionFailed : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace mprox
