#pragma once

#include <stdexcept>
#include <string>

namespace surfsim {

// Invalid scenario parameters or out-of-range identifiers. `key()` names
// the offending configuration key when one applies.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what, std::string key = {})
        : std::invalid_argument(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// A two-state chain with p_on = p_off = 0 has no stationary distribution.
class DegenerateChainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InsufficientHistoryError : public std::length_error {
public:
    using std::length_error::length_error;
};

class EmptyTopologyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UncoverableNeighborError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Metric is undefined for the given trace (e.g. no messages originated).
class UndefinedRatioError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class AggregationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class TraceFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace surfsim
