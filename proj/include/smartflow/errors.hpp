#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace smartflow {

// Precondition or API-contract breach. These indicate caller bugs, not bad data.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Document failed validation; carries the offending JSON paths.
class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& what, std::vector<std::string> paths)
        : std::runtime_error(what), paths_(std::move(paths)) {}
    const std::vector<std::string>& paths() const { return paths_; }

private:
    std::vector<std::string> paths_;
};

class CheckpointError : public std::runtime_error {
public:
    explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace smartflow
