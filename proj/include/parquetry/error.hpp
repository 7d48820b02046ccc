#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace parquetry {

// Malformed or inconsistent input (sizes, ranges, file contents).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A placement touched source material that is no longer available.
class ResourceCollision : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// No source, rotation or offset can host the patch any more.
class ResourceExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A region or cut outline that cannot be produced physically.
class FabricabilityError : public std::runtime_error {
public:
    FabricabilityError(const std::string& what, std::vector<int> offenders = {})
        : std::runtime_error(what), offenders_(std::move(offenders)) {}
    const std::vector<int>& offenders() const { return offenders_; }

private:
    std::vector<int> offenders_;
};

// A pipeline stage was invoked before the stage that produces its inputs.
class MissingArtifact : public std::runtime_error {
public:
    MissingArtifact(const std::string& what, std::string stage)
        : std::runtime_error(what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace parquetry
