#pragma once

#include <stdexcept>
#include <string>

namespace halftrace {

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Nearest-point projection undefined (input too close to the singular set).
struct SingularProjection : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Point hit the dual skeleton during a homogeneous retraction stage.
struct SingularPoint : std::runtime_error {
    int stage;
    explicit SingularPoint(int stage_, const std::string& what_)
        : std::runtime_error(what_), stage(stage_) {}
};

struct UndersampledLoop : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HypothesisViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonIntegrableHomogeneous : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sample lattice keeps landing on the singular set even after one retry shift.
struct GridAlignment : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoAdmissibleShift : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace halftrace
