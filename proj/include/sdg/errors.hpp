#pragma once

#include <stdexcept>
#include <string>

namespace sdg {

/// Invalid problem data, configuration, or violated precondition.
/// The CLI maps this to exit code 1.
class spec_error : public std::runtime_error {
public:
    explicit spec_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure during a run (NaN/Inf, CFL violation, domain excursion,
/// non-convergent fixed point). The CLI maps this to exit code 2.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sdg
