#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace grnvelo {

// Dimension mismatches, malformed indices and bad option values.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Inputs outside the mathematical domain (negative concentrations, z outside its bounds).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// An iterative method failed to reach its tolerance.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : NumericError(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// Operation invoked in a regime it does not cover (e.g. linear stability with repressors).
class ModeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// No directed path from the controlled gene to some target in the molecular graph,
// or the target cannot be attained inside the search bracket.
class UnreachableError : public std::runtime_error {
public:
    UnreachableError(const std::string& what, bool structural)
        : std::runtime_error(what), structural_(structural) {}

    bool structural() const noexcept { return structural_; }

private:
    bool structural_;
};

}  // namespace grnvelo
