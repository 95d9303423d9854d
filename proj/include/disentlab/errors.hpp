#pragma once

#include <stdexcept>
#include <string>

namespace disentlab {

/// A NaN or infinity showed up where the math requires finite values.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training blew up; carries the step at which it happened.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

}  // namespace disentlab
