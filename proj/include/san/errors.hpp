#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace san {

// Parameter outside the valid domain of its family (non-SPD, nonpositive
// concentration, ...).
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller violated a precondition: mismatched dimensions, families, layouts.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string term, const std::string& what)
        : std::runtime_error(what + " (term: " + term + ")"), term_(std::move(term)) {}

    const std::string& term() const noexcept { return term_; }

private:
    std::string term_;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

}  // namespace san
