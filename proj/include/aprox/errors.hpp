#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aprox {

// Violated precondition of a public operation.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A formula evaluated outside the region where it is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_certificate)
      : std::runtime_error(what), best_certificate_(best_certificate) {}
  double best_certificate() const noexcept { return best_certificate_; }

 private:
  double best_certificate_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractError(message);
}

}  // namespace aprox
