#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fmhom {

/// One broken invariant, addressed by a dotted field path such as
/// "setup.det_c.efficiency".
struct Violation {
  std::string path;
  std::string rule;
};

using Violations = std::vector<Violation>;

inline std::string describe(const Violations& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.path.empty() ? v.rule : v.path + ": " + v.rule;
  }
  return out;
}

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(Violations violations)
      : std::invalid_argument("validation failed: " + describe(violations)),
        violations_(std::move(violations)) {}

  const Violations& violations() const noexcept { return violations_; }

 private:
  Violations violations_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent combination of otherwise valid inputs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fmhom
