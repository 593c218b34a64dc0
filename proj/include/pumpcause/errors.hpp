#ifndef PUMPCAUSE_ERRORS_HPP
#define PUMPCAUSE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pumpcause {

/// Bad user input: malformed files, out-of-range values, invalid config.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A row of an input file could not be parsed or violated a constraint.
class ParseError : public ValidationError {
public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : ValidationError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// A numerical stage failed (singular covariance, non-finite density, ...).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace pumpcause

#endif  // PUMPCAUSE_ERRORS_HPP
