#ifndef CAVG_ERROR_HPP
#define CAVG_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cavg {

// Base of every error raised by the library. The CLI maps subclasses onto
// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document (XML, CSV, JSON).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        message_(what),
        line_(line),
        column_(column) {}

  // Same position, message prefixed with e.g. the file name.
  ParseError in(const std::string& context) const { return ParseError(context + ": " + message_, line_, column_); }

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

// A record that parses but violates the activation/verbalization schema.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string field, const std::string& what, const std::string& context = "")
      : Error((context.empty() ? "" : context + ": ") + "line " + std::to_string(line) + ", field '" + field +
              "': " + what),
        message_(what),
        line_(line),
        field_(std::move(field)) {}

  SchemaError in(const std::string& context) const { return SchemaError(line_, field_, message_, context); }

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string message_;
  std::size_t line_;
  std::string field_;
};

// Violated precondition of an operation.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid or incomplete experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class EmptyModelError : public Error {
 public:
  using Error::Error;
};

// Point-biserial correlation is undefined when every score is equal.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// One or more (class, language, layer, ...) cells are absent from a store.
class MissingCellError : public Error {
 public:
  explicit MissingCellError(std::vector<std::string> cells)
      : Error(describe(cells)), cells_(std::move(cells)) {}

  const std::vector<std::string>& cells() const { return cells_; }

 private:
  static std::string describe(const std::vector<std::string>& cells) {
    std::string out = std::to_string(cells.size()) + " missing cell(s):";
    std::size_t shown = 0;
    for (const auto& c : cells) {
      if (shown++ == 20) {
        out += " ...";
        break;
      }
      out += ' ';
      out += c;
    }
    return out;
  }

  std::vector<std::string> cells_;
};

}  // namespace cavg

#endif  // CAVG_ERROR_HPP
