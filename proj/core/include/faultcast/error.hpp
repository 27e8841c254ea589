#pragma once

#include <stdexcept>
#include <string>

namespace faultcast {

/// Caller misuse: bad arguments, unbound inputs, malformed invocation.
class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad input data: missing files, malformed corpora, unusable datasets.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Text-format error carrying a position. Column is 1-based; 0 means
/// "whole line".
class ParseError : public DataError {
public:
  ParseError(std::string msg, int line, int col = 0)
      : DataError(format(msg, line, col)), line_(line), col_(col) {}

  int line() const { return line_; }
  int col() const { return col_; }

private:
  static std::string format(const std::string& msg, int line, int col) {
    std::string s = "line " + std::to_string(line);
    if (col > 0) s += ", col " + std::to_string(col);
    return s + ": " + msg;
  }
  int line_ = 0;
  int col_ = 0;
};

}  // namespace faultcast
