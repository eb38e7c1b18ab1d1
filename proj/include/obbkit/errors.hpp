#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace obbkit {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Covariance has an eigenvalue below -1e-9 or is not symmetric.
class NotPSD : public Error {
 public:
  using Error::Error;
};

/// Covariance is singular (det below 1e-24 px^4).
class NotPD : public Error {
 public:
  using Error::Error;
};

class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

/// A file or directory could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

class MixedImageOrCategory : public Error {
 public:
  using Error::Error;
};

class UnknownCategory : public Error {
 public:
  explicit UnknownCategory(const std::string& category)
      : Error("unknown category '" + category + "'"), category_(category) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

/// Malformed text input. `source` is a file name or other origin label;
/// `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(format(source, line, what)), source_(std::move(source)), line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line,
                            const std::string& what) {
    std::string msg = source.empty() ? std::string("<input>") : source;
    msg += ":" + std::to_string(line) + ": " + what;
    return msg;
  }

  std::string source_;
  std::size_t line_;
};

}  // namespace obbkit
