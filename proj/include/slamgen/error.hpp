#ifndef SLAMGEN_ERROR_HPP
#define SLAMGEN_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace slamgen {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated input file. Carries the byte offset (binary
/// formats) or the 1-based line number (text formats) of the failure.
class ParseError : public Error {
 public:
  enum class Kind { kByteOffset, kLine };

  ParseError(const std::string& what, Kind kind, std::uint64_t where)
      : Error(what + (kind == Kind::kByteOffset ? " at byte offset " : " at line ") +
              std::to_string(where)),
        kind_(kind),
        where_(where) {}

  static ParseError at_offset(const std::string& what, std::uint64_t offset) {
    return ParseError(what, Kind::kByteOffset, offset);
  }
  static ParseError at_line(const std::string& what, std::uint64_t line) {
    return ParseError(what, Kind::kLine, line);
  }

  Kind kind() const noexcept { return kind_; }
  std::uint64_t where() const noexcept { return where_; }

 private:
  Kind kind_;
  std::uint64_t where_;
};

}  // namespace slamgen

#endif  // SLAMGEN_ERROR_HPP
