#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sfi {

// Base for all toolchain errors that should surface as diagnostics
// rather than crashes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// An address field (offset, component, slot) did not fit its bit budget.
struct FieldOverflow : Error {
  FieldOverflow(const std::string& field, std::uint64_t value,
                std::uint32_t bits)
      : Error("field overflow: " + field + " value " + std::to_string(value) +
              " does not fit in " + std::to_string(bits) + " bits"),
        field(field),
        value(value),
        bits(bits) {}
  std::string field;
  std::uint64_t value;
  std::uint32_t bits;
};

// Text-format parse failure, annotated with a 1-based line number.
struct ParseError : Error {
  ParseError(std::size_t line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line(line) {}
  std::size_t line;
};

// Structured file (object/log/report) is malformed or has an
// unsupported format version.
struct FormatError : Error {
  using Error::Error;
};

enum class CompileErrorKind {
  LayoutOverflow,
  TooManyComponents,
  ImportViolation,
  UnsupportedConfig,
  InvalidProgram,
};

struct CompileError : Error {
  CompileError(CompileErrorKind kind, const std::string& msg)
      : Error(msg), kind(kind) {}
  CompileErrorKind kind;
};

// A log refers to addresses the layout metadata does not cover.
struct MetaMismatch : Error {
  using Error::Error;
};

}  // namespace sfi
