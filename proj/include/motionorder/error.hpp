#pragma once

#include <stdexcept>
#include <string>

namespace motionorder {

// Base for every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (CSV row, config line). Carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, long line)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  long line() const noexcept { return line_; }

private:
  long line_;
};

// Structurally inconsistent data, e.g. an entity missing from a frame.
class IntegrityError : public Error {
public:
  using Error::Error;
};

// Values outside their admissible range (non-finite coordinates, bad parameters).
class ValidationError : public Error {
public:
  using Error::Error;
};

class DegenerateInputError : public Error {
public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  NumericalError(const std::string& msg, long frame)
      : Error("frame " + std::to_string(frame) + ": " + msg), frame_(frame) {}
  long frame() const noexcept { return frame_; }

private:
  long frame_;
};

// A caller violated a documented precondition (e.g. rendering lines without coordinates).
class ContractError : public Error {
public:
  using Error::Error;
};

class SizeError : public Error {
public:
  using Error::Error;
};

} // namespace motionorder
