#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace senticomp {

/// Base class for every error this library raises deliberately.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed s-expression input. Carries the byte offset of the defect.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t byte_offset)
      : Error(msg + " (byte " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

/// Tree node with a child count other than 0 or 2.
struct ArityError : Error {
  using Error::Error;
};

/// Sentiment label outside the admissible class range.
struct LabelError : Error {
  using Error::Error;
};

/// Tensor operands with incompatible shapes. Message names the op and shapes.
struct ShapeError : Error {
  using Error::Error;
};

/// Argument outside an operation's domain (empty span, leaf where a phrase
/// is required, ...).
struct DomainError : Error {
  using Error::Error;
};

/// API misuse that leaves an object in a state it cannot proceed from,
/// e.g. backward() called twice on one graph.
struct StateError : Error {
  using Error::Error;
};

/// Tree spans and subtoken alignment disagree. Message names the node.
struct AlignmentError : Error {
  using Error::Error;
};

/// Invalid or inconsistent configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Prediction set does not cover the nodes an evaluation needs.
struct CoverageError : Error {
  using Error::Error;
};

/// Input sequence longer than the encoder's maximum length.
struct LengthError : Error {
  using Error::Error;
};

/// Filesystem failure (unreadable, unwritable, truncated).
struct IoError : Error {
  using Error::Error;
};

/// Non-finite loss or gradient during training. Names the first offender.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace senticomp
