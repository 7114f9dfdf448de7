#pragma once

#include <stdexcept>
#include <string>

namespace chaneff {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside the operation's domain (bad t, too few steps, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class RenderError : public Error {
 public:
  using Error::Error;
};

/// Malformed manifest, cache entry, embeddings file or report bundle.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Backend unreachable, protocol violation, or an invalid embedding returned.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// A metric cannot be computed from the data (zero-variance sweep etc).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace chaneff
