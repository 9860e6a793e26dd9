#pragma once

#include <stdexcept>
#include <string>

namespace decorr {

enum class ErrorKind {
  InvalidArgument,  // parameter outside its documented domain
  Io,               // file could not be opened/read/written
  Format,           // malformed or unsupported file contents
  Numeric,          // instability, overflow, divergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace decorr
