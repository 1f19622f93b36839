#pragma once

#include <stdexcept>
#include <string>

namespace stgcast {

enum class ErrorKind {
  shape,
  contract,
  degenerate,
  parse,
  numeric,
  config,
  io,
};

/// Base for every error raised by the library. `module()` names the
/// component that raised it ("tensor", "graph", "data", ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

class ShapeError : public Error {
 public:
  ShapeError(std::string module, const std::string& msg) : Error(ErrorKind::shape, std::move(module), msg) {}
};

class ContractError : public Error {
 public:
  ContractError(std::string module, const std::string& msg) : Error(ErrorKind::contract, std::move(module), msg) {}
};

class DegenerateError : public Error {
 public:
  DegenerateError(std::string module, const std::string& msg)
      : Error(ErrorKind::degenerate, std::move(module), msg) {}
};

class ParseError : public Error {
 public:
  ParseError(std::string module, const std::string& msg) : Error(ErrorKind::parse, std::move(module), msg) {}
};

class NumericFault : public Error {
 public:
  NumericFault(std::string module, const std::string& msg) : Error(ErrorKind::numeric, std::move(module), msg) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string module, const std::string& msg) : Error(ErrorKind::config, std::move(module), msg) {}
};

class IoError : public Error {
 public:
  IoError(std::string module, const std::string& msg) : Error(ErrorKind::io, std::move(module), msg) {}
};

}  // namespace stgcast
