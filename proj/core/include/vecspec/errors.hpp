#pragma once

#include <stdexcept>
#include <string>

namespace vecspec {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files (embeddings, constraints, datasets, checkpoints).
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& msg)
      : Error(path + ":" + std::to_string(line) + ": " + msg),
        path_(path), line_(line) {}
  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

// Invalid configuration values. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& msg)
      : Error("config field '" + field + "': " + msg), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Numerical failure during training (non-finite loss/gradients, collapse).
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& msg)
      : Error(path + ": " + msg) {}
};

}  // namespace vecspec
