#pragma once

#include <stdexcept>
#include <string>

namespace trap {

// Error taxonomy mirrors the CLI exit codes: config=2, data=3, capacity=4, underfill=5.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Brute-force enumeration would exceed the per-length trajectory cap.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// A required per-length count could not be filled from surviving candidates.
class UnderfillError : public std::runtime_error {
 public:
  UnderfillError(const std::string& msg, int length)
      : std::runtime_error(msg), length_(length) {}
  [[nodiscard]] int length() const { return length_; }

 private:
  int length_;
};

}  // namespace trap
