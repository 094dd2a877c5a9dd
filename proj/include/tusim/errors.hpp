#pragma once

#include <stdexcept>
#include <string>

namespace tusim {

// Error categories map onto CLI exit codes: config 1, io 2, invariant 3.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct invariant_error : std::runtime_error {
  explicit invariant_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tusim
