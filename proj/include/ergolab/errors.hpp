#pragma once
// Error taxonomy. Everything thrown on purpose derives from Error so the CLI
// can map failures to stable exit codes: validation 2, budget 3, io 4.

#include <stdexcept>
#include <string>

namespace ergolab {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// bad parameters or an impossible request
struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// observable kind does not fit the system kind
struct IncompatibleError : ValidationError {
  explicit IncompatibleError(const std::string& msg) : ValidationError(msg) {}
};

// integer range exceeded while generating scheme pairs or orbit powers
struct OverflowError : ValidationError {
  explicit OverflowError(const std::string& msg) : ValidationError(msg) {}
};

// construction not representable at the requested grid size
struct ResolutionError : ValidationError {
  explicit ResolutionError(const std::string& msg) : ValidationError(msg) {}
};

// requested exact enumeration or trial count exceeds the configured budget
struct BudgetError : Error {
  explicit BudgetError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace ergolab
