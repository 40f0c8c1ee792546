#pragma once

#include <stdexcept>
#include <string>

namespace anomalyhop {

// Exit codes used by the CLI; each error class carries one.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  config_infeasible = 2,
  dataset_not_found = 3,
  corrupt_bundle = 4,
  undefined_metric = 5,
  unsupported_bundle = 6,
  insufficient_data = 7,
  corrupt_input = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

struct ConfigInfeasibleError : Error {
  explicit ConfigInfeasibleError(const std::string& msg)
      : Error(ExitCode::config_infeasible, msg) {}
};

struct DatasetNotFoundError : Error {
  explicit DatasetNotFoundError(const std::string& msg)
      : Error(ExitCode::dataset_not_found, msg) {}
};

struct CorruptInputError : Error {
  explicit CorruptInputError(const std::string& msg)
      : Error(ExitCode::corrupt_input, msg) {}
};

struct CorruptBundleError : Error {
  explicit CorruptBundleError(const std::string& msg)
      : Error(ExitCode::corrupt_bundle, msg) {}
};

struct UnsupportedBundleError : Error {
  explicit UnsupportedBundleError(const std::string& msg)
      : Error(ExitCode::unsupported_bundle, msg) {}
};

struct UndefinedMetricError : Error {
  explicit UndefinedMetricError(const std::string& msg)
      : Error(ExitCode::undefined_metric, msg) {}
};

struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& msg)
      : Error(ExitCode::insufficient_data, msg) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& msg)
      : Error(ExitCode::failure, msg) {}
};

}  // namespace anomalyhop
