#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace comment_mme {

// Pipeline stage an error belongs to. The numeric value is the process exit
// code used by the command-line front end.
enum class Stage : int {
  config = 2,
  data = 3,
  provider = 4,
  fitting = 5,
};

std::string_view stage_name(Stage stage);

class Error : public std::runtime_error {
 public:
  Error(Stage stage, const std::string& what) : std::runtime_error(what), stage_(stage) {}

  Stage stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return static_cast<int>(stage_); }

 private:
  Stage stage_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Stage::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Stage::data, what) {}
};

class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& what) : Error(Stage::provider, what) {}
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error(Stage::fitting, what) {}
};

}  // namespace comment_mme
