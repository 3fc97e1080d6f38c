#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace oed::cli {

/// Failure reported through the error record; `kind` is machine readable.
class CommandFailure : public std::runtime_error {
 public:
  CommandFailure(std::string kind, const std::string& message, int exit_code)
      : std::runtime_error(message), kind_(std::move(kind)), exit_code_(exit_code) {}
  const std::string& kind() const { return kind_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string kind_;
  int exit_code_;
};

inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBudget = 3;

const std::vector<std::string>& command_names();

/// Runs one subcommand, writing artifacts under cfg.out and progress lines to
/// `log`. Throws oed::Error or CommandFailure.
void run_command(const std::string& command, const RunConfig& cfg, std::ostream& log);

/// One-line JSON error record.
std::string error_record(const std::string& kind, const std::string& message,
                         const std::string& command);

}  // namespace oed::cli
