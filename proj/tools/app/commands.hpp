#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace vbdecoh::app {

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kPartialFailure = 2, kTotalFailure = 3 };

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> preset;
  std::optional<int> threads;
  std::optional<std::string> output_dir;
};

int cmd_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_oracle_check(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Writes the synthetic hyperfine dataset for every site within `radius`.
int cmd_make_dataset(double radius, const std::filesystem::path& path, std::ostream& out, std::ostream& err);

}  // namespace vbdecoh::app
