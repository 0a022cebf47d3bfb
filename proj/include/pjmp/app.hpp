#pragma once

// Command orchestration behind the CLI. Commands return their output files
// in memory, so the tool only decides where the bytes go.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pjmp/config.hpp"
#include "pjmp/error.hpp"

namespace pjmp {

namespace exit_code {
constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kCapacity = 3;
constexpr int kCheckFailure = 4;
constexpr int kNumeric = 5;
}  // namespace exit_code

int exit_code_for(ErrorCode code);

enum class VariantSelection { Paper, Empirical, Both };

struct AppOptions {
  std::size_t workers = 1;
  VariantSelection variants = VariantSelection::Both;
  // overrides output.formats when set
  std::optional<std::vector<std::string>> formats;
};

struct AppResult {
  int exit_code = exit_code::kOk;
  // (file name, content) in emission order
  std::vector<std::pair<std::string, std::string>> files;
  std::string summary;  // one human-readable line
  std::string error;
};

/// enumerate | constants | verify | simulate.
AppResult run_command(const std::string& command, const RunConfig& config, const AppOptions& options = {});

}  // namespace pjmp
