#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace oed::cli {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  /// Measured quantities behind the verdict.
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  /// Criteria to run, 1..12; empty runs all.
  std::vector<int> criteria;
  std::uint64_t seed = 20110101;
  std::size_t workers = 1;
  /// Working directory for the determinism check.
  std::filesystem::path scratch = "acceptance_scratch";
  /// Called after each criterion.
  std::function<void(const CriterionResult&)> on_result;
};

constexpr int kCriterionCount = 12;

/// Runs the acceptance checks in increasing order. A criterion that throws
/// is recorded as failed.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

/// `[PASS] 3 name (12.3 s): detail`.
std::string format_result(const CriterionResult& r);

}  // namespace oed::cli
