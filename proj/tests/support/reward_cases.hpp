#pragma once

// Handcrafted reward truth table shared by the unit tests and the
// acceptance binary.

#include <string>
#include <vector>

namespace guidex::testing {

struct RewardCase {
  std::string name;
  int expected_strict = 0;
  int expected_equivalence = 0;
  int strict = 0;
  int equivalence = 0;
};

/// Scores every case in both modes.
std::vector<RewardCase> run_reward_cases();

}  // namespace guidex::testing
