// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any
// criterion fails.

#include <iostream>
#include <string>
#include "criteria.hpp"

int main(int argc, char **argv)
{
  using macrosurf::acceptance::Tier;
  Tier tier = Tier::Full;
  if (argc > 2 || (argc == 2 && std::string(argv[1]) != "fast" && std::string(argv[1]) != "full"))
  {
    std::cerr << "usage: acceptance [fast|full]\n";
    return 2;
  }
  if (argc == 2 && std::string(argv[1]) == "fast")
  {
    tier = Tier::Fast;
  }
  const int failed = macrosurf::acceptance::RunTier(tier, std::cout);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
