// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_TESTS_CRITERIA_HPP
#define MACROSURF_TESTS_CRITERIA_HPP

#include <ostream>
#include <string>
#include <vector>

namespace macrosurf::acceptance
{

enum class Tier
{
  Fast,  // algebraic oracles only
  Full   // adds the sphere and the 2x2 equivalence fixture
};

struct Outcome
{
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Criterion ids executed by a tier, in order.
std::vector<int> CriteriaOf(Tier tier);

// Runs one criterion; errors inside it are reported as a failure. The tier
// decides whether criterion 9 also inspects the 2x2 fixture.
Outcome RunCriterion(int id, Tier tier = Tier::Full);

// "[PASS] 3  title: detail (12.3 s)"
std::string FormatOutcome(const Outcome &outcome);

// Runs a tier, printing one line per criterion as it completes. Returns the
// number of failed criteria.
int RunTier(Tier tier, std::ostream &out);

// The 2x2 grounded-substrate fixture as a run configuration document.
const char *FixtureConfig();

}  // namespace macrosurf::acceptance

#endif  // MACROSURF_TESTS_CRITERIA_HPP
