#pragma once

namespace reachplan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNoSolution = 3;
inline constexpr int kExitNoPath = 4;
inline constexpr int kExitInfeasibleTiming = 5;
inline constexpr int kExitInvalidPlan = 6;
inline constexpr int kExitExecutionCollision = 7;
inline constexpr int kExitTimeout = 8;

int cli_main(int argc, const char* const* argv);

}  // namespace reachplan
