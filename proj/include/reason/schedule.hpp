#pragma once

#include <string>

#include "reason/types.hpp"

namespace reason {

/// How the per-epoch regularization level is chosen.
///   Theory:    the analysis formulas, driven by ProblemConstants.
///   Geometric: lambda_i = lambda1 * decay^(i-1); keeps lambda_i
///              proportional to the shrinking radius without requiring
///              knowledge of (gamma, sigma, G).
///   Fixed:     lambda_i = lambda1 for every epoch.
enum class LambdaSchedule { Theory, Geometric, Fixed };

inline std::string to_string(LambdaSchedule s) {
    switch (s) {
        case LambdaSchedule::Theory: return "theory";
        case LambdaSchedule::Geometric: return "geometric";
        case LambdaSchedule::Fixed: return "fixed";
    }
    return "theory";
}

inline LambdaSchedule schedule_from_string(const std::string& s) {
    if (s == "theory") return LambdaSchedule::Theory;
    if (s == "geometric") return LambdaSchedule::Geometric;
    if (s == "fixed") return LambdaSchedule::Fixed;
    throw ConfigError("unknown schedule '" + s + "' (expected theory|geometric|fixed)");
}

}  // namespace reason
