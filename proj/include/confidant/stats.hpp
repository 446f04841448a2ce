#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace confidant::stats {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::map<std::string, double> extra;  // e.g. "df"
};

void to_json(nlohmann::json& j, const TestResult& r);

// Royston's AS R94 approximation, 3 <= n <= 5000. Throws TooFewSamples,
// ZeroVariance, or InvalidArgument for n > 5000.
TestResult shapiro_wilk(std::vector<double> xs);

enum class LeveneCenter { Mean, Median };

// Two-sample Levene statistic with an F(1, N - 2) p-value. Throws
// TooFewSamples; ZeroVariance when every absolute deviation is identical.
TestResult levene(const std::vector<double>& xs, const std::vector<double>& ys,
                  LeveneCenter center = LeveneCenter::Mean);

// Two-sided; extra["df"] holds the Welch-Satterthwaite degrees of freedom.
// Throws TooFewSamples, BothZeroVariance.
TestResult welch_t(const std::vector<double>& xs, const std::vector<double>& ys);

// U = min(U1, U2). Exact two-sided p when n1 + n2 <= 16 and there are no ties,
// otherwise the normal approximation with tie and continuity corrections.
// extra["exact"] is 1 or 0. Throws TooFewSamples on an empty sample.
TestResult mann_whitney_u(const std::vector<double>& xs, const std::vector<double>& ys);

inline constexpr std::size_t kMannWhitneyExactLimit = 16;

// Number of (n1, n2) rank arrangements for each value of U1, index = U1.
std::vector<double> mann_whitney_counts(std::size_t n1, std::size_t n2);

}  // namespace confidant::stats
