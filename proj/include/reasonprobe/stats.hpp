#pragma once

#include <cstdint>
#include <string_view>

namespace reasonprobe::stats {

inline constexpr double kSignificanceLevel = 0.05;

/// Observed probabilities within this relative slack of the observed
/// table's probability count as "at most as probable".
inline constexpr double kTieSlack = 1e-7;

/// ln(k!). Exact-summation table up to 10^4, lgamma beyond.
double log_factorial(std::uint64_t k);

double log_choose(std::uint64_t n, std::uint64_t k);

/// P(X = a) for X ~ Hypergeometric(N, col1 successes, row1 draws).
/// Throws std::invalid_argument when `a` is outside the support.
double hypergeom_pmf(std::int64_t a, std::int64_t row1, std::int64_t col1, std::int64_t n_total);

/// Rows are (in-cluster, out-group); columns are (correct, failed).
struct ContingencyTable {
  std::int64_t a = 0;  // in-cluster correct
  std::int64_t b = 0;  // in-cluster failed
  std::int64_t c = 0;  // out-group correct
  std::int64_t d = 0;  // out-group failed
};

/// Sum of the probabilities of all tables with the observed margins that
/// are at most as probable as the observed one. Requires a+b >= 1 and c+d >= 1.
double fisher_exact_two_sided(const ContingencyTable& t);

inline bool is_significant(double p_value) { return p_value < kSignificanceLevel; }

enum class BaselineMode { Complement, FixedRate };

std::string_view to_string(BaselineMode m);
BaselineMode baseline_from_string(std::string_view s);

/// Complement: out-group is every other clustered sentence. FixedRate: the
/// out-group has the same size but round(rate * m) correct members.
ContingencyTable build_table(std::int64_t cluster_correct, std::int64_t cluster_total,
                             std::int64_t all_correct, std::int64_t all_total, BaselineMode mode,
                             double fixed_rate);

}  // namespace reasonprobe::stats
