#include "reasonprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace reasonprobe::stats {

namespace {

constexpr std::uint64_t kTableSize = 10000;

const std::vector<double>& log_factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kTableSize + 1, 0.0);
    // Kahan summation keeps the running sum within a few ulps.
    double sum = 0.0;
    double comp = 0.0;
    for (std::uint64_t k = 2; k <= kTableSize; ++k) {
      const double y = std::log(static_cast<double>(k)) - comp;
      const double s = sum + y;
      comp = (s - sum) - y;
      sum = s;
      t[k] = sum;
    }
    return t;
  }();
  return table;
}

}  // namespace

double log_factorial(std::uint64_t k) {
  if (k <= kTableSize) return log_factorial_table()[k];
  return std::lgamma(static_cast<double>(k) + 1.0);
}

double log_choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) throw std::invalid_argument("log_choose: k > n");
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double hypergeom_pmf(std::int64_t a, std::int64_t row1, std::int64_t col1, std::int64_t n_total) {
  if (n_total < 0 || row1 < 0 || col1 < 0 || row1 > n_total || col1 > n_total)
    throw std::invalid_argument("hypergeom_pmf: inconsistent margins");
  const std::int64_t lo = std::max<std::int64_t>(0, row1 + col1 - n_total);
  const std::int64_t hi = std::min(row1, col1);
  if (a < lo || a > hi)
    throw std::invalid_argument("hypergeom_pmf: a=" + std::to_string(a) + " outside support [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
  const auto u = [](std::int64_t v) { return static_cast<std::uint64_t>(v); };
  return std::exp(log_choose(u(col1), u(a)) + log_choose(u(n_total - col1), u(row1 - a)) -
                  log_choose(u(n_total), u(row1)));
}

double fisher_exact_two_sided(const ContingencyTable& t) {
  if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0)
    throw std::invalid_argument("fisher_exact_two_sided: negative cell");
  const std::int64_t row1 = t.a + t.b;
  const std::int64_t row2 = t.c + t.d;
  if (row1 < 1 || row2 < 1)
    throw std::invalid_argument("fisher_exact_two_sided: both rows need at least one member");
  const std::int64_t col1 = t.a + t.c;
  const std::int64_t n = row1 + row2;
  const std::int64_t lo = std::max<std::int64_t>(0, row1 + col1 - n);
  const std::int64_t hi = std::min(row1, col1);

  const double p_obs = hypergeom_pmf(t.a, row1, col1, n);
  const double cutoff = p_obs * (1.0 + kTieSlack);
  double p = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const double px = hypergeom_pmf(x, row1, col1, n);
    if (px <= cutoff) p += px;
  }
  return std::clamp(p, 0.0, 1.0);
}

std::string_view to_string(BaselineMode m) {
  return m == BaselineMode::Complement ? "complement" : "fixed";
}

BaselineMode baseline_from_string(std::string_view s) {
  if (s == "complement") return BaselineMode::Complement;
  if (s == "fixed") return BaselineMode::FixedRate;
  throw std::invalid_argument("baseline must be 'complement' or 'fixed', got '" + std::string(s) + "'");
}

ContingencyTable build_table(std::int64_t cluster_correct, std::int64_t cluster_total,
                             std::int64_t all_correct, std::int64_t all_total, BaselineMode mode,
                             double fixed_rate) {
  if (cluster_correct < 0 || cluster_correct > cluster_total || cluster_total > all_total ||
      all_correct > all_total || cluster_correct > all_correct)
    throw std::invalid_argument("build_table: cluster counts inconsistent with corpus counts");
  ContingencyTable t;
  t.a = cluster_correct;
  t.b = cluster_total - cluster_correct;
  const std::int64_t m = all_total - cluster_total;
  if (mode == BaselineMode::Complement) {
    t.c = all_correct - cluster_correct;
    t.d = m - t.c;
  } else {
    if (!(fixed_rate >= 0.0 && fixed_rate <= 1.0))
      throw std::invalid_argument("build_table: fixed rate must lie in [0, 1]");
    t.c = std::llround(fixed_rate * static_cast<double>(m));
    t.d = m - t.c;
  }
  return t;
}

}  // namespace reasonprobe::stats
