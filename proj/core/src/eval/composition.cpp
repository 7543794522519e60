#include "latalign/eval/composition.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "latalign/error.hpp"

namespace latalign {

namespace {

void enumerate(std::size_t remaining, std::size_t part, Composition& cur, std::vector<Composition>& out) {
  if (part + 1 == cur.size()) {
    cur[part] = remaining;
    out.push_back(cur);
    return;
  }
  for (std::size_t c = remaining + 1; c-- > 0;) {
    cur[part] = c;
    enumerate(remaining - c, part + 1, cur, out);
  }
}

using u128 = unsigned __int128;

bool exact_multinomial(std::span<const std::size_t> counts, u128& out) {
  // Product of binomials C(c_0 + ... + c_i, c_i), each computed incrementally.
  u128 result = 1;
  std::size_t total = 0;
  const u128 limit = std::numeric_limits<u128>::max();
  for (std::size_t c : counts) {
    u128 binom = 1;
    for (std::size_t j = 1; j <= c; ++j) {
      const std::size_t top = total + j;
      if (binom > limit / top) return false;
      binom = binom * top / j;  // exact: binom * top is divisible by j at every step
    }
    total += c;
    if (binom != 0 && result > limit / binom) return false;
    result *= binom;
  }
  out = result;
  return true;
}

}  // namespace

std::vector<Composition> enumerate_compositions(std::size_t n, std::size_t k) {
  require(k >= 1, ErrorCode::InvalidArgument, "compositions need at least one part");
  std::vector<Composition> out;
  out.reserve(composition_count(n, k));
  Composition cur(k, 0);
  enumerate(n, 0, cur, out);
  return out;
}

std::size_t composition_count(std::size_t n, std::size_t k) {
  // C(n + k - 1, k - 1)
  std::size_t r = 1;
  for (std::size_t j = 1; j < k; ++j) r = r * (n + j) / j;
  return r;
}

double multinomial_coefficient(std::span<const std::size_t> counts) {
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (n <= 64) {
    u128 exact = 0;
    if (exact_multinomial(counts, exact)) return static_cast<double>(exact);
  }
  double lg = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::size_t c : counts) lg -= std::lgamma(static_cast<double>(c) + 1.0);
  return std::exp(lg);
}

double multinomial_probability(std::span<const std::size_t> counts, std::span<const double> probs) {
  require(counts.size() == probs.size(), ErrorCode::ShapeMismatch, "one probability per class required");
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  double logp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    if (probs[i] <= 0.0) return 0.0;
    logp += static_cast<double>(counts[i]) * std::log(probs[i]);
  }
  if (n <= 64) {
    u128 exact = 0;
    if (exact_multinomial(counts, exact)) return static_cast<double>(exact) * std::exp(logp);
  }
  double lg = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::size_t c : counts) lg -= std::lgamma(static_cast<double>(c) + 1.0);
  return std::exp(lg + logp);
}

std::size_t CompositionGrid::index_of(const Composition& c) const {
  for (std::size_t i = 0; i < compositions.size(); ++i)
    if (compositions[i] == c) return i;
  fail(ErrorCode::IncompleteGrid, "composition not in grid");
}

CompositionGrid make_grid(std::size_t n, std::size_t k, std::span<const double> class_probs) {
  require(class_probs.size() == k, ErrorCode::ShapeMismatch, "one class probability per class required");
  const double total = std::accumulate(class_probs.begin(), class_probs.end(), 0.0);
  require(std::abs(total - 1.0) < 1e-9, ErrorCode::InvalidArgument, "class probabilities must sum to 1");
  CompositionGrid g;
  g.n = n;
  g.k = k;
  g.compositions = enumerate_compositions(n, k);
  g.accuracy.assign(g.compositions.size(), std::numeric_limits<double>::quiet_NaN());
  g.standard_error.assign(g.compositions.size(), 0.0);
  for (const auto& c : g.compositions) g.weights.push_back(multinomial_probability(c, class_probs));
  return g;
}

double weighted_accuracy(const CompositionGrid& grid, std::span<const double> class_probs) {
  require(grid.accuracy.size() == grid.compositions.size() && !grid.compositions.empty(),
          ErrorCode::IncompleteGrid, "grid has no entries");
  double wa = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(std::isfinite(grid.accuracy[i]), ErrorCode::IncompleteGrid, "grid entry " + std::to_string(i) + " is missing");
    wa += multinomial_probability(grid.compositions[i], class_probs) * grid.accuracy[i];
  }
  return wa;
}

void write_grid_csv(const std::filesystem::path& path, const CompositionGrid& grid) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write " + path.string());
  out.precision(17);
  for (std::size_t c = 0; c < grid.k; ++c) out << "c" << c << ",";
  out << "accuracy,weight,standard_error\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t c : grid.compositions[i]) out << c << ",";
    out << grid.accuracy[i] << "," << grid.weights[i] << "," << grid.standard_error[i] << "\n";
  }
}

}  // namespace latalign
