#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace latalign {

/// Class counts (c_0, ..., c_{k-1}) summing to the context size.
using Composition = std::vector<std::size_t>;

/// All weak compositions of n into k parts, lexicographically descending in c_0.
std::vector<Composition> enumerate_compositions(std::size_t n, std::size_t k);
std::size_t composition_count(std::size_t n, std::size_t k);

/// n! / prod(c_i!). Exact integer arithmetic while it fits 128 bits, log-gamma beyond
/// (always log-gamma above n = 64).
double multinomial_coefficient(std::span<const std::size_t> counts);
/// Probability of the composition under a multinomial with the given class probabilities.
double multinomial_probability(std::span<const std::size_t> counts, std::span<const double> probs);

/// Accuracy per composition of a fixed-size context together with the
/// multinomial weight of each composition.
struct CompositionGrid {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<Composition> compositions;
  std::vector<double> accuracy;  // NaN marks a missing entry
  std::vector<double> weights;
  /// Standard error of each accuracy entry over the resampled contexts.
  std::vector<double> standard_error;

  std::size_t size() const noexcept { return compositions.size(); }
  std::size_t index_of(const Composition& c) const;
};

CompositionGrid make_grid(std::size_t n, std::size_t k, std::span<const double> class_probs);

/// Sum of weight * accuracy. Weights are recomputed from class_probs.
double weighted_accuracy(const CompositionGrid& grid, std::span<const double> class_probs);

/// Triangle-plot rows: c_0, ..., c_{k-1}, accuracy, weight, standard_error.
void write_grid_csv(const std::filesystem::path& path, const CompositionGrid& grid);

}  // namespace latalign
