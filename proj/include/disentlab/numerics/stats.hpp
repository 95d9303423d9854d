#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "disentlab/linalg.hpp"

namespace disentlab::numerics {

/// Equal-count (quantile) binning. Ties always share a bin, so a constant
/// input lands in a single bin.
std::vector<int> equal_count_bins(std::span<const double> x, int bins);

/// Plug-in entropy (nats) of integer labels.
double discrete_entropy(std::span<const int> labels);

/// Plug-in mutual information (nats) of two label sequences.
double discrete_mutual_information(std::span<const int> a, std::span<const int> b);

/// x is histogrammed into `bins` equal-count bins; y is taken as given.
double discretized_mutual_information(std::span<const double> x, std::span<const int> y, int bins = 20);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

/// Central differences. Throws NonFiniteEvaluation naming the coordinate.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                                  double h = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(const Vector& a, const Vector& b, double floor = 1e-6);

}  // namespace disentlab::numerics
