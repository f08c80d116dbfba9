#pragma once

#include "microdim/datamodel.hpp"

#include <span>
#include <vector>

namespace microdim::stats {

double mean(std::span<const double> v);
double pearson(std::span<const double> a, std::span<const double> b);
/// Average ranks, ties share the mean rank.
std::vector<double> ranks(std::span<const double> v);
double spearman(std::span<const double> a, std::span<const double> b);

/// Least-squares fit y ~ X w + c over the rows of X; returns the fitted values.
std::vector<double> affine_fit(const RealMatrix& x, std::span<const double> y);

std::vector<double> column(const RealMatrix& m, std::size_t c);

} // namespace microdim::stats
