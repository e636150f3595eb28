#pragma once

#include "dgsmlab/common.hpp"

namespace dgsmlab {

/// Root mean squared difference.
double rmse(const Vector& estimate, const Vector& truth);

/// Ranks dimensions by estimate (descending, ties by index) and scores the
/// ordering with the truth values as gains and log2(j + 1) discounts,
/// normalized by the ideal ordering. Returns 1 when the ideal DCG is zero.
double ndcg(const Vector& estimate, const Vector& truth);

}  // namespace dgsmlab
