// SPDX-License-Identifier: Apache-2.0
//
// Accuracy and cost figures for one factorization run.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>

#include "blrqr/blr_qr.hpp"
#include "blrqr/flops.hpp"

namespace blrqr {

/// Largest n for which Q and R are materialized densely.
inline constexpr Index kMaxMetricsCols = 8192;
/// Largest n for which the condition number is computed.
inline constexpr Index kMaxKappaCols = 2048;

struct AccuracyReport {
  double res = 0.0;   // ||Q R - A||_F / ||A||_F
  double orth = 0.0;  // ||Q^T Q - I||_F / sqrt(n), economy Q
  std::optional<double> kappa_f;
  Index max_rank = 0;
  FlopReport flops;
  std::map<std::string, double> wall_ms;
  std::size_t memory_bytes = 0;
};

/// Res, Orth and the rank/memory figures of R. Throws std::invalid_argument
/// when n exceeds kMaxMetricsCols or the shapes disagree.
AccuracyReport compute_metrics(const Matrix& a_dense, const FactorizationResult& f, bool with_kappa = false);

/// (sum sigma_i^2)^(1/2) (sum sigma_i^-2)^(1/2); infinite for a singular matrix.
double frobenius_condition(const Matrix& a);

}  // namespace blrqr
