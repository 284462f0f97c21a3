// SPDX-License-Identifier: Apache-2.0

#include "blrqr/flops.hpp"

#include <algorithm>
#include <optional>

namespace blrqr {

namespace {
thread_local std::optional<FlopKind> scope_kind;
}  // namespace

std::string_view flop_kind_name(FlopKind kind) {
  switch (kind) {
    case FlopKind::DenseQr: return "dense_qr";
    case FlopKind::TFactor: return "t_factor";
    case FlopKind::Gemm: return "gemm";
    case FlopKind::RoundedAdd: return "rounded_add";
    case FlopKind::Compress: return "compress";
    case FlopKind::Count: break;
  }
  return "unknown";
}

std::uint64_t FlopReport::total() const {
  std::uint64_t sum = 0;
  for (auto v : by_kind) sum += v;
  return sum;
}

void FlopCounter::accumulate(FlopKind kind, std::uint64_t flops) {
  if (!enabled()) return;
  counts_[static_cast<std::size_t>(kind)].fetch_add(flops, std::memory_order_relaxed);
}

FlopReport FlopCounter::report() const {
  FlopReport r;
  for (std::size_t i = 0; i < kFlopKindCount; ++i) r.by_kind[i] = counts_[i].load();
  return r;
}

void FlopCounter::reset() {
  for (auto& c : counts_) c.store(0);
}

FlopCounter& flop_counter() {
  static FlopCounter counter;
  return counter;
}

void count_flops(FlopKind kind, std::uint64_t flops) {
  auto& counter = flop_counter();
  if (!counter.enabled()) return;
  counter.accumulate(scope_kind.value_or(kind), flops);
}

FlopScope::FlopScope(FlopKind kind) {
  if (!scope_kind) {
    scope_kind = kind;
    owner_ = true;
  }
}

FlopScope::~FlopScope() {
  if (owner_) scope_kind.reset();
}

ScopedFlopCounting::ScopedFlopCounting() : was_enabled_(flop_counter().enabled()) {
  flop_counter().reset();
  flop_counter().set_enabled(true);
}

ScopedFlopCounting::~ScopedFlopCounting() { flop_counter().set_enabled(was_enabled_); }

std::uint64_t qr_flops(std::uint64_t rows, std::uint64_t cols) {
  const std::uint64_t w = std::min(rows, cols);
  return 2 * rows * cols * w - (2 * w * w * w) / 3;
}

std::uint64_t tfactor_flops(std::uint64_t rows, std::uint64_t cols) { return rows * cols * cols; }

std::uint64_t gemm_flops(std::uint64_t m, std::uint64_t n, std::uint64_t k) { return 2 * m * n * k; }

}  // namespace blrqr
