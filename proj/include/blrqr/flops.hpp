// SPDX-License-Identifier: Apache-2.0
//
// Model-flop accounting at kernel granularity.
//
// Counters are integers so that totals are independent of the order in which
// concurrent tasks report their work.

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <string_view>

namespace blrqr {

enum class FlopKind : std::size_t {
  DenseQr = 0,   // Householder / pivoted / MGS panel factorizations
  TFactor,       // accumulation of compact-WY T matrices
  Gemm,          // matrix-matrix and matrix-vector products
  RoundedAdd,    // everything done inside a rounded low-rank addition
  Compress,      // rank-revealing compression
  Count
};

inline constexpr std::size_t kFlopKindCount = static_cast<std::size_t>(FlopKind::Count);

std::string_view flop_kind_name(FlopKind kind);

struct FlopReport {
  std::array<std::uint64_t, kFlopKindCount> by_kind{};

  std::uint64_t total() const;
  std::uint64_t operator[](FlopKind kind) const { return by_kind[static_cast<std::size_t>(kind)]; }
  bool operator==(const FlopReport&) const = default;
};

class FlopCounter {
 public:
  void accumulate(FlopKind kind, std::uint64_t flops);
  FlopReport report() const;
  void reset();

  void set_enabled(bool enabled) { enabled_.store(enabled, std::memory_order_relaxed); }
  bool enabled() const { return enabled_.load(std::memory_order_relaxed); }

 private:
  std::array<std::atomic<std::uint64_t>, kFlopKindCount> counts_{};
  std::atomic<bool> enabled_{false};
};

/// Process-wide counter that every kernel reports to.
FlopCounter& flop_counter();

/// Report flops to the global counter, honoring any active FlopScope.
void count_flops(FlopKind kind, std::uint64_t flops);

/// Attributes all flops reported on this thread to `kind` while alive.
/// Scopes nest; the outermost one wins.
class FlopScope {
 public:
  explicit FlopScope(FlopKind kind);
  ~FlopScope();
  FlopScope(const FlopScope&) = delete;
  FlopScope& operator=(const FlopScope&) = delete;

 private:
  bool owner_ = false;
};

/// Enables and resets the global counter for the lifetime of the object.
class ScopedFlopCounting {
 public:
  ScopedFlopCounting();
  ~ScopedFlopCounting();
  ScopedFlopCounting(const ScopedFlopCounting&) = delete;
  ScopedFlopCounting& operator=(const ScopedFlopCounting&) = delete;

  FlopReport report() const { return flop_counter().report(); }

 private:
  bool was_enabled_;
};

// Closed-form model costs.
std::uint64_t qr_flops(std::uint64_t rows, std::uint64_t cols);      // 2hw^2 - (2/3)w^3
std::uint64_t tfactor_flops(std::uint64_t rows, std::uint64_t cols); // hw^2
std::uint64_t gemm_flops(std::uint64_t m, std::uint64_t n, std::uint64_t k);  // 2mnk

}  // namespace blrqr
