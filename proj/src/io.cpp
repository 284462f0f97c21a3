// SPDX-License-Identifier: Apache-2.0

#include "blrqr/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace blrqr {

namespace {

static_assert(std::endian::native == std::endian::little, "BLR1 io assumes a little-endian host");

constexpr char kMagic[4] = {'B', 'L', 'R', '1'};

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("BLR1: truncated header");
  return v;
}

// Row-major payload, matching the in-memory layout of Matrix.
void put_values(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix get_values(std::istream& in, Index rows, Index cols) {
  Matrix m(rows, cols);
  const auto bytes = static_cast<std::streamsize>(m.size() * sizeof(double));
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(m.data()), bytes))
    throw std::runtime_error("BLR1: truncated block payload");
  return m;
}

}  // namespace

void write_blr1(std::ostream& out, const BlrMatrix& a) {
  out.write(kMagic, sizeof kMagic);
  put_u64(out, static_cast<std::uint64_t>(a.rows()));
  put_u64(out, static_cast<std::uint64_t>(a.cols()));
  put_u64(out, static_cast<std::uint64_t>(a.block_size()));
  for (Index i = 0; i < a.block_rows(); ++i) {
    for (Index j = 0; j < a.block_cols(); ++j) {
      const Block& blk = a.block(i, j);
      if (blk.is_dense()) {
        out.put(0);
        put_values(out, blk.dense());
      } else {
        out.put(1);
        put_u64(out, static_cast<std::uint64_t>(blk.rank()));
        put_values(out, blk.low_rank().u);
        put_values(out, blk.low_rank().v);
      }
    }
  }
  if (!out) throw std::runtime_error("BLR1: write failed");
}

void write_blr1(const std::string& path, const BlrMatrix& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("BLR1: cannot open " + path + " for writing");
  write_blr1(out, a);
}

std::string blr1_bytes(const BlrMatrix& a) {
  std::ostringstream out(std::ios::binary);
  write_blr1(out, a);
  return std::move(out).str();
}

BlrMatrix read_blr1(std::istream& in) {
  char magic[4];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("BLR1: bad magic");
  const auto m = static_cast<Index>(get_u64(in));
  const auto n = static_cast<Index>(get_u64(in));
  const auto b = static_cast<Index>(get_u64(in));
  if (b <= 0 || m <= 0 || n <= 0 || m % b != 0 || n % b != 0) throw std::runtime_error("BLR1: bad dimensions");

  BlrStructure structure(m, n, b);
  std::vector<Block> blocks;
  for (Index i = 0; i < structure.p(); ++i) {
    for (Index j = 0; j < structure.q(); ++j) {
      const int tag = in.get();
      if (tag == 0) {
        blocks.emplace_back(get_values(in, b, b));
      } else if (tag == 1) {
        if (i == j) throw std::runtime_error("BLR1: low-rank diagonal block");
        const auto r = static_cast<Index>(get_u64(in));
        if (r > b) throw std::runtime_error("BLR1: rank exceeds block size");
        LowRankBlock lr;
        lr.u = get_values(in, b, r);
        lr.v = get_values(in, b, r);
        blocks.emplace_back(std::move(lr));
        structure.set_admissible(i, j, true);
      } else {
        throw std::runtime_error("BLR1: bad block tag");
      }
    }
  }
  BlrMatrix out(structure);
  for (Index i = 0; i < structure.p(); ++i)
    for (Index j = 0; j < structure.q(); ++j)
      out.set_block(i, j, std::move(blocks[structure.cell(i, j)]));
  return out;
}

BlrMatrix read_blr1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("BLR1: cannot open " + path);
  return read_blr1(in);
}

}  // namespace blrqr
