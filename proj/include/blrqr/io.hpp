// SPDX-License-Identifier: Apache-2.0
//
// BLR1 binary dumps: "BLR1", little-endian u64 m, n, b, then one record per
// block in row-major grid order. A record is a tag byte (0 dense, 1 low-rank)
// followed by b*b doubles, or by a u64 rank and the u then v values.

#pragma once

#include <iosfwd>
#include <string>

#include "blrqr/blr.hpp"

namespace blrqr {

void write_blr1(std::ostream& out, const BlrMatrix& a);
void write_blr1(const std::string& path, const BlrMatrix& a);
std::string blr1_bytes(const BlrMatrix& a);

/// Throws std::runtime_error on malformed input.
BlrMatrix read_blr1(std::istream& in);
BlrMatrix read_blr1(const std::string& path);

}  // namespace blrqr
