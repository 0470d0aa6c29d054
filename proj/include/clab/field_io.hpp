#pragma once

#include <string>

#include "clab/grid.hpp"

namespace clab {

// CKF1 container: "CKF1", uint32 LE header length, JSON header
// {n, L, dtype:"c128", layout:"row-major"}, then (re,im) float64 LE pairs.
void write_field(const std::string& path, const GridField& f);
GridField read_field(const std::string& path);

std::string encode_field(const GridField& f);
GridField decode_field(const std::string& bytes);

}  // namespace clab
