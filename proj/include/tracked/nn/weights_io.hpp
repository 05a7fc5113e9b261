#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "tracked/nn/model.hpp"

namespace tracked::nn {

inline constexpr char kWeightsMagic[8] = {'T', 'R', 'K', 'L', 'S', 'T', 'M', '\0'};
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

/// Little-endian container; layout is described in docs/weights-format.md.
void write_weights(std::ostream& out, const ModelBundle& bundle);
ModelBundle read_weights(std::istream& in);

void save_weights(const std::string& path, const ModelBundle& bundle);
ModelBundle load_weights(const std::string& path);

}  // namespace tracked::nn
