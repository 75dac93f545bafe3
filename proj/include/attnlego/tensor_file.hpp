#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attnlego/config.hpp"

namespace attnlego {

inline constexpr char kTensorMagic[5] = {'A', 'L', 'G', 'O', '1'};
inline constexpr uint8_t kTensorDtypeInt8 = 1;

/// On-disk int8 tensor, little-endian, row-major.
///
/// Layout: magic "ALGO1", u8 ndims (1..3), u8 dtype (1 = int8),
/// u16 scale-text length, ndims x u32 dims, scale as decimal text,
/// then product(dims) payload bytes.
struct TensorFile {
    std::vector<uint32_t> dims;
    double scale = 1.0;
    std::vector<int8_t> data;

    size_t element_count() const;
    friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

std::vector<uint8_t> serialize(const TensorFile& t);
/// `source` names the input in error messages (usually the file path).
TensorFile parse_tensor(std::span<const uint8_t> bytes, const std::string& source);

/// Throws std::runtime_error naming the path on I/O or format errors.
TensorFile read_tensor_file(const std::string& path);
void write_tensor_file(const std::string& path, const TensorFile& t);

TensorFile to_tensor(const Int8Matrix& m);
/// Requires exactly two dims.
Int8Matrix to_matrix(const TensorFile& t, const std::string& source);

}  // namespace attnlego
