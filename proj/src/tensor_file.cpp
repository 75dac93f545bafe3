#include "attnlego/tensor_file.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace attnlego {

namespace {

constexpr size_t kHeaderBytes = 5 + 1 + 1 + 2;

[[noreturn]] void fail(const std::string& source, const std::string& what) {
    throw std::runtime_error(source + ": " + what);
}

uint32_t read_u32(const uint8_t* p) {
    return uint32_t{p[0]} | uint32_t{p[1]} << 8 | uint32_t{p[2]} << 16 | uint32_t{p[3]} << 24;
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

std::string format_scale(double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", s);
    return buf;
}

}  // namespace

size_t TensorFile::element_count() const {
    size_t n = 1;
    for (uint32_t d : dims)
        n *= d;
    return n;
}

std::vector<uint8_t> serialize(const TensorFile& t) {
    if (t.dims.empty() || t.dims.size() > 3)
        throw std::invalid_argument("tensor must have 1 to 3 dims");
    if (t.data.size() != t.element_count())
        throw std::invalid_argument("tensor payload size does not match its dims");
    const std::string scale = format_scale(t.scale);
    std::vector<uint8_t> out(std::begin(kTensorMagic), std::end(kTensorMagic));
    out.push_back(static_cast<uint8_t>(t.dims.size()));
    out.push_back(kTensorDtypeInt8);
    out.push_back(static_cast<uint8_t>(scale.size() & 0xff));
    out.push_back(static_cast<uint8_t>(scale.size() >> 8));
    for (uint32_t d : t.dims)
        put_u32(out, d);
    out.insert(out.end(), scale.begin(), scale.end());
    for (int8_t v : t.data)
        out.push_back(static_cast<uint8_t>(v));
    return out;
}

TensorFile parse_tensor(std::span<const uint8_t> bytes, const std::string& source) {
    if (bytes.size() < kHeaderBytes)
        fail(source, "truncated header (" + std::to_string(bytes.size()) + " bytes)");
    if (!std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), bytes.begin(),
                    [](char a, uint8_t b) { return static_cast<uint8_t>(a) == b; }))
        fail(source, "bad magic, expected ALGO1");
    const size_t ndims = bytes[5];
    if (ndims < 1 || ndims > 3)
        fail(source, "dimension count " + std::to_string(ndims) + " outside 1..3");
    if (bytes[6] != kTensorDtypeInt8)
        fail(source, "unsupported element type " + std::to_string(bytes[6]));
    const size_t scale_len = bytes[7] | size_t{bytes[8]} << 8;
    const size_t fixed = kHeaderBytes + 4 * ndims + scale_len;
    if (bytes.size() < fixed)
        fail(source, "truncated header");

    TensorFile t;
    for (size_t i = 0; i < ndims; ++i)
        t.dims.push_back(read_u32(bytes.data() + kHeaderBytes + 4 * i));
    const std::string scale(bytes.begin() + kHeaderBytes + 4 * ndims, bytes.begin() + fixed);
    char* end = nullptr;
    errno = 0;
    t.scale = std::strtod(scale.c_str(), &end);
    if (scale.empty() || end != scale.c_str() + scale.size() || errno != 0)
        fail(source, "malformed scale '" + scale + "'");

    const size_t n = t.element_count();
    if (bytes.size() - fixed != n)
        fail(source, "payload is " + std::to_string(bytes.size() - fixed) + " bytes, dims require " +
                         std::to_string(n));
    t.data.resize(n);
    std::transform(bytes.begin() + fixed, bytes.end(), t.data.begin(), [](uint8_t b) { return static_cast<int8_t>(b); });
    return t;
}

TensorFile read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(path, "cannot open for reading");
    const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_tensor(bytes, path);
}

void write_tensor_file(const std::string& path, const TensorFile& t) {
    const auto bytes = serialize(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(path, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        fail(path, "write failed");
}

TensorFile to_tensor(const Int8Matrix& m) {
    return TensorFile{{static_cast<uint32_t>(m.rows), static_cast<uint32_t>(m.cols)}, m.scale, m.data};
}

Int8Matrix to_matrix(const TensorFile& t, const std::string& source) {
    if (t.dims.size() != 2)
        fail(source, "expected a 2-D tensor, got " + std::to_string(t.dims.size()) + " dims");
    Int8Matrix m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]), t.scale);
    m.data = t.data;
    return m;
}

}  // namespace attnlego
