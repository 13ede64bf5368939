#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "repalign/errors.hpp"
#include "repalign/matrix.hpp"

namespace repalign {

// RAMX binary matrix format:
//   bytes 0-3   magic "RAMX"
//   bytes 4-7   version, u32 little-endian (currently 1)
//   bytes 8-15  rows, u64 little-endian
//   bytes 16-23 cols, u64 little-endian
//   then rows*cols IEEE-754 binary64 little-endian, row-major
inline constexpr std::uint32_t kRamxVersion = 1;
inline constexpr char kRamxMagic[4] = {'R', 'A', 'M', 'X'};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace detail

inline std::string matrix_to_ramx(const Matrix& m) {
    std::string out;
    out.reserve(24 + 8 * m.data().size());
    out.append(kRamxMagic, 4);
    detail::put_u32_le(out, kRamxVersion);
    detail::put_u64_le(out, m.rows());
    detail::put_u64_le(out, m.cols());
    for (double v : m.data()) detail::put_u64_le(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

inline Matrix matrix_from_ramx(const std::string& bytes, const std::string& origin = "<memory>") {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kRamxMagic, 4) != 0)
        throw bad_magic_error(origin + ": not a RAMX file (bad magic)");
    if (bytes.size() < 24)
        throw truncated_error(origin + ": truncated RAMX header");
    const std::uint32_t version = detail::get_u32_le(p + 4);
    if (version != kRamxVersion)
        throw version_error(origin + ": unsupported RAMX version " + std::to_string(version));
    const std::uint64_t rows = detail::get_u64_le(p + 8);
    const std::uint64_t cols = detail::get_u64_le(p + 16);
    if (rows == 0 || cols == 0)
        throw dim_error(origin + ": RAMX header declares empty matrix");
    const std::uint64_t count = rows * cols;
    if (bytes.size() < 24 + count * 8)
        throw truncated_error(origin + ": payload holds " +
                              std::to_string((bytes.size() - 24) / 8) + " values, header claims " +
                              std::to_string(count));
    std::vector<double> data(count);
    for (std::uint64_t i = 0; i < count; ++i)
        data[i] = std::bit_cast<double>(detail::get_u64_le(p + 24 + i * 8));
    Matrix m(rows, cols, std::move(data));
    if (!m.all_finite())
        throw non_finite_error(origin + ": RAMX payload contains NaN or Inf");
    return m;
}

inline void save_matrix(const Matrix& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("save_matrix: cannot open " + path);
    const std::string bytes = matrix_to_ramx(m);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw io_error("save_matrix: write failed for " + path);
}

inline Matrix load_matrix(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("load_matrix: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return matrix_from_ramx(ss.str(), path);
}

// CSV alternative: plain numeric rows, comma separator, decimal point only,
// optional single header row detected by a non-numeric first token.
inline Matrix load_matrix_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("load_matrix_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        bool numeric = true;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            const std::string tok = line.substr(pos, comma - pos);
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') {
                numeric = false;
                break;
            }
            row.push_back(v);
            pos = comma + 1;
            if (comma == line.size()) break;
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;  // header row
            }
            throw load_error(path + ": non-numeric CSV token");
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw load_error(path + ": ragged CSV row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw load_error(path + ": CSV has no data rows");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    if (!m.all_finite()) throw non_finite_error(path + ": CSV contains NaN or Inf");
    return m;
}

}  // namespace repalign
