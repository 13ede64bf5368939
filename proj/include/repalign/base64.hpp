#pragma once

#include <cstdint>
#include <string>

#include "repalign/errors.hpp"

namespace repalign {

namespace detail {
inline constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace detail

inline std::string base64_encode(const std::string& in) {
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= in.size()) {
        const std::uint32_t v = (static_cast<std::uint8_t>(in[i]) << 16) |
                                (static_cast<std::uint8_t>(in[i + 1]) << 8) |
                                static_cast<std::uint8_t>(in[i + 2]);
        out.push_back(detail::kB64Alphabet[(v >> 18) & 63]);
        out.push_back(detail::kB64Alphabet[(v >> 12) & 63]);
        out.push_back(detail::kB64Alphabet[(v >> 6) & 63]);
        out.push_back(detail::kB64Alphabet[v & 63]);
        i += 3;
    }
    const std::size_t rem = in.size() - i;
    if (rem == 1) {
        const std::uint32_t v = static_cast<std::uint8_t>(in[i]) << 16;
        out.push_back(detail::kB64Alphabet[(v >> 18) & 63]);
        out.push_back(detail::kB64Alphabet[(v >> 12) & 63]);
        out.append("==");
    } else if (rem == 2) {
        const std::uint32_t v = (static_cast<std::uint8_t>(in[i]) << 16) |
                                (static_cast<std::uint8_t>(in[i + 1]) << 8);
        out.push_back(detail::kB64Alphabet[(v >> 18) & 63]);
        out.push_back(detail::kB64Alphabet[(v >> 12) & 63]);
        out.push_back(detail::kB64Alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

inline std::string base64_decode(const std::string& in) {
    if (in.size() % 4 != 0) throw value_error("base64_decode: length not a multiple of 4");
    std::string out;
    out.reserve(in.size() / 4 * 3);
    for (std::size_t i = 0; i < in.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = in[i + k];
            if (c == '=') {
                if (i + 4 != in.size() || k < 2) throw value_error("base64_decode: bad padding");
                vals[k] = 0;
                ++pad;
            } else {
                if (pad > 0) throw value_error("base64_decode: data after padding");
                vals[k] = detail::b64_value(c);
                if (vals[k] < 0) throw value_error("base64_decode: invalid character");
            }
        }
        const std::uint32_t v = (static_cast<std::uint32_t>(vals[0]) << 18) |
                                (static_cast<std::uint32_t>(vals[1]) << 12) |
                                (static_cast<std::uint32_t>(vals[2]) << 6) |
                                static_cast<std::uint32_t>(vals[3]);
        out.push_back(static_cast<char>((v >> 16) & 0xFF));
        if (pad < 2) out.push_back(static_cast<char>((v >> 8) & 0xFF));
        if (pad < 1) out.push_back(static_cast<char>(v & 0xFF));
    }
    return out;
}

}  // namespace repalign
