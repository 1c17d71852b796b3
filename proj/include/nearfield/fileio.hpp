// SPDX-License-Identifier: Apache-2.0
//
// nearfield-mc: near-field source localization under direction-dependent mutual coupling
// Copyright (C) 2026 nearfield-mc contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cerrno>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nearfield {

class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 17 significant digits: enough to round-trip an IEEE double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Complex token `re+imj`, e.g. `0.31-0.42j`.
inline std::string format_complex(std::complex<double> z) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.17g%+.17gj", z.real(), z.imag());
    return buf;
}

/// Parses `re+imj`. The imaginary part starts at the last sign that is
/// not an exponent sign.
inline std::complex<double> parse_complex(const std::string &token) {
    if (token.empty() || token.back() != 'j')
        throw ParseError("complex token must end with 'j': '" + token + "'");
    const std::string body = token.substr(0, token.size() - 1);
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
        const char c = body[i];
        if ((c == '+' || c == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    if (split == std::string::npos)
        throw ParseError("complex token missing imaginary part: '" + token + "'");
    char *end = nullptr;
    const std::string re_str = body.substr(0, split);
    const std::string im_str = body.substr(split);
    errno = 0;
    const double re = std::strtod(re_str.c_str(), &end);
    if (end != re_str.c_str() + re_str.size() || re_str.empty())
        throw ParseError("bad real part in complex token: '" + token + "'");
    const double im = std::strtod(im_str.c_str(), &end);
    if (end != im_str.c_str() + im_str.size())
        throw ParseError("bad imaginary part in complex token: '" + token + "'");
    return {re, im};
}

/// Writes a file through a temporary in the same directory followed by
/// an atomic rename, so readers never observe a partial file.
inline void atomic_write_file(const std::string &path, const std::string &content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("rename to '" + path + "' failed: " + ec.message());
}

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// FNV-1a 64-bit hash, used to fingerprint configuration files.
inline std::uint64_t fnv1a_hash(const std::string &data) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace nearfield
