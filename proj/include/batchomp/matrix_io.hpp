#pragma once

// Matrix files.
//
// Binary: the 8 bytes "OMPBIN01", rows and cols as little-endian uint32,
// then rows*cols little-endian IEEE doubles in row-major order.
// CSV: a first line "rows,cols" followed by one comma-separated line per row.

#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace batchomp::io {

inline constexpr std::string_view kMagic = "OMPBIN01";
inline constexpr std::size_t kHeaderBytes = 16;

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

inline double get_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

} // namespace detail

inline std::vector<unsigned char> encode_binary(const DenseMatrix& m) {
    if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
        m.cols() > std::numeric_limits<std::uint32_t>::max())
        throw InputError("matrix too large for the binary format");
    std::vector<unsigned char> out(kMagic.begin(), kMagic.end());
    out.reserve(kHeaderBytes + 8 * m.size());
    detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            detail::put_f64(out, m(i, j));
    return out;
}

inline DenseMatrix decode_binary(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < kHeaderBytes)
        throw FormatError(bytes.size(), "truncated header: expected " + std::to_string(kHeaderBytes) +
                                            " bytes, got " + std::to_string(bytes.size()));
    if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
        throw FormatError(0, "bad magic, expected OMPBIN01");
    const std::uint64_t rows = detail::get_u32(bytes.data() + 8);
    const std::uint64_t cols = detail::get_u32(bytes.data() + 12);
    const std::uint64_t expected = kHeaderBytes + 8 * rows * cols;
    if (bytes.size() != expected)
        throw FormatError(std::min<std::uint64_t>(bytes.size(), expected),
                          "payload length mismatch: expected " + std::to_string(expected) +
                              " bytes, got " + std::to_string(bytes.size()));
    DenseMatrix m(rows, cols);
    std::size_t offset = kHeaderBytes;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j, offset += 8) {
            const double v = detail::get_f64(bytes.data() + offset);
            if (!std::isfinite(v))
                throw FormatError(offset, "non-finite value at row " + std::to_string(i) +
                                              ", column " + std::to_string(j));
            m(i, j) = v;
        }
    return m;
}

inline std::string encode_csv(const DenseMatrix& m) {
    std::ostringstream os;
    os << m.rows() << ',' << m.cols() << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j)
            os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
    return os.str();
}

inline DenseMatrix decode_csv(const std::string& text) {
    std::size_t pos = 0;
    auto next_line = [&](std::size_t& start) -> std::string {
        start = pos;
        const std::size_t end = text.find('\n', pos);
        std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        pos = end == std::string::npos ? text.size() : end + 1;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        return line;
    };
    auto parse_number = [](const std::string& field, std::size_t offset) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(field, &used);
        } catch (const std::exception&) {
            throw FormatError(offset, "unparsable CSV field '" + field + "'");
        }
        if (used != field.size() && field.find_first_not_of(" \t", used) != std::string::npos)
            throw FormatError(offset, "trailing characters in CSV field '" + field + "'");
        if (!std::isfinite(v))
            throw FormatError(offset, "non-finite value in CSV");
        return v;
    };

    std::size_t line_start = 0;
    const std::string header = next_line(line_start);
    const std::size_t comma = header.find(',');
    if (comma == std::string::npos)
        throw FormatError(0, "CSV header must be 'rows,cols'");
    const double r = parse_number(header.substr(0, comma), 0);
    const double c = parse_number(header.substr(comma + 1), comma + 1);
    if (r < 0 || c < 0 || r != std::floor(r) || c != std::floor(c))
        throw FormatError(0, "CSV header dimensions must be non-negative integers");
    const auto rows = static_cast<std::size_t>(r);
    const auto cols = static_cast<std::size_t>(c);

    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (pos >= text.size())
            throw FormatError(text.size(), "CSV ends after " + std::to_string(i) + " of " +
                                               std::to_string(rows) + " rows");
        const std::string line = next_line(line_start);
        std::size_t field_start = 0;
        for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t end = line.find(',', field_start);
            if ((end == std::string::npos) != (j + 1 == cols))
                throw FormatError(line_start + field_start,
                                  "row " + std::to_string(i) + " does not have " +
                                      std::to_string(cols) + " fields");
            const std::string field = line.substr(field_start, end == std::string::npos ? std::string::npos : end - field_start);
            m(i, j) = parse_number(field, line_start + field_start);
            field_start = end + 1;
        }
    }
    return m;
}

inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open '" + path + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError("cannot open '" + path + "' for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out)
        throw InputError("write to '" + path + "' failed");
}

inline bool is_csv_path(const std::string& path) {
    return detail::ends_with(path, ".csv") || detail::ends_with(path, ".CSV");
}

/// Format chosen by extension: ".csv" is CSV, anything else binary.
inline DenseMatrix load_matrix(const std::string& path) {
    const auto bytes = read_file(path);
    if (is_csv_path(path))
        return decode_csv(std::string(bytes.begin(), bytes.end()));
    return decode_binary(bytes);
}

inline void save_matrix(const std::string& path, const DenseMatrix& m) {
    if (is_csv_path(path)) {
        const std::string text = encode_csv(m);
        write_file(path, text.data(), text.size());
    } else {
        const auto bytes = encode_binary(m);
        write_file(path, bytes.data(), bytes.size());
    }
}

} // namespace batchomp::io
