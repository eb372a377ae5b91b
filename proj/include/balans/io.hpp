#ifndef BALANS_IO_HPP
#define BALANS_IO_HPP

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

/**
 * @file io.hpp
 *
 * @brief CSV profile tables and the BALA1 binary dump of sparse rows.
 *
 * BALA1 layout, all integers unsigned 64-bit little-endian and all values IEEE-754 binary64 little-endian:
 *
 *     "BALA1"            5-byte magic
 *     n, m, nnz          column count, row count, stored entries
 *     anchors[m]         global index of each row
 *     row_ptr[m + 1]     offsets into the entry arrays
 *     cols[nnz]
 *     vals[nnz]
 */

namespace balans {

/**
 * Shortest decimal representation that parses back to the same double.
 */
inline std::string format_double(double x) {
    std::array<char, 32> buf;
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double out = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return out;
}

/**
 * Split one CSV record; double quotes delimit fields and `""` escapes a quote.
 */
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string quote_csv(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

/**
 * @brief A CSV table split into numeric feature columns and named string columns.
 */
struct ProfileTable {
    std::vector<std::string> header;

    /** Positions in `header` of the feature columns, in order. */
    std::vector<std::size_t> feature_positions;

    Matrix features;

    /** Raw string cells of every column, indexed by header position. Only filled for non-feature columns. */
    std::vector<std::vector<std::string>> text;

    std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        return std::nullopt;
    }

    const std::vector<std::string>& column(const std::string& name) const {
        const auto pos = find(name);
        if (!pos || (text[*pos].empty() && rows() > 0)) {
            throw InputError("column '" + name + "' is not a text column of the table");
        }
        return text[*pos];
    }
};

/**
 * Read a CSV with a header row. Columns named in `text_columns` are kept as strings; all others must parse as finite numbers.
 *
 * @throws InputError for a missing text column, a ragged row or an unparsable feature cell (naming row and column).
 */
inline ProfileTable read_profile_csv(std::istream& in, const std::vector<std::string>& text_columns) {
    ProfileTable table;
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("empty CSV input");
    }
    table.header = split_csv_line(line);
    const auto ncol = table.header.size();
    std::vector<char> is_text(ncol, 0);
    for (const auto& name : text_columns) {
        const auto pos = table.find(name);
        if (!pos) {
            throw InputError("column '" + name + "' not found in the CSV header");
        }
        is_text[*pos] = 1;
    }
    for (std::size_t c = 0; c < ncol; ++c) {
        if (!is_text[c]) {
            table.feature_positions.push_back(c);
        }
    }
    if (table.feature_positions.empty()) {
        throw InputError("CSV has no feature columns");
    }

    table.text.assign(ncol, {});
    std::vector<double> values;
    std::size_t nrows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != ncol) {
            throw InputError("CSV row " + std::to_string(nrows + 1) + " has " + std::to_string(fields.size()) + " fields, expected " + std::to_string(ncol));
        }
        for (std::size_t c = 0; c < ncol; ++c) {
            if (is_text[c]) {
                table.text[c].push_back(std::move(fields[c]));
            } else {
                auto v = parse_double(fields[c]);
                if (!v || !std::isfinite(*v)) {
                    throw InputError("unparsable feature value '" + fields[c] + "' at row " + std::to_string(nrows + 1) + ", column '" + table.header[c] + "'");
                }
                values.push_back(*v);
            }
        }
        ++nrows;
    }
    if (nrows == 0) {
        throw InputError("CSV has no data rows");
    }
    const auto nf = static_cast<Eigen::Index>(table.feature_positions.size());
    table.features = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(nrows), nf);
    return table;
}

inline ProfileTable read_profile_csv(const std::string& path, const std::vector<std::string>& text_columns) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    return read_profile_csv(in, text_columns);
}

/**
 * @brief One output column: either column `slot` of the numeric matrix or string column `slot`.
 */
struct CsvColumn {
    std::string name;
    bool numeric = true;
    std::size_t slot = 0;
};

inline void write_csv(std::ostream& out, const std::vector<CsvColumn>& layout, const Matrix& numbers, const std::vector<std::vector<std::string>>& strings) {
    for (std::size_t c = 0; c < layout.size(); ++c) {
        out << (c ? "," : "") << quote_csv(layout[c].name);
    }
    out << '\n';
    for (Eigen::Index r = 0; r < numbers.rows(); ++r) {
        for (std::size_t c = 0; c < layout.size(); ++c) {
            if (c) {
                out << ',';
            }
            if (layout[c].numeric) {
                out << format_double(numbers(r, static_cast<Eigen::Index>(layout[c].slot)));
            } else {
                out << quote_csv(strings[layout[c].slot][static_cast<std::size_t>(r)]);
            }
        }
        out << '\n';
    }
}

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<unsigned char, 8> b;
    for (int i = 0; i < 8; ++i) {
        b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b.data()), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> b;
    if (!in.read(reinterpret_cast<char*>(b.data()), 8)) {
        throw InputError("truncated BALA1 stream");
    }
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | b[static_cast<std::size_t>(i)];
    }
    return v;
}

}

inline constexpr char bala1_magic[5] = {'B', 'A', 'L', 'A', '1'};

inline void write_bala1(std::ostream& out, const SparseAffinityRows& rows) {
    out.write(bala1_magic, 5);
    detail::put_u64(out, rows.n());
    detail::put_u64(out, rows.size());
    detail::put_u64(out, rows.nnz());
    for (auto a : rows.anchors()) {
        detail::put_u64(out, a);
    }
    for (auto p : rows.row_ptr()) {
        detail::put_u64(out, p);
    }
    for (auto c : rows.col_indices()) {
        detail::put_u64(out, c);
    }
    for (auto v : rows.values()) {
        detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
}

inline SparseAffinityRows read_bala1(std::istream& in) {
    char magic[5];
    if (!in.read(magic, 5) || std::memcmp(magic, bala1_magic, 5) != 0) {
        throw InputError("missing BALA1 magic header");
    }
    const auto n = detail::get_u64(in);
    const auto m = detail::get_u64(in);
    const auto nnz = detail::get_u64(in);
    std::vector<Index> anchors(m);
    for (auto& a : anchors) {
        a = detail::get_u64(in);
    }
    std::vector<std::size_t> ptr(m + 1);
    for (auto& p : ptr) {
        p = detail::get_u64(in);
    }
    std::vector<Index> cols(nnz);
    for (auto& c : cols) {
        c = detail::get_u64(in);
    }
    std::vector<double> vals(nnz);
    for (auto& v : vals) {
        v = std::bit_cast<double>(detail::get_u64(in));
    }
    return SparseAffinityRows(n, std::move(anchors), std::move(ptr), std::move(cols), std::move(vals));
}

inline void write_bala1(const std::string& path, const SparseAffinityRows& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot open '" + path + "' for writing");
    }
    write_bala1(out, rows);
}

inline SparseAffinityRows read_bala1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    return read_bala1(in);
}

}

#endif
