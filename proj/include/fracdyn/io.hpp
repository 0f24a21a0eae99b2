#pragma once

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "fracdyn/flow.hpp"
#include "fracdyn/geometry.hpp"

namespace fracdyn {

// ---------------------------------------------------------------------------
// Deterministic file outputs: binary PGM/PPM rasters, CSV point and trajectory
// files, key: value reports. Formats are bit-exact so identical configurations
// produce byte-identical files.
// ---------------------------------------------------------------------------

/// 9 significant digits, shortest form ("%.9g").
inline std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

namespace detail {
inline std::ofstream open_out(const std::string& path, bool binary) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

inline void finish_out(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Stage-to-gray ramp: member 0, stage n -> 55 + floor(200 n / k), sentinel 255.
inline std::uint8_t gray_of(std::uint16_t value, int depth, std::uint16_t sentinel) {
    if (value == 0) return 0;
    if (value == sentinel) return 255;
    return static_cast<std::uint8_t>(55 + (200 * static_cast<long>(value)) / depth);
}
}  // namespace detail

/// Binary PGM (P5), top row = maximal y.
inline void write_pgm(const MembershipGrid& grid, const std::string& path) {
    auto out = detail::open_out(path, true);
    out << "P5\n" << grid.width() << " " << grid.height() << "\n255\n";
    std::vector<char> row(static_cast<std::size_t>(grid.width()));
    for (int j = grid.height() - 1; j >= 0; --j) {
        for (int i = 0; i < grid.width(); ++i)
            row[static_cast<std::size_t>(i)] =
                static_cast<char>(detail::gray_of(grid.at(i, j), grid.depth(), grid.sentinel()));
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    detail::finish_out(out, path);
}

/// Escape-stage colors for the PPM mode. The ramp cycles when k exceeds its
/// length.
struct Palette {
    std::array<std::uint8_t, 3> member{0, 0, 0};
    std::array<std::uint8_t, 3> sentinel{255, 255, 255};
    std::vector<std::array<std::uint8_t, 3>> ramp;

    static Palette standard() {
        Palette p;
        p.ramp = {{{230, 25, 75}},  {{245, 130, 48}}, {{255, 225, 25}}, {{210, 245, 60}},
                  {{60, 180, 75}},  {{70, 240, 240}}, {{0, 130, 200}},  {{145, 30, 180}},
                  {{240, 50, 230}}, {{128, 0, 0}},    {{128, 128, 0}},  {{0, 0, 128}}};
        return p;
    }

    const std::array<std::uint8_t, 3>& stage_color(int n) const {
        return ramp[static_cast<std::size_t>(n - 1) % ramp.size()];
    }
};

/// Binary PPM (P6), top row = maximal y.
inline void write_ppm(const MembershipGrid& grid, const std::string& path,
                      const Palette& palette = Palette::standard()) {
    if (palette.ramp.empty()) throw std::invalid_argument("write_ppm: palette ramp is empty");
    auto out = detail::open_out(path, true);
    out << "P6\n" << grid.width() << " " << grid.height() << "\n255\n";
    std::vector<char> row(static_cast<std::size_t>(grid.width()) * 3);
    for (int j = grid.height() - 1; j >= 0; --j) {
        for (int i = 0; i < grid.width(); ++i) {
            const std::uint16_t v = grid.at(i, j);
            const auto& rgb = v == 0 ? palette.member
                              : v == grid.sentinel() ? palette.sentinel
                                                     : palette.stage_color(v);
            row[static_cast<std::size_t>(i) * 3 + 0] = static_cast<char>(rgb[0]);
            row[static_cast<std::size_t>(i) * 3 + 1] = static_cast<char>(rgb[1]);
            row[static_cast<std::size_t>(i) * 3 + 2] = static_cast<char>(rgb[2]);
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    detail::finish_out(out, path);
}

struct PgmImage {
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<std::uint8_t> bytes;  // row-major, top row first

    std::uint8_t at(int col, int row) const {
        return bytes[static_cast<std::size_t>(row) * width + col];
    }
};

/// Netpbm-compliant P5 reader (whitespace and '#' comments in the header).
inline PgmImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");

    auto next_token = [&in, &path]() {
        std::string tok;
        int c = in.get();
        while (c != EOF) {
            if (c == '#') {
                while (c != EOF && c != '\n') c = in.get();
            } else if (std::isspace(c)) {
                c = in.get();
            } else {
                break;
            }
        }
        while (c != EOF && !std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            c = in.get();
        }
        if (tok.empty()) throw std::runtime_error("truncated PGM header in '" + path + "'");
        return tok;
    };

    if (next_token() != "P5") throw std::runtime_error("'" + path + "' is not a binary PGM");
    PgmImage img;
    try {
        img.width = std::stoi(next_token());
        img.height = std::stoi(next_token());
        img.maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw std::runtime_error("malformed PGM header in '" + path + "'");
    }
    if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 255)
        throw std::runtime_error("unsupported PGM geometry in '" + path + "'");
    img.bytes.resize(static_cast<std::size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.bytes.data()),
            static_cast<std::streamsize>(img.bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.bytes.size()))
        throw std::runtime_error("truncated PGM payload in '" + path + "'");
    return img;
}

/// Member mask from a PGM (byte 0 = member), for dimension/compare runs on
/// files. Row 0 of the grid is the image's bottom row.
inline MembershipGrid grid_from_pgm(const PgmImage& img) {
    GridSpec spec{{0.0, static_cast<double>(img.width), 0.0, static_cast<double>(img.height)},
                  img.width, img.height};
    MembershipGrid grid(spec, 1);
    for (int row = 0; row < img.height; ++row)
        for (int col = 0; col < img.width; ++col)
            grid.set(col, img.height - 1 - row, img.at(col, row) == 0 ? 0 : 1);
    return grid;
}

/// CSV "x,y" with 9-significant-digit values, LF endings, no trailing blank.
inline void write_csv_points(const std::vector<Point2>& points, const std::string& path) {
    auto out = detail::open_out(path, true);
    out << "x,y\n";
    for (const auto& p : points) out << fmt_g9(p.x) << "," << fmt_g9(p.y) << "\n";
    detail::finish_out(out, path);
}

/// CSV "t,x,y" trajectory export; tracks are concatenated in point order.
inline void write_csv_samples(const std::vector<std::vector<TrajectorySample>>& tracks,
                              const std::string& path) {
    auto out = detail::open_out(path, true);
    out << "t,x,y\n";
    for (const auto& track : tracks)
        for (const auto& s : track)
            out << fmt_g9(s.t) << "," << fmt_g9(s.p.x) << "," << fmt_g9(s.p.y) << "\n";
    detail::finish_out(out, path);
}

inline std::vector<Point2> read_csv_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::string line;
    long lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
    };

    std::vector<Point2> points;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "x,y") fail("expected header 'x,y'");
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) fail("expected 'x,y' record");
        try {
            std::size_t used = 0;
            const double x = std::stod(line.substr(0, comma), &used);
            if (used != comma) fail("malformed x value");
            const std::string ytext = line.substr(comma + 1);
            const double y = std::stod(ytext, &used);
            if (used != ytext.size()) fail("malformed y value");
            points.push_back({x, y});
        } catch (const std::invalid_argument&) {
            fail("malformed number");
        } catch (const std::out_of_range&) {
            fail("number out of range");
        }
    }
    return points;
}

/// Structured "key: value" report lines.
inline void write_report(const std::vector<std::pair<std::string, std::string>>& entries,
                         const std::string& path) {
    auto out = detail::open_out(path, true);
    for (const auto& [key, value] : entries) out << key << ": " << value << "\n";
    detail::finish_out(out, path);
}

struct ConfigEntry {
    std::string key;
    std::string value;
    long line = 0;
};

/// Parses "key = value" lines; '#' starts a comment. Validation of keys and
/// values happens at the consumer, which knows the expected option set.
inline std::vector<ConfigEntry> read_config_entries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::vector<ConfigEntry> entries;
    std::string line;
    long lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'key = value'");
        ConfigEntry e;
        e.key = trim(stripped.substr(0, eq));
        e.value = trim(stripped.substr(eq + 1));
        e.line = lineno;
        if (e.key.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace fracdyn
