#pragma once

// Row-major 2D grids, grayscale frame sequences, and netpbm (PGM/PPM) I/O.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace memgrid {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int r, int c, T fill = T{}) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    T& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    bool in_bounds(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }
    size_t size() const { return data.size(); }
    bool operator==(const Grid&) const = default;
};

using ByteImage = Grid<std::uint8_t>;

struct FrameSequence {
    double frame_rate = 15.0; // frames per second
    std::vector<ByteImage> frames;

    int rows() const { return frames.empty() ? 0 : frames.front().rows; }
    int cols() const { return frames.empty() ? 0 : frames.front().cols; }
    double frame_period() const { return 1.0 / frame_rate; }
    double duration() const { return frames.size() / frame_rate; }

    void validate() const {
        if (!(frame_rate > 0.0)) throw std::invalid_argument("FrameSequence: frame_rate must be positive");
        if (frames.empty()) throw std::invalid_argument("FrameSequence: need at least one frame");
        for (const auto& f : frames)
            if (f.rows != rows() || f.cols != cols())
                throw IoError("FrameSequence: frame dimensions differ across the sequence");
    }
};

// --- netpbm ---------------------------------------------------------------

inline void write_pgm(const std::filesystem::path& path, const ByteImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_pgm: cannot open " + path.string());
    out << "P5\n" << img.cols << " " << img.rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.size()));
    if (!out) throw IoError("write_pgm: write failed for " + path.string());
}

namespace detail {
// Next whitespace-delimited token, skipping '#' comment lines.
inline std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(in.get()));
            return tok;
        }
    }
    throw IoError("pgm: truncated header");
}
} // namespace detail

inline ByteImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_pgm: cannot open " + path.string());
    if (detail::pnm_token(in) != "P5") throw IoError("read_pgm: not a binary PGM (P5): " + path.string());
    int cols, rows, maxval;
    try {
        cols = std::stoi(detail::pnm_token(in));
        rows = std::stoi(detail::pnm_token(in));
        maxval = std::stoi(detail::pnm_token(in));
    } catch (const std::exception&) {
        throw IoError("read_pgm: malformed header in " + path.string());
    }
    if (cols <= 0 || rows <= 0) throw IoError("read_pgm: bad dimensions in " + path.string());
    if (maxval != 255) throw IoError("read_pgm: only maxval 255 supported: " + path.string());
    in.get(); // single whitespace byte after maxval
    ByteImage img(rows, cols);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.size()))
        throw IoError("read_pgm: truncated pixel data in " + path.string());
    return img;
}

struct RgbImage {
    int rows = 0, cols = 0;
    std::vector<std::uint8_t> data; // 3 bytes per pixel
    RgbImage(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c * 3, 0) {}
    std::uint8_t* px(int r, int c) { return &data[(static_cast<size_t>(r) * cols + c) * 3]; }
};

inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_ppm: cannot open " + path.string());
    out << "P6\n" << img.cols << " " << img.rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write_ppm: write failed for " + path.string());
}

inline std::string frame_file_name(const std::string& prefix, int index) {
    std::ostringstream n;
    n << prefix;
    n.width(4);
    n.fill('0');
    n << index << ".pgm";
    return n.str();
}

// Reads <prefix>NNNN.pgm starting at 0000 (or 0001 if 0000 is absent) until
// the numbering gaps.
inline FrameSequence load_frames(const std::string& prefix, double frame_rate) {
    FrameSequence seq;
    seq.frame_rate = frame_rate;
    int start = std::filesystem::exists(frame_file_name(prefix, 0)) ? 0 : 1;
    for (int i = start;; ++i) {
        std::filesystem::path p = frame_file_name(prefix, i);
        if (!std::filesystem::exists(p)) break;
        seq.frames.push_back(read_pgm(p));
    }
    if (seq.frames.empty()) throw IoError("load_frames: no frames found for prefix " + prefix);
    seq.validate();
    return seq;
}

inline void write_frames(const std::string& prefix, const FrameSequence& seq) {
    for (size_t i = 0; i < seq.frames.size(); ++i)
        write_pgm(frame_file_name(prefix, static_cast<int>(i)), seq.frames[i]);
}

} // namespace memgrid
