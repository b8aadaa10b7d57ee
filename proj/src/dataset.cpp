#include "dinn/dataset.hpp"

#include <cstring>
#include <fstream>

#include "dinn/common.hpp"

namespace dinn {

namespace {

constexpr std::uint32_t kDatasetVersion = 1;
constexpr std::uint32_t kSplitVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw IoError(std::string("unexpected end of file while reading ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32s(std::ostream& os, const std::vector<float>& v) {
    for (float x : v) {
        std::uint32_t bits;
        std::memcpy(&bits, &x, 4);
        write_u32(os, bits);
    }
}

void read_f32s(std::istream& is, std::vector<float>& v, std::size_t n, const char* what) {
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = read_u32(is, what);
        std::memcpy(&v[i], &bits, 4);
    }
}

void expect_magic(std::istream& is, const char* magic, const std::string& path) {
    char got[4];
    if (!is.read(got, 4) || std::memcmp(got, magic, 4) != 0)
        throw IoError(path + ": bad magic, expected \"" + magic + "\"");
}

void write_extents3(std::ostream& os, int a, int b, int c) {
    write_u32(os, static_cast<std::uint32_t>(a));
    write_u32(os, static_cast<std::uint32_t>(b));
    write_u32(os, static_cast<std::uint32_t>(c));
}

void expect_extents3(std::istream& is, int a, int b, int c, const std::string& path,
                     const char* what) {
    const std::uint32_t ga = read_u32(is, what), gb = read_u32(is, what), gc = read_u32(is, what);
    if (ga != static_cast<std::uint32_t>(a) || gb != static_cast<std::uint32_t>(b) ||
        gc != static_cast<std::uint32_t>(c))
        throw IoError(path + ": " + what + " extents " + std::to_string(ga) + "x" +
                      std::to_string(gb) + "x" + std::to_string(gc) + ", expected " +
                      std::to_string(a) + "x" + std::to_string(b) + "x" + std::to_string(c));
}

}  // namespace

std::vector<float> one_hot(int cls, int k) {
    if (k < 1 || cls < 0 || cls >= k)
        throw InvalidArgument("one_hot: class " + std::to_string(cls) + " outside [0," +
                              std::to_string(k) + ")");
    std::vector<float> v(static_cast<std::size_t>(k), 0.0f);
    v[static_cast<std::size_t>(cls)] = 1.0f;
    return v;
}

void save_dataset(const std::string& path, const Dataset& ds) {
    if (ds.k_total < 2) throw ConfigError("save_dataset: need at least 2 subjects");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write("DSET", 4);
    write_u32(os, kDatasetVersion);
    write_u32(os, ds.k_total);
    for (const Sample& s : ds.samples) {
        write_u32(os, s.subject);
        write_u32(os, static_cast<std::uint32_t>(s.onehot.size()));
        write_f32s(os, s.onehot);
        write_extents3(os, kCsiH, kCsiW, kCsiC);
        write_f32s(os, s.csi);
        write_extents3(os, kImgH, kImgW, 1);
        os.write(reinterpret_cast<const char*>(s.skeleton.data()),
                 static_cast<std::streamsize>(s.skeleton.size()));
    }
    if (!os) throw IoError("failed while writing " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    expect_magic(is, "DSET", path);
    const std::uint32_t version = read_u32(is, "version");
    if (version != kDatasetVersion)
        throw IoError(path + ": unsupported version " + std::to_string(version));
    Dataset ds;
    ds.k_total = read_u32(is, "subject count");
    if (ds.k_total < 2) throw IoError(path + ": subject count must be >= 2");
    const std::size_t label_width = static_cast<std::size_t>(ds.k_total) - 1;
    while (true) {
        is.peek();
        if (is.eof()) break;
        Sample s;
        s.subject = read_u32(is, "subject id");
        if (s.subject >= ds.k_total)
            throw IoError(path + ": subject id " + std::to_string(s.subject) + " out of range");
        const std::uint32_t width = read_u32(is, "label width");
        if (width != 0 && width != label_width)
            throw IoError(path + ": label width " + std::to_string(width) + ", expected 0 or " +
                          std::to_string(label_width));
        read_f32s(is, s.onehot, width, "label");
        if (width != 0) {
            int ones = 0;
            for (float v : s.onehot) {
                if (v == 1.0f)
                    ++ones;
                else if (v != 0.0f)
                    throw IoError(path + ": label is not one-hot");
            }
            if (ones != 1) throw IoError(path + ": label is not one-hot");
        }
        expect_extents3(is, kCsiH, kCsiW, kCsiC, path, "radio tensor");
        read_f32s(is, s.csi, static_cast<std::size_t>(kCsiH) * kCsiW * kCsiC, "radio tensor");
        expect_extents3(is, kImgH, kImgW, 1, path, "silhouette");
        s.skeleton.resize(static_cast<std::size_t>(kImgH) * kImgW);
        if (!is.read(reinterpret_cast<char*>(s.skeleton.data()),
                     static_cast<std::streamsize>(s.skeleton.size())))
            throw IoError(path + ": unexpected end of file while reading silhouette");
        for (std::uint8_t v : s.skeleton)
            if (v > 1) throw IoError(path + ": silhouette values must be 0 or 1");
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void save_split(const std::string& path, const DatasetSplit& split) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write("DSPL", 4);
    write_u32(os, kSplitVersion);
    for (const auto* list : {&split.train, &split.test_source, &split.test_target}) {
        write_u32(os, static_cast<std::uint32_t>(list->size()));
        for (std::uint32_t idx : *list) write_u32(os, idx);
    }
    if (!os) throw IoError("failed while writing " + path);
}

DatasetSplit load_split(const std::string& path, std::size_t sample_count) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    expect_magic(is, "DSPL", path);
    const std::uint32_t version = read_u32(is, "version");
    if (version != kSplitVersion)
        throw IoError(path + ": unsupported version " + std::to_string(version));
    DatasetSplit split;
    for (auto* list : {&split.train, &split.test_source, &split.test_target}) {
        const std::uint32_t n = read_u32(is, "index count");
        list->reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t idx = read_u32(is, "sample index");
            if (idx >= sample_count)
                throw IoError(path + ": sample index " + std::to_string(idx) +
                              " out of range (dataset has " + std::to_string(sample_count) +
                              " samples)");
            list->push_back(idx);
        }
    }
    return split;
}

std::string split_path_for(const std::string& dataset_path) { return dataset_path + ".split"; }

}  // namespace dinn
