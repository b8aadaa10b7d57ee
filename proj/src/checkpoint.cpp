#include "dinn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "dinn/common.hpp"

namespace dinn {

namespace {

constexpr char kMagic[4] = {'D', 'I', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

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

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is, const char* what) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw IoError(std::string("unexpected end of file while reading ") + what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::string& path, const ModelParamsT<T>& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(params.cfg.domains));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.se_ratio));
    write_f64(os, params.cfg.lrelu_alpha);

    auto named = const_cast<ModelParamsT<T>&>(params).named();
    write_u32(os, static_cast<std::uint32_t>(named.size()));
    for (const auto& np : named) {
        write_u32(os, static_cast<std::uint32_t>(np.name.size()));
        os.write(np.name.data(), static_cast<std::streamsize>(np.name.size()));
        const TensorT<T>& t = *np.tensor;
        write_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (int e : t.shape) write_u32(os, static_cast<std::uint32_t>(e));
        for (std::size_t i = 0; i < t.data.size(); ++i)
            write_f64(os, static_cast<double>(t.data[i]));
    }
    if (!os) throw IoError("failed writing " + path);
}

template <typename T>
ModelParamsT<T> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError(path + ": bad magic, expected \"DINN\"");
    const std::uint32_t version = read_u32(is, "version");
    if (version != kVersion)
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));

    ModelConfig cfg;
    cfg.domains = static_cast<int>(read_u32(is, "domain count"));
    cfg.se_ratio = static_cast<int>(read_u32(is, "attention ratio"));
    cfg.lrelu_alpha = read_f64(is, "leaky slope");
    cfg.validate();

    ModelParamsT<T> params = make_params<T>(cfg);
    std::map<std::string, TensorT<T>*> want;
    for (auto& np : params.named()) want[np.name] = np.tensor;

    const std::uint32_t count = read_u32(is, "parameter count");
    if (count != want.size())
        throw IoError(path + ": holds " + std::to_string(count) + " tensors, expected " +
                      std::to_string(want.size()));

    std::map<std::string, bool> seen;
    for (std::uint32_t r = 0; r < count; ++r) {
        const std::uint32_t name_len = read_u32(is, "name length");
        if (name_len == 0 || name_len > 256) throw IoError(path + ": implausible name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw IoError(path + ": truncated name");
        auto it = want.find(name);
        if (it == want.end()) throw IoError(path + ": unknown tensor \"" + name + "\"");
        if (seen[name]) throw IoError(path + ": duplicate tensor \"" + name + "\"");
        seen[name] = true;

        TensorT<T>& t = *it->second;
        const std::uint32_t rank = read_u32(is, "rank");
        if (rank != static_cast<std::uint32_t>(t.rank()))
            throw IoError(path + ": \"" + name + "\" has rank " + std::to_string(rank) +
                          ", expected " + std::to_string(t.rank()));
        for (int d = 0; d < t.rank(); ++d) {
            const std::uint32_t e = read_u32(is, "extent");
            if (e != static_cast<std::uint32_t>(t.shape[d]))
                throw IoError(path + ": \"" + name + "\" extent mismatch on axis " +
                              std::to_string(d));
        }
        for (std::size_t i = 0; i < t.data.size(); ++i)
            t.data[i] = static_cast<T>(read_f64(is, "payload"));
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw IoError(path + ": trailing bytes after last tensor");
    return params;
}

template void save_checkpoint<float>(const std::string&, const ModelParamsT<float>&);
template void save_checkpoint<double>(const std::string&, const ModelParamsT<double>&);
template ModelParamsT<float> load_checkpoint<float>(const std::string&);
template ModelParamsT<double> load_checkpoint<double>(const std::string&);

}  // namespace dinn
