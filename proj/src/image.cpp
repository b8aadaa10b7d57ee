#include "dinn/image.hpp"

#include <cmath>
#include <fstream>

#include "dinn/common.hpp"

namespace dinn {

template <typename T>
void write_pgm(const std::string& path, const TensorT<T>& img) {
    const Shape& s = img.shape;
    const bool ok = (s.size() == 2) || (s.size() == 3 && s[2] == 1);
    if (!ok) throw ShapeError("write_pgm wants (H,W) or (H,W,1), got " + shape_str(s));
    const int h = s[0], w = s[1];
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "P5\n" << w << " " << h << "\n255\n";
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        double v = static_cast<double>(img.data[i]);
        if (!std::isfinite(v)) v = 0;
        v = v < 0 ? 0 : (v > 1 ? 1 : v);
        const unsigned char px = static_cast<unsigned char>(std::llround(v * 255.0));
        os.write(reinterpret_cast<const char*>(&px), 1);
    }
    if (!os) throw IoError("failed writing " + path);
}

template void write_pgm<float>(const std::string&, const TensorT<float>&);
template void write_pgm<double>(const std::string&, const TensorT<double>&);

}  // namespace dinn
