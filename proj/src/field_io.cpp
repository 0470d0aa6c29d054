#include "clab/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "clab/errors.hpp"

namespace clab {
namespace {

static_assert(std::endian::native == std::endian::little, "CKF1 writer assumes a little-endian host");

void put_u32(std::string& s, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    s.append(b, 4);
}

}  // namespace

std::string encode_field(const GridField& f) {
    nlohmann::json hdr = {{"n", f.grid().n}, {"L", f.grid().L}, {"dtype", "c128"}, {"layout", "row-major"}};
    std::string h = hdr.dump();
    std::string out = "CKF1";
    put_u32(out, std::uint32_t(h.size()));
    out += h;
    const std::size_t bytes = f.values().size() * sizeof(cplx);
    std::size_t at = out.size();
    out.resize(at + bytes);
    std::memcpy(out.data() + at, f.data(), bytes);
    return out;
}

GridField decode_field(const std::string& s) {
    if (s.size() < 8 || s.compare(0, 4, "CKF1") != 0) throw IOError("not a CKF1 field file");
    std::uint32_t len;
    std::memcpy(&len, s.data() + 4, 4);
    if (s.size() < 8 + std::size_t(len)) throw IOError("truncated CKF1 header");
    nlohmann::json hdr;
    try {
        hdr = nlohmann::json::parse(s.substr(8, len));
    } catch (const std::exception& e) {
        throw IOError(std::string("bad CKF1 header: ") + e.what());
    }
    if (hdr.value("dtype", "") != "c128" || hdr.value("layout", "") != "row-major")
        throw IOError("unsupported CKF1 dtype or layout");
    Grid g{hdr.at("n").get<int>(), hdr.at("L").get<double>()};
    std::size_t bytes = g.size() * sizeof(cplx);
    if (s.size() != 8 + std::size_t(len) + bytes) throw IOError("CKF1 payload size mismatch");
    std::vector<cplx> v(g.size());
    std::memcpy(v.data(), s.data() + 8 + len, bytes);
    return GridField(g, std::move(v));
}

void write_field(const std::string& path, const GridField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IOError("cannot open " + path + " for writing");
    std::string b = encode_field(f);
    os.write(b.data(), std::streamsize(b.size()));
    if (!os) throw IOError("write failed: " + path);
}

GridField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IOError("cannot open " + path);
    std::string b((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_field(b);
}

}  // namespace clab
