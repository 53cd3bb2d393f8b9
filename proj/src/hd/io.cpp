#include "hd/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace hd {

namespace {

constexpr char kMagic[8] = {'H', 'D', 'F', 'L', 'D', '1', '\0', '\0'};

struct Header {
    char magic[8];
    std::uint32_t nx, ny, nz, ncomp, repr, reserved;
    double L, depth;
    char pad[16];
};
static_assert(sizeof(Header) == 64);

void write_header(std::ofstream& out, const Grid& g, std::uint32_t ncomp) {
    Header h{};
    std::memcpy(h.magic, kMagic, 8);
    h.nx = static_cast<std::uint32_t>(g.Nx);
    h.ny = static_cast<std::uint32_t>(g.Ny);
    h.nz = static_cast<std::uint32_t>(g.Nz);
    h.ncomp = ncomp;
    h.repr = 0;
    h.reserved = 0;
    h.L = g.L;
    h.depth = g.depth;
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
}

void write_component(std::ofstream& out, const Mat& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
}

} // namespace

void write_snapshot(const std::filesystem::path& file, const State& u) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("snapshot: cannot open " + file.string());
    write_header(out, *u.grid(), 3);
    write_component(out, u.v.c1.v);
    write_component(out, u.v.c2.v);
    write_component(out, u.T.v);
}

void write_snapshot(const std::filesystem::path& file, const ScalarField& f) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("snapshot: cannot open " + file.string());
    write_header(out, *f.grid, 1);
    write_component(out, f.v);
}

State read_state_snapshot(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("snapshot: cannot open " + file.string());
    Header h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in || std::memcmp(h.magic, kMagic, 8) != 0)
        throw std::runtime_error("snapshot: bad magic in " + file.string());
    if (h.repr != 0)
        throw std::runtime_error("snapshot: only physical representation supported");
    if (h.ncomp != 3)
        throw std::runtime_error("snapshot: expected a 3-component state");
    auto g = Grid::make(h.L, h.depth, static_cast<int>(h.nx), static_cast<int>(h.ny),
                        static_cast<int>(h.nz));
    State u(g);
    auto read_comp = [&](Mat& m) {
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * m.size()));
        if (!in) throw std::runtime_error("snapshot: truncated file " + file.string());
    };
    read_comp(u.v.c1.v);
    read_comp(u.v.c2.v);
    read_comp(u.T.v);
    return u;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trajectory_ndjson(const std::filesystem::path& file, const Trajectory& tr) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("ndjson: cannot open " + file.string());
    for (std::size_t i = 0; i < tr.diag.size(); ++i) {
        const StepDiag& d = tr.diag[i];
        out << "{\"step\":" << i << ",\"time\":" << fmt_double(d.t)
            << ",\"l2_sq\":" << fmt_double(d.l2_sq) << ",\"h1_sq\":" << fmt_double(d.h1_sq)
            << ",\"a_l2_sq\":" << fmt_double(d.a_l2_sq)
            << ",\"l6_p6\":" << fmt_double(d.l6_p6)
            << ",\"div_res\":" << fmt_double(d.div_res)
            << ",\"int_w\":" << fmt_double(d.int_w) << ",\"int_6\":" << fmt_double(d.int_6)
            << ",\"int_grad\":" << fmt_double(d.int_grad)
            << ",\"int_z\":" << fmt_double(d.int_z) << ",\"sup_T\":" << fmt_double(d.sup_T)
            << ",\"int_T\":" << fmt_double(d.int_T) << ",\"sup_p\":" << fmt_double(d.sup_p)
            << ",\"int_p\":" << fmt_double(d.int_p)
            << ",\"sup_linf\":" << fmt_double(d.sup_linf)
            << ",\"int_h2\":" << fmt_double(d.int_h2) << "}\n";
    }
    if (tr.blew_up)
        out << "{\"blowup\":true,\"step\":" << tr.blowup_step << ",\"reason\":\""
            << tr.blowup_reason << "\"}\n";
}

} // namespace hd
