#include "qflow/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace qflow {

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void write_header(std::ostream& out, char kind, const Grid& g, double time,
                  const MaterialParams& p) {
    out.write("QFLD1", 5);
    out.put(kind);
    out.put('\0');
    out.put('\0');
    put_u64(out, static_cast<std::uint64_t>(g.dim));
    for (int a = 0; a < g.dim; ++a) put_u64(out, g.n[a]);
    for (int a = 0; a < g.dim; ++a) put_f64(out, g.length[a]);
    put_f64(out, time);
    put_f64(out, p.eps);
    put_f64(out, p.a);
    put_f64(out, p.b);
    put_f64(out, p.c);
    put_f64(out, p.L1);
    put_f64(out, p.Gamma);
}

template <std::size_t NCh>
void write_cells(std::ostream& out, const CellField<NCh>& f) {
    for (std::size_t i = 0; i < f.cells(); ++i)
        for (std::size_t c = 0; c < NCh; ++c) put_f64(out, f.ch[c][i]);
}

template <std::size_t NCh>
void read_cells(std::istream& in, CellField<NCh>& f) {
    for (std::size_t i = 0; i < f.cells(); ++i)
        for (std::size_t c = 0; c < NCh; ++c) f.ch[c][i] = get_f64(in);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

void write_qfld(const std::string& path, const QField& f, const MaterialParams& p) {
    auto out = open_out(path);
    write_header(out, 'Q', f.grid, f.time, p);
    write_cells(out, f);
}

void write_qfld(const std::string& path, const DirectorField& f, const MaterialParams& p) {
    auto out = open_out(path);
    write_header(out, 'D', f.grid, f.time, p);
    write_cells(out, f);
}

QfldFile read_qfld(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "QFLD1", 5) != 0)
        throw InvalidInput("'" + path + "' is not a QFLD1 snapshot");
    QfldFile out;
    out.kind = static_cast<char>(in.get());
    in.get();
    in.get();
    if (out.kind != 'Q' && out.kind != 'D')
        throw InvalidInput("'" + path + "': unknown payload kind");
    Grid g;
    g.dim = static_cast<int>(get_u64(in));
    if (g.dim < 1 || g.dim > 3) throw InvalidInput("'" + path + "': bad dimension");
    g.n = {1, 1, 1};
    g.length = {0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) g.n[a] = get_u64(in);
    for (int a = 0; a < g.dim; ++a) g.length[a] = get_f64(in);
    const double time = get_f64(in);
    out.params.eps = get_f64(in);
    out.params.a = get_f64(in);
    out.params.b = get_f64(in);
    out.params.c = get_f64(in);
    out.params.L1 = get_f64(in);
    out.params.Gamma = get_f64(in);
    g.validate();
    if (out.kind == 'Q') {
        out.q = QField(g, time);
        read_cells(in, out.q);
    } else {
        out.dir = DirectorField(g, time);
        read_cells(in, out.dir);
    }
    if (!in) throw InvalidInput("'" + path + "': truncated payload");
    return out;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRecord>& rows) {
    auto out = open_out(path);
    out << "time,E_total,E_dirichlet,E_bulk,sup_absQ,sup_distN,cum_dtQ_sq,"
           "tangent_residual,lambda_L2,lambda_sup\n";
    for (const auto& r : rows) {
        out << format_g17(r.time) << ',' << format_g17(r.E_total) << ','
            << format_g17(r.E_dirichlet) << ',' << format_g17(r.E_bulk) << ','
            << format_g17(r.sup_absQ) << ',' << format_g17(r.sup_distN) << ','
            << format_g17(r.cum_dtQ_sq) << ',' << format_g17(r.tangent_residual) << ','
            << format_g17(r.lambda_L2) << ',' << format_g17(r.lambda_sup) << '\n';
    }
}

std::vector<DiagnosticsRecord> read_diagnostics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("'" + path + "': empty csv");
    std::vector<DiagnosticsRecord> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        double v[10];
        for (int i = 0; i < 10; ++i) {
            if (!std::getline(ss, tok, ','))
                throw InvalidInput("'" + path + "': short row '" + line + "'");
            v[i] = std::strtod(tok.c_str(), nullptr);
        }
        DiagnosticsRecord r;
        r.time = v[0];
        r.E_total = v[1];
        r.E_dirichlet = v[2];
        r.E_bulk = v[3];
        r.sup_absQ = v[4];
        r.sup_distN = v[5];
        r.cum_dtQ_sq = v[6];
        r.tangent_residual = v[7];
        r.lambda_L2 = v[8];
        r.lambda_sup = v[9];
        rows.push_back(r);
    }
    return rows;
}

void write_monotonicity_csv(const std::string& path,
                            const std::vector<MonotonicityRow>& rows) {
    auto out = open_out(path);
    out << "z0_x,z0_y,z0_z,t0,R,Phi,Psi\n";
    for (const auto& r : rows) {
        out << format_g17(r.z0.x[0]) << ',' << format_g17(r.z0.x[1]) << ','
            << format_g17(r.z0.x[2]) << ',' << format_g17(r.z0.t) << ','
            << format_g17(r.R) << ',' << format_g17(r.Phi) << ',' << format_g17(r.Psi)
            << '\n';
    }
}

}  // namespace qflow
