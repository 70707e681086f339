#include "rfem/errors.hpp"
#include "rfem/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace rfem {

namespace {

// Whitespace tokenizer that strips '#' comments and tracks line numbers.
class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    bool next(std::string& tok)
    {
        while (true) {
            if (pos_ >= line_.size()) {
                if (!std::getline(in_, line_)) return false;
                ++line_no_;
                const auto hash = line_.find('#');
                if (hash != std::string::npos) line_.erase(hash);
                pos_ = 0;
            }
            while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
            if (pos_ >= line_.size()) continue;
            std::size_t end = pos_;
            while (end < line_.size() && !std::isspace(static_cast<unsigned char>(line_[end]))) ++end;
            tok = line_.substr(pos_, end - pos_);
            pos_ = end;
            return true;
        }
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error("mesh file parse error at line " + std::to_string(line_no_) + ": " + what);
    }

    std::string expect()
    {
        std::string tok;
        if (!next(tok)) fail("unexpected end of file");
        return tok;
    }

    long expect_int()
    {
        const std::string tok = expect();
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(tok, &used);
        } catch (const std::exception&) {
            fail("expected an integer, got '" + tok + "'");
        }
        if (used != tok.size()) fail("expected an integer, got '" + tok + "'");
        return v;
    }

    double expect_real()
    {
        const std::string tok = expect();
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            fail("expected a number, got '" + tok + "'");
        }
        if (used != tok.size()) fail("expected a number, got '" + tok + "'");
        return v;
    }

private:
    std::istream& in_;
    std::string line_;
    std::size_t pos_ = 0;
    int line_no_ = 0;
};

} // namespace

PolyMesh read_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("read_mesh: cannot open '" + path + "'");
    TokenReader r(in);

    if (r.expect() != "RFEM-MESH") r.fail("missing RFEM-MESH header");
    if (r.expect_int() != 1) r.fail("unsupported mesh format version");

    if (r.expect() != "VERTICES") r.fail("expected VERTICES section");
    const long nv = r.expect_int();
    if (nv < 0) r.fail("negative vertex count");
    std::vector<Vec2> vertices;
    vertices.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        const double x = r.expect_real();
        const double y = r.expect_real();
        vertices.emplace_back(x, y);
    }

    if (r.expect() != "CELLS") r.fail("expected CELLS section");
    const long nc = r.expect_int();
    if (nc <= 0) throw Error("mesh has no cells");
    std::vector<std::vector<int>> cells(static_cast<std::size_t>(nc));
    for (long i = 0; i < nc; ++i) {
        const long k = r.expect_int();
        if (k < 3) r.fail("cell with fewer than 3 vertices");
        cells[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(k));
        for (long j = 0; j < k; ++j) {
            const long v = r.expect_int();
            if (v < 0 || v >= nv) throw Error("vertex index out of range");
            cells[static_cast<std::size_t>(i)].push_back(static_cast<int>(v));
        }
    }

    std::vector<int> groups;
    std::string tok;
    if (r.next(tok)) {
        if (tok != "GROUPS") r.fail("expected GROUPS section or end of file");
        const long ng = r.expect_int();
        if (ng != nc) r.fail("GROUPS count must equal the cell count");
        groups.reserve(static_cast<std::size_t>(ng));
        for (long i = 0; i < ng; ++i) groups.push_back(static_cast<int>(r.expect_int()));
    }

    return make_polymesh(std::move(vertices), std::move(cells), std::move(groups));
}

void write_mesh(const PolyMesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw Error("write_mesh: cannot open '" + path + "' for writing");

    out << "RFEM-MESH 1\n";
    out << "VERTICES " << mesh.n_vertices() << "\n";
    char buf[64];
    for (const Vec2& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", v.x(), v.y());
        out << buf;
    }
    out << "CELLS " << mesh.n_cells() << "\n";
    for (const auto& loop : mesh.cells) {
        out << loop.size();
        for (int v : loop) out << ' ' << v;
        out << '\n';
    }
    if (!mesh.groups.empty()) {
        out << "GROUPS " << mesh.groups.size() << "\n";
        for (int g : mesh.groups) out << g << '\n';
    }
    if (!out) throw Error("write_mesh: I/O failure writing '" + path + "'");
}

} // namespace rfem
