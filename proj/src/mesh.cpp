#include "anisostokes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

namespace anisostokes {

double inclusion_diameter(const MeshSpec& spec)
{
    switch (spec.shape) {
    case DomainShape::cube: return std::sqrt(static_cast<double>(spec.dim));
    case DomainShape::ball: return 1.0;
    case DomainShape::none: return 1.0;
    }
    return 1.0;
}

Point Mesh::centroid(int c) const
{
    Point s = Point::Zero();
    const auto& cv = cell(c);
    for (int k = 0; k <= dim_; ++k) s += vertex(cv[static_cast<std::size_t>(k)]);
    return s / static_cast<double>(dim_ + 1);
}

double Mesh::facet_measure(const std::array<int, 3>& v) const
{
    if (dim_ == 2) return (vertex(v[1]) - vertex(v[0])).norm();
    return 0.5 * (vertex(v[1]) - vertex(v[0])).cross(vertex(v[2]) - vertex(v[0])).norm();
}

double Mesh::facet_diameter(const std::array<int, 3>& v) const
{
    double d = 0.0;
    for (int a = 0; a < dim_; ++a)
        for (int b = a + 1; b < dim_; ++b)
            d = std::max(d, (vertex(v[static_cast<std::size_t>(a)]) - vertex(v[static_cast<std::size_t>(b)])).norm());
    return d;
}

namespace {

double signed_measure(int dim, const std::vector<Point>& x, const std::array<int, 4>& c)
{
    if (dim == 2) {
        const Point a = x[static_cast<std::size_t>(c[1])] - x[static_cast<std::size_t>(c[0])];
        const Point b = x[static_cast<std::size_t>(c[2])] - x[static_cast<std::size_t>(c[0])];
        return 0.5 * (a.x() * b.y() - a.y() * b.x());
    }
    const Point a = x[static_cast<std::size_t>(c[1])] - x[static_cast<std::size_t>(c[0])];
    const Point b = x[static_cast<std::size_t>(c[2])] - x[static_cast<std::size_t>(c[0])];
    const Point d = x[static_cast<std::size_t>(c[3])] - x[static_cast<std::size_t>(c[0])];
    return a.dot(b.cross(d)) / 6.0;
}

std::vector<double> graded_sizes(double length, double h0, double qmax)
{
    for (int k = 1; k < 10000; ++k) {
        if (k * h0 >= length * (1.0 - 1e-12)) {
            return std::vector<double>(static_cast<std::size_t>(k), length / k);
        }
        auto total = [&](double q) {
            double s = 0.0;
            double p = h0;
            for (int j = 0; j < k; ++j) {
                s += p;
                p *= q;
            }
            return s;
        };
        if (total(qmax) >= length) {
            double lo = 1.0;
            double hi = qmax;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (total(mid) < length ? lo : hi) = mid;
            }
            const double q = 0.5 * (lo + hi);
            std::vector<double> sizes;
            double p = h0;
            for (int j = 0; j < k; ++j) {
                sizes.push_back(p);
                p *= q;
            }
            // absorb the bisection residual in the outermost cell
            sizes.back() += length - std::accumulate(sizes.begin(), sizes.end(), 0.0);
            return sizes;
        }
    }
    throw Error(ErrorCategory::geometry, "graded_sizes: cannot grade exterior segment");
}

} // namespace

std::vector<double> axis_coordinates(const MeshSpec& spec)
{
    const double R = spec.radius;
    const double h0 = 1.0 / spec.base;
    const auto left = graded_sizes(R, h0, spec.grading);        // [-R, 0]
    const auto right = graded_sizes(R - 1.0, h0, spec.grading); // [1, R]

    std::vector<double> x;
    double pos = 0.0;
    std::vector<double> left_pts{0.0};
    for (double s : left) {
        pos -= s;
        left_pts.push_back(pos);
    }
    left_pts.back() = -R;
    x.assign(left_pts.rbegin(), left_pts.rend());
    for (int i = 1; i <= spec.base; ++i) x.push_back(static_cast<double>(i) / spec.base);
    pos = 1.0;
    for (double s : right) {
        pos += s;
        x.push_back(pos);
    }
    x.back() = R;

    for (int l = 0; l < spec.level; ++l) {
        std::vector<double> y;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            y.push_back(x[i]);
            y.push_back(0.5 * (x[i] + x[i + 1]));
        }
        y.push_back(x.back());
        x = std::move(y);
    }
    return x;
}

Mesh Mesh::from_cells(int dim, std::vector<Point> vertices, std::vector<std::array<int, 4>> cells,
                      std::vector<Side> sides, double radius)
{
    ANISO_REQUIRE(dim == 2 || dim == 3, invalid_argument, "Mesh: dim must be 2 or 3");
    ANISO_REQUIRE(cells.size() == sides.size(), invalid_argument, "Mesh: one side tag per cell required");
    Mesh m;
    m.dim_ = dim;
    m.vertices_ = std::move(vertices);
    m.cells_ = std::move(cells);
    m.sides_ = std::move(sides);
    m.radius_ = radius;

    const int nv = dim + 1;
    m.volumes_.resize(m.cells_.size());
    for (std::size_t c = 0; c < m.cells_.size(); ++c) {
        const auto& cv = m.cells_[c];
        double hmax = 0.0;
        for (int a = 0; a < nv; ++a) {
            ANISO_REQUIRE(cv[static_cast<std::size_t>(a)] >= 0 && cv[static_cast<std::size_t>(a)] < static_cast<int>(m.vertices_.size()),
                          geometry, "Mesh: cell references a missing vertex");
            for (int b = a + 1; b < nv; ++b) {
                hmax = std::max(hmax, (m.vertices_[static_cast<std::size_t>(cv[static_cast<std::size_t>(a)])] -
                                       m.vertices_[static_cast<std::size_t>(cv[static_cast<std::size_t>(b)])]).norm());
            }
        }
        const double vol = std::abs(signed_measure(dim, m.vertices_, cv));
        ANISO_REQUIRE(vol > 1e-12 * std::pow(hmax, dim), geometry, "Mesh: degenerate cell");
        m.volumes_[c] = vol;
        m.h_max_ = std::max(m.h_max_, hmax);
    }

    std::map<std::array<int, 3>, std::array<int, 2>> facets;
    for (std::size_t c = 0; c < m.cells_.size(); ++c) {
        for (int skip = 0; skip < nv; ++skip) {
            std::array<int, 3> key{-1, -1, -1};
            int k = 0;
            for (int a = 0; a < nv; ++a) {
                if (a != skip) key[static_cast<std::size_t>(k++)] = m.cells_[c][static_cast<std::size_t>(a)];
            }
            std::sort(key.begin(), key.begin() + dim);
            auto [it, inserted] = facets.try_emplace(key, std::array<int, 2>{static_cast<int>(c), -1});
            if (!inserted) {
                ANISO_REQUIRE(it->second[1] < 0, geometry, "Mesh: facet shared by more than two cells");
                it->second[1] = static_cast<int>(c);
            }
        }
    }
    for (const auto& [key, owners] : facets) {
        if (owners[1] < 0) {
            ANISO_REQUIRE(m.sides_[static_cast<std::size_t>(owners[0])] == Side::minus, geometry,
                          "Mesh: Omega_+ touches the truncation boundary");
            m.outer_.push_back({key, owners[0]});
        } else {
            const Side s0 = m.sides_[static_cast<std::size_t>(owners[0])];
            const Side s1 = m.sides_[static_cast<std::size_t>(owners[1])];
            if (s0 != s1) {
                InterfaceFacet f;
                f.v = key;
                f.plus_cell = s0 == Side::plus ? owners[0] : owners[1];
                f.minus_cell = s0 == Side::plus ? owners[1] : owners[0];
                m.interface_.push_back(f);
            }
        }
    }
    return m;
}

Mesh build_interface_mesh(const MeshSpec& spec)
{
    ANISO_REQUIRE(spec.dim == 2 || spec.dim == 3, invalid_argument, "MeshSpec: dim must be 2 or 3");
    ANISO_REQUIRE(spec.base >= 1, invalid_argument, "MeshSpec: base must be >= 1");
    ANISO_REQUIRE(spec.level >= 0 && spec.level <= 8, invalid_argument, "MeshSpec: level must be in [0, 8]");
    ANISO_REQUIRE(spec.grading >= 1.0, invalid_argument, "MeshSpec: grading must be >= 1");
    ANISO_REQUIRE(spec.radius > inclusion_diameter(spec), geometry, "MeshSpec: R must exceed diam(Omega_+)");

    const int dim = spec.dim;
    const std::vector<double> x = axis_coordinates(spec);
    const int n = static_cast<int>(x.size()) - 1;
    const int n1 = n + 1;
    const int ny = n;
    const int nz = dim == 3 ? n : 1;
    std::size_t hexes = static_cast<std::size_t>(n) * ny * nz;
    const std::size_t simplices_per_hex = dim == 3 ? 6 : 2;
    if (hexes * simplices_per_hex > spec.max_cells) {
        throw Error(ErrorCategory::resource, "build_interface_mesh: cell count exceeds max_cells");
    }

    // indices of grid lines bounding [0,1]
    const auto lo_it = std::find_if(x.begin(), x.end(), [](double v) { return std::abs(v) < 1e-12; });
    const auto hi_it = std::find_if(x.begin(), x.end(), [](double v) { return std::abs(v - 1.0) < 1e-12; });
    ANISO_REQUIRE(lo_it != x.end() && hi_it != x.end(), geometry, "build_interface_mesh: grid not fitted to [0,1]");
    const int lo = static_cast<int>(lo_it - x.begin());
    const int hi = static_cast<int>(hi_it - x.begin());

    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>(n1) * n1 * (dim == 3 ? n1 : 1));
    const int nzv = dim == 3 ? n1 : 1;
    for (int k = 0; k < nzv; ++k)
        for (int j = 0; j < n1; ++j)
            for (int i = 0; i < n1; ++i)
                vertices.emplace_back(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)],
                                      dim == 3 ? x[static_cast<std::size_t>(k)] : 0.0);
    auto vid = [&](int i, int j, int k) { return i + n1 * (j + n1 * k); };

    std::vector<std::array<int, 3>> perms;
    if (dim == 3) {
        std::array<int, 3> p{0, 1, 2};
        do perms.push_back(p);
        while (std::next_permutation(p.begin(), p.end()));
    } else {
        perms = {{0, 1, 2}, {1, 0, 2}};
    }

    std::vector<std::array<int, 4>> cells;
    std::vector<Side> sides;
    cells.reserve(hexes * simplices_per_hex);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < n; ++i) {
                const bool inside = spec.shape != DomainShape::none && i >= lo && i < hi && j >= lo && j < hi &&
                                    (dim == 2 || (k >= lo && k < hi));
                for (const auto& p : perms) {
                    std::array<int, 3> off{0, 0, 0};
                    std::array<int, 4> c{-1, -1, -1, -1};
                    c[0] = vid(i, j, k);
                    for (int s = 0; s < dim; ++s) {
                        off[static_cast<std::size_t>(p[static_cast<std::size_t>(s)])] = 1;
                        c[static_cast<std::size_t>(s + 1)] = vid(i + off[0], j + off[1], k + off[2]);
                    }
                    if (signed_measure(dim, vertices, c) < 0.0) std::swap(c[1], c[2]);
                    cells.push_back(c);
                    sides.push_back(inside ? Side::plus : Side::minus);
                }
            }

    if (spec.shape == DomainShape::ball) {
        Point centre = Point::Zero();
        for (int d = 0; d < dim; ++d) centre(d) = 0.5;
        const double outer = std::min(1.5, 0.5 + 0.5 * (spec.radius - 1.0));
        for (auto& v : vertices) {
            const Point y = v - centre;
            const double s = y.head(dim).cwiseAbs().maxCoeff();
            const double r = y.norm();
            if (r <= 0.0 || s >= outer) continue;
            const double t = s <= 0.5 ? 1.0 : (outer - s) / (outer - 0.5);
            v = centre + y * (t * s / r + (1.0 - t));
        }
    }

    return Mesh::from_cells(dim, std::move(vertices), std::move(cells), std::move(sides), spec.radius);
}

std::vector<Point> interface_normals(const Mesh& m)
{
    ANISO_REQUIRE(m.has_interface(), invalid_argument, "interface_normals: mesh has no tagged interface facets");
    std::vector<Point> normals;
    normals.reserve(m.interface_facets().size());
    for (const auto& f : m.interface_facets()) {
        ANISO_REQUIRE(f.plus_cell >= 0 && f.minus_cell >= 0, invalid_argument, "interface_normals: untagged facet");
        Point nrm;
        const Point a = m.vertex(f.v[0]);
        const Point b = m.vertex(f.v[1]);
        if (m.dim() == 2) {
            const Point t = b - a;
            nrm = Point(t.y(), -t.x(), 0.0);
        } else {
            nrm = (b - a).cross(m.vertex(f.v[2]) - a);
        }
        nrm.normalize();
        if (nrm.dot(m.centroid(f.minus_cell) - m.centroid(f.plus_cell)) < 0.0) nrm = -nrm;
        normals.push_back(nrm);
    }
    return normals;
}

void export_vtk(const Mesh& m, const std::vector<VtkField>& fields, const std::filesystem::path& path)
{
    for (const auto& f : fields) {
        const std::size_t n = f.location == VtkField::Location::point ? static_cast<std::size_t>(m.num_vertices())
                                                                      : static_cast<std::size_t>(m.num_cells());
        ANISO_REQUIRE(f.components == 1 || f.components == 3, invalid_argument, "export_vtk: components must be 1 or 3");
        ANISO_REQUIRE(f.values.size() == n * static_cast<std::size_t>(f.components), invalid_argument,
                      "export_vtk: field '" + f.name + "' length does not match the mesh");
    }
    std::ofstream out(path, std::ios::binary);
    ANISO_REQUIRE(out.good(), io, "export_vtk: cannot open " + path.string());

    char buf[128];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "# vtk DataFile Version 3.0\nanisostokes\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << m.num_vertices() << " double\n";
    for (const auto& v : m.vertices()) out << num(v.x()) << ' ' << num(v.y()) << ' ' << num(v.z()) << '\n';
    const int nv = m.vertices_per_cell();
    out << "CELLS " << m.num_cells() << ' ' << m.num_cells() * (nv + 1) << '\n';
    for (const auto& c : m.cells()) {
        out << nv;
        for (int a = 0; a < nv; ++a) out << ' ' << c[static_cast<std::size_t>(a)];
        out << '\n';
    }
    out << "CELL_TYPES " << m.num_cells() << '\n';
    for (int c = 0; c < m.num_cells(); ++c) out << (m.dim() == 3 ? 10 : 5) << '\n';

    auto write_section = [&](VtkField::Location loc) {
        for (const auto& f : fields) {
            if (f.location != loc) continue;
            if (f.components == 1) {
                out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
                for (double v : f.values) out << num(v) << '\n';
            } else {
                out << "VECTORS " << f.name << " double\n";
                for (std::size_t i = 0; i < f.values.size(); i += 3)
                    out << num(f.values[i]) << ' ' << num(f.values[i + 1]) << ' ' << num(f.values[i + 2]) << '\n';
            }
        }
    };
    out << "CELL_DATA " << m.num_cells() << '\n';
    out << "SCALARS subdomain int 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < m.num_cells(); ++c) out << (m.side(c) == Side::plus ? 1 : -1) << '\n';
    write_section(VtkField::Location::cell);
    const bool has_point =
        std::any_of(fields.begin(), fields.end(), [](const VtkField& f) { return f.location == VtkField::Location::point; });
    if (has_point) {
        out << "POINT_DATA " << m.num_vertices() << '\n';
        write_section(VtkField::Location::point);
    }
    ANISO_REQUIRE(out.good(), io, "export_vtk: write failed for " + path.string());
}

} // namespace anisostokes
