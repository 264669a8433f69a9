#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace anisostokes;

namespace {

template <std::size_t K>
std::set<std::array<int, K>> sub_simplices(const Mesh& m, std::size_t size)
{
    std::set<std::array<int, K>> out;
    const int nv = m.vertices_per_cell();
    for (const auto& c : m.cells()) {
        std::vector<int> v(c.begin(), c.begin() + nv);
        std::sort(v.begin(), v.end());
        std::vector<bool> pick(static_cast<std::size_t>(nv), false);
        std::fill(pick.begin(), pick.begin() + static_cast<long>(size), true);
        do {
            std::array<int, K> s{};
            std::size_t k = 0;
            for (int i = 0; i < nv; ++i)
                if (pick[static_cast<std::size_t>(i)]) s[k++] = v[static_cast<std::size_t>(i)];
            out.insert(s);
        } while (std::prev_permutation(pick.begin(), pick.end()));
    }
    return out;
}

} // namespace

class MeshTopology : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(MeshTopology, EulerCharacteristicOfTheBoxIsOne)
{
    const auto [dim, level] = GetParam();
    const Mesh& m = fixtures::spaces(dim, level)->mesh();
    const long V = m.num_vertices();
    const long E = static_cast<long>(sub_simplices<2>(m, 2).size());
    const long C = m.num_cells();
    if (dim == 2) {
        EXPECT_EQ(V - E + C, 1);
    } else {
        const long F = static_cast<long>(sub_simplices<3>(m, 3).size());
        EXPECT_EQ(V - E + F - C, 1);
    }
}

TEST_P(MeshTopology, InterfaceIsAClosedManifold)
{
    const auto [dim, level] = GetParam();
    const Mesh& m = fixtures::spaces(dim, level)->mesh();
    std::set<int> verts;
    std::map<std::pair<int, int>, int> edges;
    for (const auto& f : m.interface_facets()) {
        EXPECT_GE(f.plus_cell, 0);
        EXPECT_GE(f.minus_cell, 0);
        EXPECT_EQ(m.side(f.plus_cell), Side::plus);
        EXPECT_EQ(m.side(f.minus_cell), Side::minus);
        for (int k = 0; k < dim; ++k) verts.insert(f.v[static_cast<std::size_t>(k)]);
        if (dim == 3)
            for (int a = 0; a < 3; ++a) {
                int p = f.v[static_cast<std::size_t>(a)], q = f.v[static_cast<std::size_t>((a + 1) % 3)];
                ++edges[{std::min(p, q), std::max(p, q)}];
            }
    }
    const long V = static_cast<long>(verts.size());
    const long F = static_cast<long>(m.interface_facets().size());
    if (dim == 2) {
        EXPECT_EQ(V, F); // closed polygon
    } else {
        for (const auto& [e, count] : edges) EXPECT_EQ(count, 2);
        EXPECT_EQ(V - static_cast<long>(edges.size()) + F, 2); // sphere
    }
}

TEST_P(MeshTopology, VolumesAndMeasures)
{
    const auto [dim, level] = GetParam();
    const Mesh& m = fixtures::spaces(dim, level)->mesh();
    double vol[2] = {0.0, 0.0};
    for (int c = 0; c < m.num_cells(); ++c) {
        EXPECT_GT(m.volume(c), 0.0);
        vol[side_index(m.side(c))] += m.volume(c);
    }
    EXPECT_NEAR(vol[0], 1.0, 1e-12);
    EXPECT_NEAR(vol[0] + vol[1], std::pow(2.0 * m.radius(), dim), 1e-9);
    double area = 0.0;
    for (const auto& f : m.interface_facets()) area += m.facet_measure(f.v);
    EXPECT_NEAR(area, 2.0 * dim, 1e-12);
    double outer = 0.0;
    for (const auto& f : m.outer_facets()) outer += m.facet_measure(f.v);
    EXPECT_NEAR(outer, 2.0 * dim * std::pow(2.0 * m.radius(), dim - 1), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Levels, MeshTopology,
                         ::testing::Values(std::make_tuple(2, 0), std::make_tuple(2, 2), std::make_tuple(3, 0),
                                           std::make_tuple(3, 1)));

TEST(Mesh, NormalsPointOutOfTheInclusion)
{
    const Mesh& m = fixtures::spaces(3)->mesh();
    const auto normals = interface_normals(m);
    ASSERT_EQ(normals.size(), m.interface_facets().size());
    for (std::size_t i = 0; i < normals.size(); ++i) {
        const auto& f = m.interface_facets()[i];
        EXPECT_NEAR(normals[i].norm(), 1.0, 1e-14);
        const Point d = m.centroid(f.minus_cell) - m.centroid(f.plus_cell);
        EXPECT_GT(normals[i].dot(d), 0.0);
    }
}

TEST(Mesh, RefinementHalvesTheMeshSize)
{
    const double h0 = fixtures::spaces(2, 0)->mesh().h_max();
    const double h1 = fixtures::spaces(2, 1)->mesh().h_max();
    const double h2 = fixtures::spaces(2, 2)->mesh().h_max();
    EXPECT_NEAR(h0 / h1, 2.0, 1e-12);
    EXPECT_NEAR(h1 / h2, 2.0, 1e-12);
    EXPECT_EQ(fixtures::spaces(2, 1)->mesh().num_cells(), 4 * fixtures::spaces(2, 0)->mesh().num_cells());
    EXPECT_EQ(fixtures::spaces(3, 1)->mesh().num_cells(), 8 * fixtures::spaces(3, 0)->mesh().num_cells());
}

TEST(Mesh, NoInclusionHasNoInterface)
{
    MeshSpec s = fixtures::small_spec(2);
    s.shape = DomainShape::none;
    const Mesh m = build_interface_mesh(s);
    EXPECT_FALSE(m.has_interface());
    EXPECT_THROW((void)interface_normals(m), Error);
}

TEST(Mesh, BallShapeApproximatesTheBall)
{
    MeshSpec s = fixtures::small_spec(2, 2);
    s.shape = DomainShape::ball;
    const Mesh m = build_interface_mesh(s);
    double vol = 0.0;
    for (int c = 0; c < m.num_cells(); ++c)
        if (m.side(c) == Side::plus) vol += m.volume(c);
    EXPECT_NEAR(vol, M_PI * 0.25, 0.05);
    for (const auto& f : m.interface_facets())
        for (int k = 0; k < 2; ++k)
            EXPECT_NEAR((m.vertex(f.v[static_cast<std::size_t>(k)]) - Point(0.5, 0.5, 0.0)).norm(), 0.5, 1e-12);
}

TEST(Mesh, RejectsBadSpecs)
{
    MeshSpec s = fixtures::small_spec(3);
    s.radius = 0.5;
    EXPECT_THROW((void)build_interface_mesh(s), Error);
    s = fixtures::small_spec(4);
    EXPECT_THROW((void)build_interface_mesh(s), Error);
    s = fixtures::small_spec(3, 2);
    s.max_cells = 1000;
    try {
        (void)build_interface_mesh(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::resource);
    }
}

TEST(Vtk, WritesAParsableLegacyFile)
{
    const auto sp = fixtures::spaces(2);
    const Mesh& m = sp->mesh();
    std::vector<double> scalar(static_cast<std::size_t>(m.num_vertices()));
    for (int v = 0; v < m.num_vertices(); ++v) scalar[static_cast<std::size_t>(v)] = m.vertex(v).x() * 0.1;
    const auto path = std::filesystem::temp_directory_path() / "anisostokes_test_mesh.vtk";
    export_vtk(m, {{"phi", VtkField::Location::point, 1, scalar}}, path);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# vtk DataFile Version 3.0");
    std::string word;
    int n = 0;
    while (in >> word && word != "POINTS") {
    }
    in >> n >> word;
    ASSERT_EQ(n, m.num_vertices());
    for (int v = 0; v < n; ++v) {
        Point x;
        in >> x.x() >> x.y() >> x.z();
        EXPECT_EQ(x, m.vertex(v));
    }
    int nc = 0, total = 0;
    in >> word >> nc >> total;
    EXPECT_EQ(word, "CELLS");
    ASSERT_EQ(nc, m.num_cells());
    EXPECT_EQ(total, nc * 4);
    for (int c = 0; c < nc; ++c) {
        int k = 0;
        in >> k;
        ASSERT_EQ(k, 3);
        for (int a = 0; a < 3; ++a) {
            int idx = 0;
            in >> idx;
            EXPECT_EQ(idx, m.cell(c)[static_cast<std::size_t>(a)]);
        }
    }
    while (in >> word && word != "phi") {
    }
    in >> word >> word >> word >> word; // double 1 LOOKUP_TABLE default
    for (int v = 0; v < n; ++v) {
        double x = 0.0;
        in >> x;
        EXPECT_EQ(x, scalar[static_cast<std::size_t>(v)]);
    }

    const auto again = std::filesystem::temp_directory_path() / "anisostokes_test_mesh2.vtk";
    export_vtk(m, {{"phi", VtkField::Location::point, 1, scalar}}, again);
    std::ifstream a(path), b(again);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
    std::filesystem::remove(path);
    std::filesystem::remove(again);
}

TEST(Vtk, RejectsMismatchedField)
{
    const Mesh& m = fixtures::spaces(2)->mesh();
    EXPECT_THROW(export_vtk(m, {{"bad", VtkField::Location::point, 1, {1.0}}}, "/tmp/x.vtk"), Error);
}
