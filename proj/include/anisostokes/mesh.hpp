#pragma once

#include "anisostokes/common.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace anisostokes {

enum class DomainShape {
    cube, ///< Omega_+ = [0,1]^n
    ball, ///< the cube grid warped radially onto the ball of radius 1/2 centred at (1/2,...)
    none  ///< no inclusion: every cell belongs to the exterior, no interface
};

/// Truncated two-phase domain: B_R = [-R, R]^n containing Omega_+.
struct MeshSpec {
    int dim = 3;
    DomainShape shape = DomainShape::cube;
    double radius = 4.0;  ///< half-width R of the truncation box
    int level = 1;        ///< uniform bisection count applied to the level-0 grid
    int base = 2;         ///< cells per axis across Omega_+ at level 0
    double grading = 2.0; ///< max geometric growth ratio of exterior cells at level 0
    std::size_t max_cells = 4'000'000;
};

[[nodiscard]] double inclusion_diameter(const MeshSpec& spec);

struct InterfaceFacet {
    std::array<int, 3> v{-1, -1, -1};
    int plus_cell = -1;
    int minus_cell = -1;
};

struct OuterFacet {
    std::array<int, 3> v{-1, -1, -1};
    int cell = -1;
};

/// Conforming simplicial mesh fitted to the interface. Immutable after construction.
class Mesh {
public:
    Mesh() = default;

    /// Builds facet topology from raw cells. Vertex order inside a cell is irrelevant.
    static Mesh from_cells(int dim, std::vector<Point> vertices, std::vector<std::array<int, 4>> cells,
                           std::vector<Side> sides, double radius);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int vertices_per_cell() const noexcept { return dim_ + 1; }
    [[nodiscard]] int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int num_cells() const noexcept { return static_cast<int>(cells_.size()); }

    [[nodiscard]] const std::vector<Point>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const Point& vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
    [[nodiscard]] const std::vector<std::array<int, 4>>& cells() const noexcept { return cells_; }
    [[nodiscard]] const std::array<int, 4>& cell(int c) const { return cells_[static_cast<std::size_t>(c)]; }
    [[nodiscard]] Side side(int c) const { return sides_[static_cast<std::size_t>(c)]; }
    [[nodiscard]] const std::vector<Side>& sides() const noexcept { return sides_; }
    [[nodiscard]] double volume(int c) const { return volumes_[static_cast<std::size_t>(c)]; }
    [[nodiscard]] Point centroid(int c) const;

    [[nodiscard]] const std::vector<InterfaceFacet>& interface_facets() const noexcept { return interface_; }
    [[nodiscard]] const std::vector<OuterFacet>& outer_facets() const noexcept { return outer_; }
    [[nodiscard]] bool has_interface() const noexcept { return !interface_.empty(); }

    [[nodiscard]] double radius() const noexcept { return radius_; }
    [[nodiscard]] double h_max() const noexcept { return h_max_; }

    /// Measure of a facet given by its first `dim` vertex indices.
    [[nodiscard]] double facet_measure(const std::array<int, 3>& v) const;
    /// Longest edge of a facet.
    [[nodiscard]] double facet_diameter(const std::array<int, 3>& v) const;

private:
    int dim_ = 3;
    std::vector<Point> vertices_;
    std::vector<std::array<int, 4>> cells_;
    std::vector<Side> sides_;
    std::vector<double> volumes_;
    std::vector<InterfaceFacet> interface_;
    std::vector<OuterFacet> outer_;
    double radius_ = 0.0;
    double h_max_ = 0.0;
};

/// Per-axis breakpoints of the tensor grid underlying `build_interface_mesh`.
[[nodiscard]] std::vector<double> axis_coordinates(const MeshSpec& spec);

/// Structured hex grid with Kuhn subdivision (n! simplices per hex), fitted to the interface.
[[nodiscard]] Mesh build_interface_mesh(const MeshSpec& spec);

/// Unit normals of the interface facets, pointing from Omega_+ into Omega_-.
[[nodiscard]] std::vector<Point> interface_normals(const Mesh& m);

struct VtkField {
    enum class Location { point, cell };
    std::string name;
    Location location = Location::point;
    int components = 1;
    std::vector<double> values;
};

/// VTK legacy ASCII (v3.0) unstructured grid. Output is byte-identical for identical input.
void export_vtk(const Mesh& m, const std::vector<VtkField>& fields, const std::filesystem::path& path);

} // namespace anisostokes
