#pragma once

#include "anisostokes/mesh.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace anisostokes {

/// MINI velocity (P1 + cell bubble per component) and P1 pressure that is
/// continuous within each subdomain and duplicated across the interface.
///
/// Velocity numbering: vertex v, component k -> v*dim + k; bubble of cell c,
/// component k -> dim*num_vertices + c*dim + k. Trace numbering over the sorted
/// interface vertices: i*dim + k.
class FunctionSpaces {
public:
    explicit FunctionSpaces(std::shared_ptr<const Mesh> mesh);

    [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }

    [[nodiscard]] int num_velocity() const noexcept { return dim_ * (mesh_->num_vertices() + mesh_->num_cells()); }
    [[nodiscard]] int num_vertex_velocity() const noexcept { return dim_ * mesh_->num_vertices(); }
    [[nodiscard]] int velocity_dof(int v, int k) const noexcept { return v * dim_ + k; }
    [[nodiscard]] int bubble_dof(int c, int k) const noexcept { return dim_ * mesh_->num_vertices() + c * dim_ + k; }
    [[nodiscard]] bool is_bubble_dof(int i) const noexcept { return i >= num_vertex_velocity(); }

    [[nodiscard]] int num_pressure() const noexcept { return static_cast<int>(pressure_vertex_.size()); }
    /// -1 when no cell of that side touches the vertex.
    [[nodiscard]] int pressure_dof(int v, Side s) const
    {
        return vertex_pressure_[static_cast<std::size_t>(2 * v + side_index(s))];
    }
    [[nodiscard]] int pressure_vertex(int dof) const { return pressure_vertex_[static_cast<std::size_t>(dof)]; }
    [[nodiscard]] Side pressure_side(int dof) const { return pressure_side_[static_cast<std::size_t>(dof)]; }

    [[nodiscard]] int num_interface_vertices() const noexcept { return static_cast<int>(interface_vertices_.size()); }
    [[nodiscard]] const std::vector<int>& interface_vertices() const noexcept { return interface_vertices_; }
    [[nodiscard]] int interface_index(int v) const { return interface_index_[static_cast<std::size_t>(v)]; }
    [[nodiscard]] int num_trace() const noexcept { return dim_ * num_interface_vertices(); }
    [[nodiscard]] int trace_dof(int i, int k) const noexcept { return i * dim_ + k; }

    [[nodiscard]] bool is_outer_vertex(int v) const { return outer_vertex_[static_cast<std::size_t>(v)] != 0; }
    /// True when some cell of side s contains vertex v.
    [[nodiscard]] bool touches(int v, Side s) const { return pressure_dof(v, s) >= 0; }

    /// Scalar P1 interface matrices (size num_interface_vertices).
    [[nodiscard]] const SpMat& interface_mass() const noexcept { return mass_; }
    [[nodiscard]] const SpMat& interface_stiffness() const noexcept { return stiffness_; }
    /// Mass matrix weighted by the facet diameter.
    [[nodiscard]] const SpMat& interface_mass_h() const noexcept { return mass_h_; }

    /// Applies M_Gamma^{-1} componentwise to a trace-sized vector.
    [[nodiscard]] Vec solve_interface_mass(const Vec& moments) const;
    /// Applies M_Gamma componentwise to a trace-sized vector.
    [[nodiscard]] Vec apply_interface_mass(const Vec& values) const;

    /// E: trace nodal values -> vertex velocity DOFs at interface vertices.
    [[nodiscard]] Vec extend_trace(const Vec& trace_values) const;
    /// E^T: velocity vector -> its interface vertex entries.
    [[nodiscard]] Vec restrict_to_trace(const Vec& velocity) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    int dim_ = 3;
    std::vector<int> vertex_pressure_;
    std::vector<int> pressure_vertex_;
    std::vector<Side> pressure_side_;
    std::vector<int> interface_vertices_;
    std::vector<int> interface_index_;
    std::vector<char> outer_vertex_;
    SpMat mass_;
    SpMat stiffness_;
    SpMat mass_h_;
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> mass_solver_;
};

[[nodiscard]] std::shared_ptr<const FunctionSpaces> build_spaces(std::shared_ptr<const Mesh> mesh);
[[nodiscard]] std::shared_ptr<const FunctionSpaces> build_spaces(Mesh mesh);

/// Discrete (velocity, pressure). A broken velocity is the continuous part `u`
/// plus `jump`, a trace vector added on the Omega_+ side of the interface.
struct FieldPair {
    Vec u;
    Vec p;
    Vec jump;

    [[nodiscard]] static FieldPair zero(const FunctionSpaces& sp);
};

/// Nodal values of a piecewise-linear interface function (components interleaved).
struct TraceField {
    Vec values;
};

/// Functional on the trace space: moments r_i = <psi, phi_i> and the Riesz
/// representative M_Gamma^{-1} r.
struct TraceDensity {
    Vec moments;
    Vec repr;
};

[[nodiscard]] TraceDensity density_from_moments(const FunctionSpaces& sp, Vec moments);
[[nodiscard]] TraceDensity density_from_representative(const FunctionSpaces& sp, Vec repr);
/// Moments of a smooth vector function by facet quadrature.
[[nodiscard]] TraceDensity density_from_function(const FunctionSpaces& sp, const std::function<Point(const Point&)>& psi,
                                                 int points = 4);
/// Interpolant of a vector function at the interface vertices.
[[nodiscard]] TraceField field_from_function(const FunctionSpaces& sp, const std::function<Point(const Point&)>& phi);
/// The unit normal as a density: exact moments of the facetwise-constant nu.
[[nodiscard]] TraceDensity normal_density(const FunctionSpaces& sp);
[[nodiscard]] TraceField constant_trace(const FunctionSpaces& sp, const Point& c);

[[nodiscard]] double pairing(const TraceDensity& psi, const TraceField& phi);

/// Full-length velocity vector seen from one side (continuous part plus the jump on Omega_+).
[[nodiscard]] Vec side_velocity(const FunctionSpaces& sp, const FieldPair& f, Side side);
[[nodiscard]] TraceField trace(const FunctionSpaces& sp, const FieldPair& f, Side side);
[[nodiscard]] TraceField trace(const FunctionSpaces& sp, const Vec& velocity);

enum class NormKind { rho_weighted_l2, gradient_l2, full_h1_weighted };

[[nodiscard]] NormKind parse_norm_kind(const std::string& name);

/// Quadrature norms of a velocity vector, optionally restricted to one subdomain.
[[nodiscard]] double weighted_norm(const FunctionSpaces& sp, const Vec& velocity, NormKind kind,
                                   std::optional<Side> restrict_to = std::nullopt, int points = 6);
/// Broken field: each subdomain sees its own side velocity; gradients summed per subdomain.
[[nodiscard]] double weighted_norm(const FunctionSpaces& sp, const FieldPair& f, NormKind kind, int points = 6);
/// Scalar P1 field given by its vertex values.
[[nodiscard]] double weighted_norm_scalar(const FunctionSpaces& sp, const Vec& vertex_values, NormKind kind,
                                          int points = 6);

enum class TraceNormKind {
    mesh_weighted, ///< |phi|^2 = phi^T (M + K) phi, |psi|^2 = |h_f^{1/2} repr|^2
    interpolation  ///< discrete interpolation norms: M (M^{-1}(K + M))^{1/2} and its inverse
};

/// Dense Gram matrices of the trace norms, expanded over components.
/// `half` acts on nodal trace values, `minus_half` on density moments.
struct TraceNorms {
    TraceNormKind kind = TraceNormKind::mesh_weighted;
    Mat half;
    Mat minus_half;

    [[nodiscard]] double norm(const TraceField& phi) const;
    [[nodiscard]] double norm(const TraceDensity& psi) const;
};

[[nodiscard]] TraceNorms trace_norms(const FunctionSpaces& sp, TraceNormKind kind);

} // namespace anisostokes
