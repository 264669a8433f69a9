#pragma once

#include "anisostokes/potentials.hpp"
#include "anisostokes/transmission.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace anisostokes {

/// Everything a run needs. Every field has a default; see README for the key table.
struct RunConfig {
    MeshSpec mesh;

    std::string tensor_kind = "isotropic"; ///< isotropic | two-phase | diagonal | symmetric-gradient | skew | indefinite
    double mu = 1.0;
    double mu_plus = 2.0;
    double mu_minus = 1.0;
    std::vector<double> weights{1.0, 2.0, 3.0};
    double skew = 0.5;

    OuterBc outer_bc = OuterBc::traction_free;
    SolverOptions solver;

    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "out";
    int threads = 1;

    std::string potential_kind = "single";  ///< single | double | newtonian | adjoint-single
    std::string potential_density = "nu";   ///< nu | constant | random | smooth
    Point potential_constant{1.0, 0.0, 0.0};
    bool potential_operators = false;

    TransmissionBackend transmission_backend = TransmissionBackend::monolithic;
    std::string transmission_data = "smooth"; ///< smooth | random | zero
    double transmission_scale = 1.0;

    double ns_lambda = 1.0;
    int ns_max_iter = 25;
    double ns_tol = 1e-8;
    double ns_data_fraction = 0.5; ///< data scaled to this fraction of zeta; <= 0 keeps the raw data
    int ns_probes = 16;

    bool infsup_equal_order = false;
    int infsup_max_iter = 300;
    double infsup_tol = 1e-10;

    double stokes_support = 1.4; ///< radius of the manufactured bump

    bool verify_materialize = true;
    int verify_samples = 10;
    TraceNormKind verify_trace_norm = TraceNormKind::interpolation;
    bool verify_picard = true;
};

/// Parses `key = value` lines. `[section]` headers prefix the following keys; `#` starts a comment.
/// Unknown keys and malformed values raise a config error naming the line and key.
[[nodiscard]] RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
[[nodiscard]] RunConfig parse_config_file(const std::filesystem::path& path);

/// Applies one dotted-key override on top of an existing config.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// All recognised keys with their current values, in a stable order.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

[[nodiscard]] DomainShape parse_shape(const std::string& name);
[[nodiscard]] std::string shape_name(DomainShape s);
[[nodiscard]] TraceNormKind parse_trace_norm_kind(const std::string& name);

[[nodiscard]] CoeffTensor make_tensor(const RunConfig& cfg);

/// Data set of the transmission problem selected by transmission.data.
[[nodiscard]] TransmissionData make_transmission_data(const TransmissionContext& ctx, const std::string& kind,
                                                      std::uint64_t seed);

/// Density and trace selected by potential.density and potential.constant.
[[nodiscard]] TraceDensity make_potential_density(const FunctionSpaces& sp, const RunConfig& cfg);
[[nodiscard]] TraceField make_potential_trace(const FunctionSpaces& sp, const RunConfig& cfg);

/// Fixed smooth vector field used for densities and traces.
[[nodiscard]] Point smooth_profile(const Point& x);

/// Compact description used in report headers.
[[nodiscard]] std::string fingerprint(const RunConfig& cfg);

/// %.17g formatting shared by every CSV writer.
[[nodiscard]] std::string format_double(double x);

} // namespace anisostokes
