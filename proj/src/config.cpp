#include "anisostokes/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

namespace anisostokes {

std::string format_double(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

DomainShape parse_shape(const std::string& name)
{
    if (name == "cube") return DomainShape::cube;
    if (name == "ball") return DomainShape::ball;
    if (name == "none") return DomainShape::none;
    throw Error(ErrorCategory::config, "unknown mesh shape '" + name + "'");
}

std::string shape_name(DomainShape s)
{
    switch (s) {
    case DomainShape::cube: return "cube";
    case DomainShape::ball: return "ball";
    case DomainShape::none: return "none";
    }
    return "cube";
}

TraceNormKind parse_trace_norm_kind(const std::string& name)
{
    if (name == "interpolation") return TraceNormKind::interpolation;
    if (name == "mesh-weighted") return TraceNormKind::mesh_weighted;
    throw Error(ErrorCategory::config, "unknown trace norm '" + name + "'");
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct BadValue {
    std::string expected;
};

double to_double(const std::string& v)
{
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (...) {
        throw BadValue{"a number"};
    }
    if (pos != v.size() || !std::isfinite(x)) throw BadValue{"a number"};
    return x;
}

long long to_int(const std::string& v)
{
    std::size_t pos = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &pos);
    } catch (...) {
        throw BadValue{"an integer"};
    }
    if (pos != v.size()) throw BadValue{"an integer"};
    return x;
}

bool to_bool(const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw BadValue{"a boolean"};
}

std::vector<double> to_list(const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
    if (out.empty()) throw BadValue{"a comma-separated list of numbers"};
    return out;
}

std::string from_list(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

template <class F>
auto choice(F parse, const std::string& v, const char* expected)
{
    try {
        return parse(v);
    } catch (const Error&) {
        throw BadValue{expected};
    }
}

struct Entry {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Entry>& entries()
{
    static const std::vector<Entry> table = [] {
        std::vector<Entry> t;
        auto add = [&t](std::string k, std::function<void(RunConfig&, const std::string&)> s,
                        std::function<std::string(const RunConfig&)> g) { t.push_back({std::move(k), std::move(s), std::move(g)}); };
        auto num = [](double x) { return format_double(x); };

        add("mesh.dim", [](RunConfig& c, const std::string& v) {
            const auto d = to_int(v);
            if (d != 2 && d != 3) throw BadValue{"2 or 3"};
            c.mesh.dim = static_cast<int>(d);
        }, [](const RunConfig& c) { return std::to_string(c.mesh.dim); });
        add("mesh.shape", [](RunConfig& c, const std::string& v) { c.mesh.shape = choice(parse_shape, v, "cube, ball or none"); },
            [](const RunConfig& c) { return shape_name(c.mesh.shape); });
        add("mesh.radius", [](RunConfig& c, const std::string& v) {
            c.mesh.radius = to_double(v);
            if (c.mesh.radius <= 1.0) throw BadValue{"a radius > 1"};
        }, [num](const RunConfig& c) { return num(c.mesh.radius); });
        add("mesh.level", [](RunConfig& c, const std::string& v) {
            const auto l = to_int(v);
            if (l < 0 || l > 6) throw BadValue{"a level in [0, 6]"};
            c.mesh.level = static_cast<int>(l);
        }, [](const RunConfig& c) { return std::to_string(c.mesh.level); });
        add("mesh.base", [](RunConfig& c, const std::string& v) {
            const auto b = to_int(v);
            if (b < 1 || b > 64) throw BadValue{"an integer in [1, 64]"};
            c.mesh.base = static_cast<int>(b);
        }, [](const RunConfig& c) { return std::to_string(c.mesh.base); });
        add("mesh.grading", [](RunConfig& c, const std::string& v) {
            c.mesh.grading = to_double(v);
            if (c.mesh.grading < 1.0) throw BadValue{"a ratio >= 1"};
        }, [num](const RunConfig& c) { return num(c.mesh.grading); });

        add("tensor.kind", [](RunConfig& c, const std::string& v) {
            static const std::vector<std::string> kinds{"isotropic", "two-phase", "diagonal", "symmetric-gradient", "skew",
                                                        "indefinite"};
            if (std::find(kinds.begin(), kinds.end(), v) == kinds.end())
                throw BadValue{"isotropic, two-phase, diagonal, symmetric-gradient, skew or indefinite"};
            c.tensor_kind = v;
        }, [](const RunConfig& c) { return c.tensor_kind; });
        add("tensor.mu", [](RunConfig& c, const std::string& v) { c.mu = to_double(v); },
            [num](const RunConfig& c) { return num(c.mu); });
        add("tensor.mu_plus", [](RunConfig& c, const std::string& v) { c.mu_plus = to_double(v); },
            [num](const RunConfig& c) { return num(c.mu_plus); });
        add("tensor.mu_minus", [](RunConfig& c, const std::string& v) { c.mu_minus = to_double(v); },
            [num](const RunConfig& c) { return num(c.mu_minus); });
        add("tensor.weights", [](RunConfig& c, const std::string& v) { c.weights = to_list(v); },
            [](const RunConfig& c) { return from_list(c.weights); });
        add("tensor.skew", [](RunConfig& c, const std::string& v) { c.skew = to_double(v); },
            [num](const RunConfig& c) { return num(c.skew); });

        add("bc.outer", [](RunConfig& c, const std::string& v) { c.outer_bc = choice(parse_outer_bc, v, "traction-free or dirichlet"); },
            [](const RunConfig& c) { return std::string(c.outer_bc == OuterBc::dirichlet ? "dirichlet" : "traction-free"); });

        add("solver.backend", [](RunConfig& c, const std::string& v) { c.solver.backend = choice(parse_backend, v, "direct or uzawa"); },
            [](const RunConfig& c) {
                return std::string(c.solver.backend == SolverOptions::Backend::uzawa ? "uzawa" : "direct");
            });
        add("solver.tol", [](RunConfig& c, const std::string& v) {
            c.solver.tol = to_double(v);
            if (c.solver.tol <= 0.0) throw BadValue{"a positive number"};
        }, [num](const RunConfig& c) { return num(c.solver.tol); });
        add("solver.max_iter", [](RunConfig& c, const std::string& v) {
            const auto m = to_int(v);
            if (m < 1) throw BadValue{"a positive integer"};
            c.solver.max_iter = static_cast<int>(m);
        }, [](const RunConfig& c) { return std::to_string(c.solver.max_iter); });

        add("seed", [](RunConfig& c, const std::string& v) {
            const auto s = to_int(v);
            if (s < 0) throw BadValue{"a nonnegative integer"};
            c.seed = static_cast<std::uint64_t>(s);
        }, [](const RunConfig& c) { return std::to_string(c.seed); });
        add("output.dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
            [](const RunConfig& c) { return c.out_dir.string(); });
        add("threads", [](RunConfig& c, const std::string& v) {
            const auto n = to_int(v);
            if (n < 1) throw BadValue{"a positive integer"};
            c.threads = static_cast<int>(n);
        }, [](const RunConfig& c) { return std::to_string(c.threads); });

        add("potential.kind", [](RunConfig& c, const std::string& v) {
            if (v != "single" && v != "double" && v != "newtonian" && v != "adjoint-single")
                throw BadValue{"single, double, newtonian or adjoint-single"};
            c.potential_kind = v;
        }, [](const RunConfig& c) { return c.potential_kind; });
        add("potential.density", [](RunConfig& c, const std::string& v) {
            if (v != "nu" && v != "constant" && v != "random" && v != "smooth")
                throw BadValue{"nu, constant, random or smooth"};
            c.potential_density = v;
        }, [](const RunConfig& c) { return c.potential_density; });
        add("potential.constant", [](RunConfig& c, const std::string& v) {
            const auto l = to_list(v);
            if (l.size() < 2 || l.size() > 3) throw BadValue{"2 or 3 comma-separated numbers"};
            c.potential_constant = Point(l[0], l[1], l.size() == 3 ? l[2] : 0.0);
        }, [](const RunConfig& c) {
            return from_list({c.potential_constant.x(), c.potential_constant.y(), c.potential_constant.z()});
        });
        add("potential.operators", [](RunConfig& c, const std::string& v) { c.potential_operators = to_bool(v); },
            [](const RunConfig& c) { return std::string(c.potential_operators ? "true" : "false"); });

        add("transmission.backend", [](RunConfig& c, const std::string& v) {
            c.transmission_backend = choice(parse_transmission_backend, v, "monolithic or representation");
        }, [](const RunConfig& c) { return backend_name(c.transmission_backend); });
        add("transmission.data", [](RunConfig& c, const std::string& v) {
            if (v != "smooth" && v != "random" && v != "zero") throw BadValue{"smooth, random or zero"};
            c.transmission_data = v;
        }, [](const RunConfig& c) { return c.transmission_data; });
        add("transmission.scale", [](RunConfig& c, const std::string& v) { c.transmission_scale = to_double(v); },
            [num](const RunConfig& c) { return num(c.transmission_scale); });

        add("navier.lambda", [](RunConfig& c, const std::string& v) { c.ns_lambda = to_double(v); },
            [num](const RunConfig& c) { return num(c.ns_lambda); });
        add("navier.max_iter", [](RunConfig& c, const std::string& v) {
            const auto m = to_int(v);
            if (m < 1) throw BadValue{"a positive integer"};
            c.ns_max_iter = static_cast<int>(m);
        }, [](const RunConfig& c) { return std::to_string(c.ns_max_iter); });
        add("navier.tol", [](RunConfig& c, const std::string& v) {
            c.ns_tol = to_double(v);
            if (c.ns_tol <= 0.0) throw BadValue{"a positive number"};
        }, [num](const RunConfig& c) { return num(c.ns_tol); });
        add("navier.data_fraction", [](RunConfig& c, const std::string& v) { c.ns_data_fraction = to_double(v); },
            [num](const RunConfig& c) { return num(c.ns_data_fraction); });
        add("navier.probes", [](RunConfig& c, const std::string& v) {
            const auto p = to_int(v);
            if (p < 8) throw BadValue{"an integer >= 8"};
            c.ns_probes = static_cast<int>(p);
        }, [](const RunConfig& c) { return std::to_string(c.ns_probes); });

        add("infsup.equal_order", [](RunConfig& c, const std::string& v) { c.infsup_equal_order = to_bool(v); },
            [](const RunConfig& c) { return std::string(c.infsup_equal_order ? "true" : "false"); });
        add("infsup.max_iter", [](RunConfig& c, const std::string& v) {
            const auto m = to_int(v);
            if (m < 2) throw BadValue{"an integer >= 2"};
            c.infsup_max_iter = static_cast<int>(m);
        }, [](const RunConfig& c) { return std::to_string(c.infsup_max_iter); });
        add("infsup.tol", [](RunConfig& c, const std::string& v) {
            c.infsup_tol = to_double(v);
            if (c.infsup_tol <= 0.0) throw BadValue{"a positive number"};
        }, [num](const RunConfig& c) { return num(c.infsup_tol); });

        add("stokes.support", [](RunConfig& c, const std::string& v) {
            c.stokes_support = to_double(v);
            if (c.stokes_support <= 0.0) throw BadValue{"a positive number"};
        }, [num](const RunConfig& c) { return num(c.stokes_support); });

        add("verify.materialize", [](RunConfig& c, const std::string& v) { c.verify_materialize = to_bool(v); },
            [](const RunConfig& c) { return std::string(c.verify_materialize ? "true" : "false"); });
        add("verify.samples", [](RunConfig& c, const std::string& v) {
            const auto s = to_int(v);
            if (s < 1) throw BadValue{"a positive integer"};
            c.verify_samples = static_cast<int>(s);
        }, [](const RunConfig& c) { return std::to_string(c.verify_samples); });
        add("verify.trace_norm", [](RunConfig& c, const std::string& v) {
            c.verify_trace_norm = choice(parse_trace_norm_kind, v, "interpolation or mesh-weighted");
        }, [](const RunConfig& c) {
            return std::string(c.verify_trace_norm == TraceNormKind::interpolation ? "interpolation" : "mesh-weighted");
        });
        add("verify.picard", [](RunConfig& c, const std::string& v) { c.verify_picard = to_bool(v); },
            [](const RunConfig& c) { return std::string(c.verify_picard ? "true" : "false"); });
        return t;
    }();
    return table;
}

const Entry* find_entry(const std::string& key)
{
    for (const auto& e : entries())
        if (e.key == key) return &e;
    return nullptr;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& where)
{
    const Entry* e = find_entry(key);
    if (e == nullptr) throw Error(ErrorCategory::config, where + "unknown key '" + key + "'");
    try {
        e->set(cfg, value);
    } catch (const BadValue& bad) {
        throw Error(ErrorCategory::config, where + "key '" + key + "': expected " + bad.expected + ", got '" + value + "'");
    }
}

} // namespace

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    apply(cfg, key, value, "");
}

RunConfig parse_config(const std::string& text, const std::string& source)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(number) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorCategory::config, where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCategory::config, where + "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw Error(ErrorCategory::config, where + "empty key");
        if (!section.empty()) key = section + "." + key;
        apply(cfg, key, value, where);
    }
    return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : entries()) out.emplace_back(e.key, e.get(cfg));
    return out;
}

CoeffTensor make_tensor(const RunConfig& cfg)
{
    const int n = cfg.mesh.dim;
    const std::string& k = cfg.tensor_kind;
    if (k == "isotropic") return make_isotropic_constant(n, cfg.mu);
    if (k == "two-phase") return make_isotropic_two_phase(n, cfg.mu_plus, cfg.mu_minus);
    if (k == "diagonal") {
        std::vector<double> w = cfg.weights;
        ANISO_REQUIRE(static_cast<int>(w.size()) >= n, config, "tensor.weights needs one value per direction");
        w.resize(static_cast<std::size_t>(n));
        return make_diagonal_anisotropic(n, w);
    }
    if (k == "symmetric-gradient") return make_symmetric_gradient(n, cfg.mu);
    if (k == "skew") {
        // mu_+- delta_ij delta_ab plus a skew coupling s delta_ij S_ab; the coupling drops out of the
        // quadratic form, so ellipticity is that of the isotropic part.
        ANISO_REQUIRE(cfg.mu_plus > 0.0 && cfg.mu_minus > 0.0, config, "skew tensor needs positive mu_plus, mu_minus");
        const double s = cfg.skew;
        const double mp = cfg.mu_plus;
        const double mm = cfg.mu_minus;
        auto field = [n, s, mp, mm](const Point&, Side side) {
            static const double S[3][3] = {{0.0, 1.0, 0.5}, {-1.0, 0.0, 1.0}, {-0.5, -1.0, 0.0}};
            TensorValue a(n);
            const double m = side == Side::plus ? mp : mm;
            for (int i = 0; i < n; ++i)
                for (int al = 0; al < n; ++al)
                    for (int be = 0; be < n; ++be) a(i, i, al, be) = (al == be ? m : 0.0) + s * S[al][be];
            return a;
        };
        auto t = make_general(n, field, std::max({1.0, mp + std::abs(s), mm + std::abs(s), 1.0 / mp, 1.0 / mm}));
        t.set_label("skew");
        return t;
    }
    if (k == "indefinite") {
        // Negative control: mu_+ is taken with a flipped sign inside Omega_+.
        const double mp = -std::abs(cfg.mu_plus);
        const double mm = cfg.mu_minus;
        auto field = [n, mp, mm](const Point&, Side side) {
            TensorValue a(n);
            for (int i = 0; i < n; ++i)
                for (int al = 0; al < n; ++al) a(i, i, al, al) = side == Side::plus ? mp : mm;
            return a;
        };
        auto t = make_general(n, field, std::max({1.0, std::abs(mp), std::abs(mm), 1.0 / std::abs(mm)}));
        t.set_label("indefinite");
        return t;
    }
    throw Error(ErrorCategory::config, "unknown tensor kind '" + k + "'");
}

TransmissionData make_transmission_data(const TransmissionContext& ctx, const std::string& kind, std::uint64_t seed)
{
    const FunctionSpaces& sp = ctx.spaces();
    TransmissionData d = TransmissionData::zero(sp);
    if (kind == "zero") return d;
    if (kind == "random") {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < sp.num_velocity(); ++i) {
            d.f_plus.moments(i) = normal(rng);
            d.f_minus.moments(i) = normal(rng);
        }
        d.f_plus.moments = ctx.restrict_to_side(d.f_plus.moments, Side::plus);
        d.f_minus.moments = ctx.restrict_to_side(d.f_minus.moments, Side::minus);
        for (int i = 0; i < sp.num_trace(); ++i) {
            d.h.values(i) = normal(rng);
            d.g.moments(i) = normal(rng);
        }
        d.g = density_from_moments(sp, d.g.moments);
    } else if (kind == "smooth") {
        const int n = sp.dim();
        auto fp = [n](const Point& x, Side) {
            Point f(std::sin(M_PI * x.y()), std::cos(M_PI * x.x()), n == 3 ? std::sin(M_PI * (x.x() + x.y())) : 0.0);
            return f;
        };
        auto fm = [n](const Point& x, Side) {
            const double w = 1.0 / std::pow(1.0 + x.squaredNorm(), 2);
            return Point(w * x.y(), -w * x.x(), n == 3 ? w : 0.0);
        };
        d.f_plus = assemble_volume_load(sp, fp, Side::plus);
        d.f_minus = assemble_volume_load(sp, fm, Side::minus);
        if (sp.num_trace() > 0) {
            d.h = field_from_function(sp, [n](const Point& x) {
                return Point(x.y() * x.z() + 0.5, std::sin(x.x()), n == 3 ? x.x() * x.y() : 0.0);
            });
            d.g = density_from_function(sp, [n](const Point& x) {
                return Point(std::cos(x.z()), x.x() - x.y(), n == 3 ? 1.0 + x.y() : 0.0);
            });
        }
    } else {
        throw Error(ErrorCategory::config, "unknown transmission data '" + kind + "'");
    }
    if (ctx.system().outer_bc == OuterBc::dirichlet && sp.num_trace() > 0) {
        d.h = remove_trace_flux(ctx.system(), d.h);
    }
    return d;
}

Point smooth_profile(const Point& x)
{
    return {std::cos(M_PI * x.x()) + 0.5, std::sin(M_PI * x.y()), x.x() * x.z()};
}

namespace {

Vec random_trace_vec(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

Point dim_cut(const FunctionSpaces& sp, Point p)
{
    if (sp.dim() == 2) p.z() = 0.0;
    return p;
}

} // namespace

TraceDensity make_potential_density(const FunctionSpaces& sp, const RunConfig& cfg)
{
    const std::string& k = cfg.potential_density;
    if (k == "nu") return normal_density(sp);
    if (k == "random") return density_from_moments(sp, random_trace_vec(sp.num_trace(), cfg.seed));
    if (k == "constant") {
        const Point c = dim_cut(sp, cfg.potential_constant);
        return density_from_function(sp, [c](const Point&) { return c; });
    }
    if (k == "smooth") return density_from_function(sp, [&sp](const Point& x) { return dim_cut(sp, smooth_profile(x)); });
    throw Error(ErrorCategory::config, "unknown potential density '" + k + "'");
}

TraceField make_potential_trace(const FunctionSpaces& sp, const RunConfig& cfg)
{
    const std::string& k = cfg.potential_density;
    if (k == "random") return {random_trace_vec(sp.num_trace(), cfg.seed)};
    if (k == "constant") return constant_trace(sp, dim_cut(sp, cfg.potential_constant));
    if (k == "nu") return {normal_density(sp).repr};
    if (k == "smooth") return field_from_function(sp, [&sp](const Point& x) { return dim_cut(sp, smooth_profile(x)); });
    throw Error(ErrorCategory::config, "unknown potential density '" + k + "'");
}

std::string fingerprint(const RunConfig& cfg)
{
    std::ostringstream os;
    os << "dim=" << cfg.mesh.dim << " shape=" << shape_name(cfg.mesh.shape) << " R=" << cfg.mesh.radius
       << " level=" << cfg.mesh.level << " base=" << cfg.mesh.base << " tensor=" << cfg.tensor_kind
       << " bc=" << (cfg.outer_bc == OuterBc::dirichlet ? "dirichlet" : "traction-free") << " seed=" << cfg.seed;
    return os.str();
}

} // namespace anisostokes
