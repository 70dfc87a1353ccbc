#pragma once

#include "biotstab/coupling.hpp"

#include <atomic>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace biotstab {

// ---------------------------------------------------------------------------
// problem definitions
// ---------------------------------------------------------------------------

/// Consolidation of a fluid-saturated column: load and drainage at x = 0,
/// fixed and impermeable at x = H. Positive load means compression; the
/// pressure response is then positive.
struct TerzaghiSpec {
    double height = 1.0;
    double load = 1.0; // sigma0
    double lam2mu = 1.0;
    double alpha = 1.0;
    double inv_beta = 0.0;
    double conductivity = 1e-10;
    double t_final = 0.1;
    int n_steps = 1;
    int cells = 32;

    MaterialParams material() const
    {
        return MaterialParams::from_constrained_modulus(lam2mu, alpha, inv_beta, conductivity);
    }
};

inline ProblemDefinition terzaghi_problem(const TerzaghiSpec& spec)
{
    if (!(spec.height > 0.0) || spec.load < 0.0 || !(spec.conductivity > 0.0))
        throw InvalidArgument("terzaghi_problem: invalid spec");
    ProblemDefinition p;
    p.mesh = std::make_shared<Mesh>(build_simplicial_mesh(1, spec.cells, {spec.height}));
    p.material = spec.material();
    p.bcs.drain(Side::Left);
    p.bcs.fix_displacement(Side::Right, 0);
    TractionPatch load;
    load.side = Side::Left;
    load.traction = {spec.load, 0, 0}; // compressive: points into the column
    p.bcs.tractions.push_back(load);
    p.t_final = spec.t_final;
    p.n_steps = spec.n_steps;
    return p;
}

/// Single-drained consolidation series with consolidation coefficient
/// c_v = K (lambda + 2 mu); truncated after n_terms odd modes.
inline double terzaghi_analytic(double x, double t, const TerzaghiSpec& spec, int n_terms = 2000)
{
    if (n_terms < 1)
        throw InvalidArgument("terzaghi_analytic: need at least one term");
    const double H = spec.height;
    const double cv = spec.conductivity * spec.lam2mu;
    const double pi = 3.14159265358979323846;
    double sum = 0.0;
    for (int m = 0; m < n_terms; ++m) {
        const double k = 2.0 * m + 1.0;
        const double decay = std::exp(-k * k * pi * pi * cv * t / (4.0 * H * H));
        if (decay == 0.0)
            break;
        sum += decay * std::sin(k * pi * x / (2.0 * H)) / k;
    }
    return 4.0 * spec.load / pi * sum;
}

/// Rectangular domain with a pulsating interior point source, drained on all
/// sides, zero tangential displacement on the whole boundary (normal
/// displacement is free with zero normal traction).
struct BarryMercerSpec {
    double a = 1.0, b = 1.0;
    double x0 = 0.25, y0 = 0.25;
    double E = 1e5;
    double nu = 0.1;
    double alpha = 1.0;
    double inv_beta = 1e-8; // beta = 1e8
    double conductivity = 1e-6;
    double t_final = 1e-4;
    int n_steps = 1;
    int cells = 64;

    MaterialParams material() const
    {
        return MaterialParams::from_young_poisson(E, nu, alpha, inv_beta, conductivity);
    }

    double pulse_rate() const // upsilon
    {
        const MaterialParams m = material();
        return (m.lambda + 2.0 * m.mu) * conductivity / (a * b);
    }
};

inline ProblemDefinition barry_mercer_problem(const BarryMercerSpec& spec)
{
    if (!(spec.x0 > 0.0) || spec.x0 >= spec.a || !(spec.y0 > 0.0) || spec.y0 >= spec.b)
        throw InvalidArgument("barry_mercer_problem: source must be strictly interior");
    ProblemDefinition p;
    p.mesh = std::make_shared<Mesh>(build_simplicial_mesh(2, spec.cells, {spec.a, spec.b}));
    p.material = spec.material();
    for (Side s : {Side::Left, Side::Right, Side::Bottom, Side::Top})
        p.bcs.drain(s);
    p.bcs.fix_displacement(Side::Left, 1);   // vertical sides: u_y = 0
    p.bcs.fix_displacement(Side::Right, 1);
    p.bcs.fix_displacement(Side::Bottom, 0); // horizontal sides: u_x = 0
    p.bcs.fix_displacement(Side::Top, 0);
    const double upsilon = spec.pulse_rate();
    PointSource src;
    src.location = {spec.x0, spec.y0, 0};
    src.amplitude = [upsilon](double t) { return 2.0 * upsilon * std::sin(upsilon * t); };
    p.bcs.point_sources.push_back(src);
    p.t_final = spec.t_final;
    p.n_steps = spec.n_steps;
    return p;
}

/// Unit cube of soil loaded on a centered square patch of the top face,
/// fixed at the base; all faces except the base drain freely (the base is
/// impermeable).
struct FootingSpec {
    double E = 1e5;
    double nu = 0.4;
    double alpha = 1.0;
    double inv_beta = 1e-6; // beta = 1e6
    double conductivity = 1e-10;
    double load = 1e4; // sigma0
    double patch_lo = 0.25, patch_hi = 0.75;
    double t_final = 1e-2;
    int n_steps = 1;
    int cells = 8;

    MaterialParams material() const
    {
        return MaterialParams::from_young_poisson(E, nu, alpha, inv_beta, conductivity);
    }
};

inline ProblemDefinition footing3d_problem(const FootingSpec& spec)
{
    if (spec.cells % 4 != 0)
        throw InvalidArgument("footing3d_problem: load patch is not mesh-aligned "
                              "(cells must be a multiple of 4)");
    ProblemDefinition p;
    p.mesh = std::make_shared<Mesh>(build_simplicial_mesh(3, spec.cells, {1.0, 1.0, 1.0}));
    p.material = spec.material();
    p.bcs.fix_displacement_all(Side::Bottom, 3); // fixed base, no flow (natural)
    for (Side s : {Side::Left, Side::Right, Side::Front, Side::Back, Side::Top})
        p.bcs.drain(s);
    TractionPatch load;
    load.side = Side::Top;
    load.traction = {0, 0, -spec.load}; // downward onto the top face
    load.restricted = true;
    load.box_lo = {spec.patch_lo, spec.patch_lo, 1.0};
    load.box_hi = {spec.patch_hi, spec.patch_hi, 1.0};
    p.bcs.tractions.push_back(load);
    p.t_final = spec.t_final;
    p.n_steps = spec.n_steps;
    return p;
}

// ---------------------------------------------------------------------------
// parameter sweeps
// ---------------------------------------------------------------------------

enum class Benchmark { Terzaghi, BarryMercer, Footing3D };

inline const char* to_string(Benchmark b)
{
    switch (b) {
    case Benchmark::Terzaghi: return "terzaghi";
    case Benchmark::BarryMercer: return "barry-mercer";
    case Benchmark::Footing3D: return "footing3d";
    }
    return "?";
}

struct SweepAxes {
    std::vector<double> conductivities;
    std::vector<double> poisson_ratios;
    std::vector<double> gammas;
    std::vector<int> cells;
};

struct SweepCell {
    double h = 0.0;
    double conductivity = 0.0;
    double nu = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double gamma1 = std::numeric_limits<double>::quiet_NaN();
    double gamma2 = std::numeric_limits<double>::quiet_NaN();
    double L = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct SweepResult {
    Benchmark benchmark = Benchmark::Terzaghi;
    Scheme scheme = Scheme::P1P1;
    std::vector<SweepCell> cells;
};

struct SweepOptions {
    std::optional<StoppingRule> stopping; // default: residual for 1D, increments otherwise
    double tol = 1e-8;
    int max_iterations = 200;
    StorageRegime regime = StorageRegime::SmallStorage;
    int jobs = 1;
};

namespace detail {

inline ProblemDefinition sweep_problem(Benchmark b, double K, double nu, int cells)
{
    switch (b) {
    case Benchmark::Terzaghi: {
        TerzaghiSpec spec;
        spec.conductivity = K;
        spec.cells = cells;
        return terzaghi_problem(spec);
    }
    case Benchmark::BarryMercer: {
        BarryMercerSpec spec;
        spec.conductivity = K;
        spec.nu = nu;
        spec.cells = cells;
        return barry_mercer_problem(spec);
    }
    case Benchmark::Footing3D: {
        FootingSpec spec;
        spec.conductivity = K;
        spec.nu = nu;
        spec.cells = cells;
        return footing3d_problem(spec);
    }
    }
    throw InvalidArgument("sweep_problem: unknown benchmark");
}

template <typename F>
inline void parallel_for(int n, int jobs, F&& body)
{
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                body(i);
        });
    for (auto& th : pool)
        th.join();
}

} // namespace detail

/// Runs the coupled solver over the cartesian product of the supplied axes
/// (order: conductivity, Poisson ratio, gamma, mesh resolution) and records
/// the final-step iteration count per cell. Failures are recorded, never
/// fatal to the sweep.
inline SweepResult run_sweep(Benchmark benchmark, Scheme scheme, const SweepAxes& axes,
                             const SweepOptions& opts = {})
{
    if (axes.conductivities.empty() && axes.poisson_ratios.empty() && axes.gammas.empty() &&
        axes.cells.empty())
        throw InvalidArgument("run_sweep: all axes empty");
    if (benchmark == Benchmark::Terzaghi && !axes.poisson_ratios.empty())
        throw InvalidArgument("run_sweep: Poisson-ratio axis is not meaningful in 1D");

    auto one = [](const std::vector<double>& v, double def) {
        return v.empty() ? std::vector<double>{def} : v;
    };
    const std::vector<double> Ks =
        one(axes.conductivities, benchmark == Benchmark::Terzaghi  ? TerzaghiSpec{}.conductivity
                                 : benchmark == Benchmark::BarryMercer
                                     ? BarryMercerSpec{}.conductivity
                                     : FootingSpec{}.conductivity);
    const std::vector<double> nus =
        one(axes.poisson_ratios,
            benchmark == Benchmark::BarryMercer ? BarryMercerSpec{}.nu : FootingSpec{}.nu);
    const std::vector<int> cellss = axes.cells.empty()
                                        ? std::vector<int>{benchmark == Benchmark::Terzaghi
                                                               ? TerzaghiSpec{}.cells
                                                           : benchmark == Benchmark::BarryMercer
                                                               ? BarryMercerSpec{}.cells
                                                               : FootingSpec{}.cells}
                                        : axes.cells;

    SweepResult result;
    result.benchmark = benchmark;
    result.scheme = scheme;
    const std::size_t n_cells = Ks.size() * nus.size() *
                                std::max<std::size_t>(1, axes.gammas.size()) * cellss.size();
    result.cells.resize(n_cells);

    struct Job {
        double K, nu, gamma;
        bool has_gamma;
        int cells;
        std::size_t index;
    };
    std::vector<Job> jobs;
    jobs.reserve(n_cells);
    std::size_t idx = 0;
    for (double K : Ks)
        for (double nu : nus) {
            if (axes.gammas.empty()) {
                for (int c : cellss)
                    jobs.push_back({K, nu, 0.0, false, c, idx++});
            } else {
                for (double gamma : axes.gammas)
                    for (int c : cellss)
                        jobs.push_back({K, nu, gamma, true, c, idx++});
            }
        }

    detail::parallel_for(static_cast<int>(jobs.size()), opts.jobs, [&](int j) {
        const Job& job = jobs[static_cast<std::size_t>(j)];
        SweepCell cell;
        cell.conductivity = job.K;
        if (benchmark != Benchmark::Terzaghi)
            cell.nu = job.nu;
        try {
            ProblemDefinition problem = detail::sweep_problem(benchmark, job.K, job.nu, job.cells);
            cell.h = problem.mesh->h;
            SolverConfig cfg = optimal_parameters(scheme, problem.material,
                                                  problem.mesh->dim, opts.regime);
            if (job.has_gamma) {
                cfg.mode = ParamMode::OneParameter;
                cfg.gamma = job.gamma;
            }
            cfg.stopping = opts.stopping.value_or(benchmark == Benchmark::Terzaghi
                                                      ? StoppingRule::Residual
                                                      : StoppingRule::Increment);
            cfg.tol = opts.tol;
            cfg.max_iterations = opts.max_iterations;
            cell.L = cfg.L.value_or(0.0);
            if (cfg.mode == ParamMode::OneParameter) {
                cell.gamma = cfg.gamma;
            } else {
                cell.gamma1 = cfg.gamma1;
                cell.gamma2 = cfg.gamma2;
            }
            TransientResult run = run_transient(problem, scheme, SolverChoice::Coupled, cfg,
                                                opts.regime);
            const IterationReport& last = run.reports.back();
            cell.iterations = last.iterations;
            cell.converged = last.converged;
            for (const auto& rep : run.reports)
                cell.converged = cell.converged && rep.converged;
        } catch (const std::exception& err) {
            if (log_level() > 0)
                std::fprintf(stderr, "[sweep] cell failed: %s\n", err.what());
            cell.converged = false;
            cell.iterations = 0;
        }
        result.cells[job.index] = cell;
    });
    return result;
}

// ---------------------------------------------------------------------------
// CSV output (fixed, versioned schema; byte-stable across runs)
// ---------------------------------------------------------------------------

inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& r)
{
    os << "# biotstab sweep v1\n";
    os << "benchmark,scheme,h,K,nu,gamma,gamma1,gamma2,L,iterations,converged\n";
    for (const auto& c : r.cells)
        os << to_string(r.benchmark) << ',' << to_string(r.scheme) << ',' << format_double(c.h)
           << ',' << format_double(c.conductivity) << ',' << format_double(c.nu) << ','
           << format_double(c.gamma) << ',' << format_double(c.gamma1) << ','
           << format_double(c.gamma2) << ',' << format_double(c.L) << ',' << c.iterations << ','
           << (c.converged ? 1 : 0) << '\n';
}

inline SweepResult parse_sweep_csv(std::istream& is)
{
    SweepResult r;
    std::string line;
    bool seen_header = false;
    auto field = [](const std::string& s) {
        return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
    };
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!seen_header) { // column header
            seen_header = true;
            continue;
        }
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ','))
            cols.push_back(item);
        while (cols.size() < 11)
            cols.push_back("");
        SweepCell c;
        r.benchmark = cols[0] == "terzaghi"      ? Benchmark::Terzaghi
                      : cols[0] == "barry-mercer" ? Benchmark::BarryMercer
                                                   : Benchmark::Footing3D;
        r.scheme = cols[1] == "mini" ? Scheme::Mini : Scheme::P1P1;
        c.h = field(cols[2]);
        c.conductivity = field(cols[3]);
        c.nu = field(cols[4]);
        c.gamma = field(cols[5]);
        c.gamma1 = field(cols[6]);
        c.gamma2 = field(cols[7]);
        c.L = field(cols[8]);
        c.iterations = cols[9].empty() ? 0 : std::stoi(cols[9]);
        c.converged = cols[10] == "1";
        r.cells.push_back(c);
    }
    return r;
}

/// Pressure profile along a coordinate line, with the analytic series when
/// one applies.
struct ProfilePoint {
    double x = 0.0;
    double p_numeric = 0.0;
    double p_analytic = std::numeric_limits<double>::quiet_NaN();
};

inline void write_profile_csv(std::ostream& os, const std::vector<ProfilePoint>& pts)
{
    os << "# biotstab profile v1\n";
    os << "x,p_numeric,p_analytic\n";
    for (const auto& pt : pts)
        os << format_double(pt.x) << ',' << format_double(pt.p_numeric) << ','
           << format_double(pt.p_analytic) << '\n';
}

inline std::vector<ProfilePoint> parse_profile_csv(std::istream& is)
{
    std::vector<ProfilePoint> pts;
    std::string line;
    bool seen_header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!seen_header) {
            seen_header = true;
            continue;
        }
        std::stringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        ProfilePoint pt;
        pt.x = std::stod(a);
        pt.p_numeric = std::stod(b);
        pt.p_analytic = c.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(c);
        pts.push_back(pt);
    }
    return pts;
}

/// Nodal values along the grid line through `line_point` in direction
/// `moving_axis` (in 1D every node lies on the line).
inline std::vector<ProfilePoint> scan_line(const Mesh& mesh, const Vec& nodal, int moving_axis,
                                           const std::array<double, 3>& line_point = {0, 0, 0})
{
    if (moving_axis < 0 || moving_axis >= mesh.dim)
        throw InvalidArgument("scan_line: axis out of range");
    std::vector<ProfilePoint> pts;
    const double tol = 1e-10 * std::max(1.0, mesh.h);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        const auto x = mesh.vertex(v);
        bool on_line = true;
        for (int k = 0; k < mesh.dim; ++k)
            if (k != moving_axis && std::abs(x[k] - line_point[k]) > tol)
                on_line = false;
        if (on_line)
            pts.push_back({x[moving_axis], nodal[v], std::numeric_limits<double>::quiet_NaN()});
    }
    std::sort(pts.begin(), pts.end(),
              [](const ProfilePoint& a, const ProfilePoint& b) { return a.x < b.x; });
    return pts;
}

} // namespace biotstab
