#pragma once

// Experiment drivers behind the command-line tool. Each command turns an
// ExperimentConfig into one or more Reports; nothing here touches the file
// system except spec loading, so a command either produces all of its
// reports or throws.

#include "blowup.hpp"
#include "error.hpp"
#include "fem.hpp"
#include "functional.hpp"
#include "geometry.hpp"
#include "greens.hpp"
#include "mesh.hpp"
#include "rearrangement.hpp"
#include "report.hpp"
#include "sampling.hpp"
#include "testfn.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mfe {

inline std::vector<double> default_schedule() { return {4.0 * pi, 6.0 * pi, 7.0 * pi, 7.5 * pi, 7.9 * pi}; }

/// Comma-separated lambda values; a trailing "pi" multiplies by pi ("7.9pi").
inline std::vector<double> parse_schedule(const std::string& csv)
{
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw InputError("schedule: empty entry");
        item = item.substr(b, e - b + 1);
        double factor = 1.0;
        if (item.size() >= 2 && item.compare(item.size() - 2, 2, "pi") == 0) {
            factor = pi;
            item.resize(item.size() - 2);
            if (item.empty()) item = "1";
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw InputError("schedule: cannot parse '" + item + "'");
        }
        if (used != item.size()) throw InputError("schedule: cannot parse '" + item + "'");
        out.push_back(v * factor);
    }
    if (out.empty()) throw InputError("schedule: no values");
    return out;
}

struct ExperimentConfig {
    std::string command;
    std::vector<std::string> spec_paths;
    double h = 0.05;
    std::vector<double> schedule = default_schedule();
    std::vector<double> epsilons = default_bubble_epsilons();
    std::vector<double> lambdas = default_bubble_lambdas();
    std::string out_dir = "mfe-out";
    std::uint64_t seed = 1;
    double tol_scale = 1.0;

    /// Canonical text of every field that affects results.
    std::string canonical() const
    {
        std::ostringstream os;
        os << std::setprecision(17) << "command=" << command << ";h=" << h << ";seed=" << seed
           << ";tol_scale=" << tol_scale << ";schedule=";
        for (double v : schedule) os << v << ',';
        os << ";epsilons=";
        for (double v : epsilons) os << v << ',';
        os << ";lambdas=";
        for (double v : lambdas) os << v << ',';
        os << ";specs=";
        for (const auto& p : spec_paths) os << p << ',';
        return os.str();
    }

    std::string hash() const { return hex64(fnv1a(canonical())); }

    void validate() const
    {
        static const std::vector<std::string> known{"robin",        "energy",        "verify-theorem1", "strip-check",
                                                    "testfn-bound", "blowup-trace", "suite"};
        if (std::find(known.begin(), known.end(), command) == known.end())
            throw InputError("unknown command '" + command + "'");
        if (command != "suite" && spec_paths.empty()) throw InputError(command + ": at least one --spec is required");
        for (const auto& p : spec_paths)
            if (!std::filesystem::is_regular_file(p)) throw InputError("spec file not found: '" + p + "'");
        if (!(h > 0.0)) throw InputError("--h must be positive");
        if (!(tol_scale > 0.0)) throw InputError("--tol-scale must be positive");
        for (std::size_t i = 0; i < schedule.size(); ++i) {
            if (!(schedule[i] > 0.0 && schedule[i] < critical_lambda))
                throw InputError("schedule values must lie in (0, 8 pi)");
            if (i > 0 && !(schedule[i] > schedule[i - 1])) throw InputError("schedule must be strictly increasing");
        }
        if (schedule.empty()) throw InputError("empty schedule");
        for (double e : epsilons)
            if (!(e > 0.0)) throw InputError("bubble epsilons must be positive");
        for (double l : lambdas)
            if (!(l > 0.0)) throw InputError("bubble Lambdas must be positive");
    }
};

struct NamedDomain {
    std::string name;
    Domain domain;
};

inline std::vector<NamedDomain> load_domains(const std::vector<std::string>& paths)
{
    std::vector<NamedDomain> out;
    for (const auto& p : paths) out.push_back({std::filesystem::path(p).stem().string(), Domain(load_domain_spec(p))});
    return out;
}

/// The six area-pi reference domains.
inline std::vector<NamedDomain> suite_domains()
{
    const double s = std::sqrt(pi);
    return {
        {"disk", Domain(DomainSpec{DomainKind::disk, {1.0}})},
        {"square", Domain(DomainSpec{DomainKind::rectangle, {s, s}})},
        {"ellipse-2to1", Domain(DomainSpec{DomainKind::ellipse, {std::sqrt(2.0), std::sqrt(0.5)}})},
        {"ellipse-4to1", Domain(DomainSpec{DomainKind::ellipse, {2.0, 0.5}})},
        {"rectangle-0.8", Domain(DomainSpec{DomainKind::rectangle, {0.8, pi / 0.8}})},
        {"fourier", normalize_area(Domain(DomainSpec{DomainKind::fourier, {1.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.05}}))},
    };
}

struct CommandOutput {
    /// File name (relative to the output directory) and report.
    std::vector<std::pair<std::string, Report>> reports;

    bool ok() const
    {
        for (const auto& [_, r] : reports)
            if (!r.ok()) return false;
        return true;
    }
};

namespace detail {

inline std::string fmt(double v, int digits = 10)
{
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

inline Report start_report(const ExperimentConfig& cfg, const Tolerances& tol, const std::string& command)
{
    Report r(command);
    r.set("config_hash", cfg.hash());
    r.set("seed", std::to_string(cfg.seed));
    r.set("h", cfg.h);
    for (const auto& [k, v] : tol.list()) r.set("tolerance." + k, v);
    return r;
}

/// Area-pi copy of the domain and the scale factor applied.
inline std::pair<Domain, double> area_pi(const Domain& d)
{
    const double s = std::sqrt(pi / d.area());
    if (std::abs(s - 1.0) < 1e-12) return {d, 1.0};
    return {normalize_area(d), s};
}

inline bool is_disk(const Domain& d)
{
    return d.kind() == DomainKind::disk ||
           (d.kind() == DomainKind::ellipse && d.spec().params[0] == d.spec().params[1]);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Commands

inline Report run_robin(const ExperimentConfig& cfg, const Tolerances& tol, const NamedDomain& nd)
{
    Report rep = detail::start_report(cfg, tol, "robin");
    rep.set("domain", nd.name);
    const RobinReport r = robin_sup(nd.domain);
    rep.section("robin", format_robin_report(r));
    if (!(r.convergence_delta <= tol["robin.convergence"]))
        rep.fail("greens.convergence: doubling the charge count moved the value by " + detail::fmt(r.convergence_delta));
    return rep;
}

inline Report run_energy(const ExperimentConfig& cfg, const Tolerances& tol, const NamedDomain& nd)
{
    Report rep = detail::start_report(cfg, tol, "energy");
    rep.set("domain", nd.name);
    const auto [d, scale] = detail::area_pi(nd.domain);
    rep.set("area_scale", scale);
    MeshPolicy pol;
    pol.h = cfg.h;
    const ContinuationTrace trace = continuation(d, cfg.schedule, 0.0, pol);
    const EnergyEstimate est = energy_estimate(d);
    const BlowupTrace bt = blowup_trace(d, trace, 8.0 * pi * est.gamma_sup);
    rep.set("gamma_sup", est.gamma_sup);
    rep.set("energy_upper", est.upper);
    rep.set("energy_lower_if_not_attained", est.lower);
    rep.set("classification", std::string(to_string(bt.classification)));
    rep.section("continuation", format_continuation_trace(trace));
    for (const auto& s : trace.steps) {
        if (!(s.result.mt_slack >= -tol["mt.slack"]))
            rep.fail("functional.mt_slack at lambda " + detail::fmt(s.result.lambda));
        if (!(s.result.energy <= tol["energy.positive"]))
            rep.fail("functional.energy_sign at lambda " + detail::fmt(s.result.lambda));
    }
    if (bt.classification == BlowupClass::blowup && !trace.steps.empty() &&
        !(trace.steps.back().result.energy >= est.upper - tol["testfn.bound"]))
        rep.fail("functional.two_sided: continuation energy below -1 - 4 pi gamma");
    return rep;
}

struct Theorem1Row {
    std::string name;
    double gamma_sup = 0.0;
    double estimate = 0.0;
    double excess = 0.0;      // estimate - E(B1)
    double energy_u = 0.0;    // I(u, Omega) at the comparison lambda
    double energy_sym = 0.0;  // I(u*, B1)
    double disk_value = 0.0;  // E_lambda(B1)
    bool disk = false;
};

inline constexpr double theorem1_comparison_lambda = 6.0 * pi;

inline Theorem1Row theorem1_row(const NamedDomain& nd, double h)
{
    Theorem1Row row;
    row.name = nd.name;
    const auto [d, scale] = detail::area_pi(nd.domain);
    (void)scale;
    row.disk = detail::is_disk(d);
    const EnergyEstimate est = energy_estimate(d);
    row.gamma_sup = est.gamma_sup;
    row.estimate = est.upper;
    row.excess = est.upper + 1.0;
    // rearrangement branch: I(u, Omega) >= I(u*, B1) >= E(B1)
    const FunctionalParams p{theorem1_comparison_lambda, 0.0, pi};
    const auto mesh = std::make_shared<const Mesh>(triangulate(d, h));
    const MinimizeResult r = minimize(mesh, p, Field::zero(mesh));
    const auto disk_mesh = std::make_shared<const Mesh>(triangulate(Domain(DomainSpec{DomainKind::disk, {1.0}}), h));
    const Field sym = symmetrize(r.field, disk_mesh);
    row.energy_u = eval_I(r.field, p);
    row.energy_sym = eval_I(sym, p);
    row.disk_value = disk_energy(theorem1_comparison_lambda);
    return row;
}

inline Report run_verify_theorem1(const ExperimentConfig& cfg, const Tolerances& tol, const std::vector<NamedDomain>& ds)
{
    Report rep = detail::start_report(cfg, tol, "verify-theorem1");
    std::ostringstream tab;
    tab << std::setprecision(10)
        << "domain gamma_sup estimate excess I_u_6pi I_sym_6pi E_disk_6pi\n";
    for (const auto& nd : ds) {
        const Theorem1Row row = theorem1_row(nd, cfg.h);
        tab << row.name << ' ' << row.gamma_sup << ' ' << row.estimate << ' ' << row.excess << ' ' << row.energy_u
            << ' ' << row.energy_sym << ' ' << row.disk_value << '\n';
        if (!(row.estimate >= -1.0 - tol["theorem1.floor"])) rep.fail("theorem1.floor: " + row.name);
        if (row.disk) {
            if (!(std::abs(row.excess) <= tol["theorem1.floor"])) rep.fail("theorem1.disk_equality: " + row.name);
        } else if (!(row.excess >= tol["theorem1.excess"])) {
            rep.fail("theorem1.strict_excess: " + row.name);
        }
        if (!(row.energy_sym <= row.energy_u + tol["rearrangement.compare"]))
            rep.fail("rearrangement.comparison: " + row.name);
        if (!(row.energy_sym >= row.disk_value - tol["rearrangement.compare"]))
            rep.fail("rearrangement.disk_floor: " + row.name);
    }
    rep.section("estimates", tab.str());
    rep.section("notes",
                "estimate = -1 - 4 pi gamma_sup is an upper bound for E_8pi and a lower bound when the infimum is not "
                "attained; the rearrangement columns give the other branch at lambda = 6 pi.\n");
    return rep;
}

inline std::string strip_verdict(double width)
{
    std::ostringstream os;
    os << std::setprecision(4);
    const double c = critical_strip_width();
    if (width <= c) os << "criterion satisfied: " << width << " ≤ " << c;
    else os << "criterion violated: " << width << " > " << c;
    return os.str();
}

struct StripCheck {
    StripCover cover;
    std::string verdict;
    bool satisfied = false;
    double energy_bound = 0.0;
    ContinuationTrace trace;
    BlowupTrace blowup;
};

inline StripCheck strip_check(const Domain& d0, double h, const std::vector<double>& schedule)
{
    StripCheck out;
    const auto [d, scale] = detail::area_pi(d0);
    (void)scale;
    out.cover = min_strip_width(d);
    out.satisfied = out.cover.width <= critical_strip_width();
    out.verdict = strip_verdict(out.cover.width);
    out.energy_bound = strip_energy_bound(out.cover.width);
    MeshPolicy pol;
    pol.h = h;
    out.trace = continuation(d, schedule, 0.0, pol);
    out.blowup = blowup_trace(d, out.trace);
    return out;
}

inline Report run_strip_check(const ExperimentConfig& cfg, const Tolerances& tol, const NamedDomain& nd)
{
    Report rep = detail::start_report(cfg, tol, "strip-check");
    rep.set("domain", nd.name);
    const StripCheck s = strip_check(nd.domain, cfg.h, cfg.schedule);
    rep.set("strip_width", s.cover.width);
    rep.set("strip_normal_angle", s.cover.normal_angle);
    rep.set("critical_width", critical_strip_width());
    rep.set("verdict", s.verdict);
    rep.set("strip_energy_bound", s.energy_bound);
    rep.set("classification", std::string(to_string(s.blowup.classification)));
    rep.section("continuation", format_continuation_trace(s.trace));
    if (s.satisfied && s.blowup.classification == BlowupClass::blowup)
        rep.fail("blowup.strip_consistency: thin domain classified as blowup");
    return rep;
}

inline Report run_testfn_bound(const ExperimentConfig& cfg, const Tolerances& tol, const NamedDomain& nd)
{
    Report rep = detail::start_report(cfg, tol, "testfn-bound");
    rep.set("domain", nd.name);
    const auto [d, scale] = detail::area_pi(nd.domain);
    rep.set("area_scale", scale);
    const RobinReport rr = robin_sup(d);
    const GreenEvaluator g = make_green(d, rr.argmax);
    const TestFunctionTable tab = testfn_grid(d, rr.argmax, rr.gamma_sup, g, cfg.h, cfg.epsilons, cfg.lambdas);
    const double target = energy_from_gamma(rr.gamma_sup);
    const double best = tab.best_value();
    rep.set("gamma_sup", rr.gamma_sup);
    rep.set("target", target);
    rep.set("best_value", best);
    rep.section("grid", format_testfn_table(tab));
    if (!(best <= target + tol["testfn.bound"])) rep.fail("testfn.bound: best value above -1 - 4 pi gamma + tolerance");
    return rep;
}

struct TraceSummary {
    BlowupTrace trace;
    double far_field_bound = -std::numeric_limits<double>::infinity();   // C(K)
    double lower_bound_slack = std::numeric_limits<double>::quiet_NaN();
    std::size_t lower_bound_samples = 0;
};

inline TraceSummary blowup_summary(const Domain& d, const ContinuationTrace& c, std::optional<double> A = std::nullopt)
{
    TraceSummary s;
    s.trace = blowup_trace(d, c, A);
    for (const auto& r : s.trace.records)
        if (!std::isnan(r.far_field_sup)) s.far_field_bound = std::max(s.far_field_bound, r.far_field_sup);
    if (!c.steps.empty()) {
        const auto& r = c.steps.back().result;
        const double outer = 0.9 * d.distance_to_boundary(r.argmax);
        const double inner = s.trace.window / alpha_of(r);
        if (outer > inner) {
            const auto samples = green_lower_bound_samples(r, make_green(d, r.argmax), s.trace.window, s.trace.A, outer);
            double worst = std::numeric_limits<double>::infinity();
            for (const auto& q : samples) worst = std::min(worst, q.u - q.bound);
            s.lower_bound_slack = worst;
            s.lower_bound_samples = samples.size();
        }
    }
    return s;
}

inline Report run_blowup_trace(const ExperimentConfig& cfg, const Tolerances& tol, const NamedDomain& nd)
{
    Report rep = detail::start_report(cfg, tol, "blowup-trace");
    rep.set("domain", nd.name);
    const auto [d, scale] = detail::area_pi(nd.domain);
    rep.set("area_scale", scale);
    MeshPolicy pol;
    pol.h = cfg.h;
    const ContinuationTrace c = continuation(d, cfg.schedule, 0.0, pol);
    const TraceSummary s = blowup_summary(d, c);
    rep.set("classification", std::string(to_string(s.trace.classification)));
    rep.set("far_field_bound", s.far_field_bound);
    rep.set("green_lower_bound_min_slack", s.lower_bound_slack);
    rep.set("green_lower_bound_samples", std::to_string(s.lower_bound_samples));
    rep.section("trace", format_blowup_trace(s.trace));
    rep.section("notes", "the sampled lower bound u >= 8 pi G + D is evidence at finite lambda, not a verification.\n");
    for (std::size_t i = 0; i < s.trace.records.size(); ++i) {
        const auto& r = s.trace.records[i];
        const auto& m = c.steps[i].result;
        const double alpha = std::sqrt((1.0 - m.epsilon) * pi / std::exp(m.log_exp_integral)) * std::exp(0.5 * m.max_value);
        if (!(std::abs(alpha - r.alpha) <= 1e-10 * alpha)) rep.fail("blowup.alpha_formula at step " + std::to_string(i));
        const double target = (1.0 - r.epsilon) * pi;
        if (!(std::abs(r.rescaled_mass - target) <= tol["bubble.mass"] * target))
            rep.fail("blowup.mass at step " + std::to_string(i));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Acceptance battery

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

inline std::string format_criterion(const CriterionResult& c)
{
    std::ostringstream os;
    os << "criterion " << c.id << " " << (c.pass ? "PASS" : "FAIL") << " " << c.title << ": " << c.detail;
    return os.str();
}

namespace detail {

template <class F>
CriterionResult timed(int id, std::string title, F&& body)
{
    CriterionResult c;
    c.id = id;
    c.title = std::move(title);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = std::string("error: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return c;
}

} // namespace detail

/// Resolutions the battery runs at.
struct BatterySettings {
    double disk_h = 0.025;         // subcritical disk energies and the bubble profile
    double probe_h = 0.05;         // strip-check continuation probes
    double testfn_h = 0.05;
    double property_h = 0.08;      // random-field property suites
    std::size_t mt_fields = 200;
    std::size_t ps_fields = 100;
    std::size_t fd_pairs = 20;
};

inline std::vector<CriterionResult> run_battery(std::uint64_t seed, const Tolerances& tol,
                                                const std::function<void(const CriterionResult&)>& on_result = {},
                                                const BatterySettings& set = {})
{
    std::vector<CriterionResult> out;
    auto emit = [&](CriterionResult c) {
        if (on_result) on_result(c);
        out.push_back(std::move(c));
    };
    const auto domains = suite_domains();
    const Domain unit_disk(DomainSpec{DomainKind::disk, {1.0}});

    emit(detail::timed(1, "Robin function of the disk", [&](CriterionResult& c) {
        const MfsSolver solver(unit_disk);
        double worst = 0.0;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                const double r = 0.7 * double(i) / 4.0, th = two_pi * (double(j) + 0.5 * double(i)) / 5.0;
                const Point x{r * std::cos(th), r * std::sin(th)};
                worst = std::max(worst, std::abs(solver.robin(x) - robin_disk(x)));
            }
        c.pass = worst <= tol["robin.disk"];
        c.detail = "max error " + detail::fmt(worst, 3) + " at 25 points";
    }));
    out.back().pass = out.back().pass && out.back().seconds <= 5.0;

    emit(detail::timed(2, "strip Robin maximum", [&](CriterionResult& c) {
        double worst = 0.0;
        for (double d : {0.5, 1.0, pi / 2.0}) worst = std::max(worst, std::abs(strip_robin_max(d).value - strip_robin_sup(d)));
        const double at_half_pi = std::abs(strip_robin_max(pi / 2.0).value);
        c.pass = worst <= tol["strip.closed_form"] && at_half_pi <= tol["strip.closed_form"];
        c.detail = "max deviation " + detail::fmt(worst, 3) + ", value at pi/2 " + detail::fmt(at_half_pi, 3);
    }));

    std::vector<RobinReport> robin;
    emit(detail::timed(3, "Robin suprema of area-pi domains", [&](CriterionResult& c) {
        bool ok = true;
        std::ostringstream os;
        os << std::setprecision(6);
        for (const auto& nd : domains) {
            robin.push_back(robin_sup(nd.domain));
            const double g = robin.back().gamma_sup;
            os << nd.name << ' ' << g << "; ";
            ok = ok && g <= tol["gamma.max"];
            if (detail::is_disk(nd.domain)) ok = ok && std::abs(g) <= tol["gamma.disk"];
            else ok = ok && g <= -tol["gamma.excess"];
        }
        c.pass = ok;
        c.detail = os.str();
    }));
    out.back().pass = out.back().pass && out.back().seconds <= 120.0;

    ContinuationTrace disk_trace;
    emit(detail::timed(4, "subcritical disk energies", [&](CriterionResult& c) {
        MeshPolicy pol;
        pol.h = set.disk_h;
        disk_trace = continuation(unit_disk, default_schedule(), 0.0, pol);
        double worst = 0.0;
        std::size_t nv = 0;
        for (const auto& s : disk_trace.steps) {
            worst = std::max(worst, std::abs(s.result.energy - disk_energy(s.result.lambda)));
            nv = std::max(nv, s.vertices);
        }
        c.pass = disk_trace.steps.size() == 5 && worst <= tol["energy.disk"] && nv <= 100000;
        c.detail = "max error " + detail::fmt(worst, 3) + ", vertices " + std::to_string(nv);
    }));
    out.back().pass = out.back().pass && out.back().seconds <= 600.0;

    emit(detail::timed(5, "energy estimates over the suite", [&](CriterionResult& c) {
        if (robin.size() != domains.size()) throw Error("Robin suprema unavailable");
        bool ok = true;
        std::ostringstream os;
        os << std::setprecision(6);
        for (std::size_t i = 0; i < domains.size(); ++i) {
            const double e = energy_from_gamma(robin[i].gamma_sup);
            os << domains[i].name << ' ' << e << "; ";
            ok = ok && e >= -1.0 - tol["theorem1.floor"];
            if (!detail::is_disk(domains[i].domain)) ok = ok && e + 1.0 >= tol["theorem1.excess"];
        }
        c.pass = ok;
        c.detail = os.str();
    }));

    emit(detail::timed(6, "glued test function bound", [&](CriterionResult& c) {
        if (robin.size() != domains.size()) throw Error("Robin suprema unavailable");
        bool ok = true;
        std::ostringstream os;
        os << std::setprecision(6);
        for (std::size_t i = 0; i < domains.size(); ++i) {
            const auto& d = domains[i].domain;
            const auto& rr = robin[i];
            const auto tab = testfn_grid(d, rr.argmax, rr.gamma_sup, make_green(d, rr.argmax), set.testfn_h);
            const double slack = tab.best_value() - energy_from_gamma(rr.gamma_sup);
            os << domains[i].name << ' ' << slack << "; ";
            ok = ok && slack <= tol["testfn.bound"];
        }
        c.pass = ok;
        c.detail = "best minus target: " + os.str();
    }));

    emit(detail::timed(7, "strip criterion probe", [&](CriterionResult& c) {
        const StripCheck rect = strip_check(domains[4].domain, set.probe_h, default_schedule());
        const StripCheck disk = strip_check(unit_disk, set.probe_h, default_schedule());
        c.pass = rect.satisfied && rect.blowup.classification == BlowupClass::bounded && !disk.satisfied &&
                 disk.blowup.classification == BlowupClass::blowup;
        c.detail = "rectangle: " + rect.verdict + ", " + to_string(rect.blowup.classification) + "; disk: " +
                   disk.verdict + ", " + to_string(disk.blowup.classification);
    }));

    emit(detail::timed(8, "bubble profile at 7.9 pi", [&](CriterionResult& c) {
        if (disk_trace.steps.empty()) throw Error("disk trace unavailable");
        const auto& r = disk_trace.steps.back().result;
        const double R = 4.0;
        const double dist = bubble_distance(rescale_profile(unit_disk, r, R), R);
        const double D = d_epsilon(r, R, 0.0);
        const double ref = 2.0 * std::log(R * R / (1.0 + R * R));
        c.pass = dist <= tol["bubble.distance"] && std::abs(D - ref) <= tol["bubble.d_eps"];
        c.detail = "bubble distance " + detail::fmt(dist, 4) + ", D " + detail::fmt(D, 6) + " vs " + detail::fmt(ref, 6);
    }));

    emit(detail::timed(9, "property suites", [&](CriterionResult& c) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<std::shared_ptr<const FemSpace>> spaces;
        for (const auto& nd : domains)
            spaces.push_back(std::make_shared<const FemSpace>(std::make_shared<const Mesh>(triangulate(nd.domain, set.property_h))));
        const auto disk_mesh = std::make_shared<const Mesh>(triangulate(unit_disk, set.property_h));
        double mt_worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < set.mt_fields; ++i) {
            const auto& S = *spaces[i % spaces.size()];
            const Field f = random_smooth_field(S, rng, 0.1 + 7.9 * unit(rng));
            mt_worst = std::min(mt_worst, mt_bound_check(f));
        }
        double ps_worst = std::numeric_limits<double>::infinity();
        RandomFieldOptions pos;
        pos.nonnegative = true;
        for (std::size_t i = 0; i < set.ps_fields; ++i) {
            const auto& S = *spaces[i % spaces.size()];
            const Field f = random_smooth_field(S, rng, 0.1 + 4.9 * unit(rng), pos);
            ps_worst = std::min(ps_worst, polya_szego_slack(f, disk_mesh) / dirichlet_energy(f));
        }
        double fd_worst = 0.0;
        for (std::size_t i = 0; i < set.fd_pairs; ++i) {
            const auto& S = *spaces[i % spaces.size()];
            const Field f = random_smooth_field(S, rng, 0.5 + 3.0 * unit(rng));
            const Field v = random_smooth_field(S, rng, 1.0);
            const FunctionalParams p{2.0 * pi + 5.0 * pi * unit(rng), 0.0, std::nullopt};
            const double t = 1e-5;
            Field a = f, b = f;
            a.values += t * v.values;
            b.values -= t * v.values;
            const double fd = (eval_I(a, p) - eval_I(b, p)) / (2.0 * t);
            const double an = grad_I(f, p).values.dot(v.values);
            fd_worst = std::max(fd_worst, std::abs(fd - an) / std::max(std::abs(an), 1e-300));
        }
        c.pass = mt_worst >= -tol["mt.slack"] && ps_worst >= -tol["ps.relative"] && fd_worst <= tol["fd.relative"];
        c.detail = "min MT slack " + detail::fmt(mt_worst, 4) + ", min PS slack/energy " + detail::fmt(ps_worst, 4) +
                   ", max FD relative error " + detail::fmt(fd_worst, 3);
    }));

    emit(detail::timed(10, "level-set comparison on the disk", [&](CriterionResult& c) {
        // resolve the pole: edges down to 1e-5 with slow growth
        const auto mesh = std::make_shared<const Mesh>(triangulate(unit_disk, 0.05, Grading{{0.0, 0.0}, 1e-5, 0.1}));
        const double cap = -std::log(0.5e-5) / two_pi;
        const Field g = Field::interpolate_admissible(mesh, [&](Point x) {
            const double r = norm(x);
            return r < 0.5e-5 ? cap : -std::log(r) / two_pi;
        });
        std::vector<double> ts;
        for (int i = 0; i <= 10; ++i) ts.push_back(0.5 + 0.1 * double(i));
        const auto phi = level_comparison(g, ts);
        double lo = phi.front(), hi = phi.front();
        for (double v : phi) lo = std::min(lo, v), hi = std::max(hi, v);
        c.pass = lo >= 0.0 && hi <= tol["phi.upper"];
        c.detail = "phi in [" + detail::fmt(lo, 3) + ", " + detail::fmt(hi, 3) + "] for t in [0.5, 1.5]";
    }));
    return out;
}

inline Report run_suite(const ExperimentConfig& cfg, const Tolerances& tol,
                        const std::function<void(const CriterionResult&)>& on_result = {})
{
    Report rep = detail::start_report(cfg, tol, "suite");
    const auto results = run_battery(cfg.seed, tol, on_result);
    std::ostringstream os;
    std::size_t passed = 0;
    for (const auto& c : results) {
        os << format_criterion(c) << '\n';
        if (c.pass) ++passed;
        else rep.fail("criterion " + std::to_string(c.id) + " (" + c.title + ")");
    }
    os << passed << "/" << results.size() << " criteria passed\n";
    rep.section("summary", os.str());
    return rep;
}

/// Runs a config on already loaded domains.
inline CommandOutput run_command(const ExperimentConfig& cfg, const std::vector<NamedDomain>& domains,
                                 const std::function<void(const CriterionResult&)>& on_result = {})
{
    const Tolerances tol(cfg.tol_scale);
    CommandOutput out;
    const std::string& c = cfg.command;
    if (c == "suite") {
        out.reports.emplace_back("suite.txt", run_suite(cfg, tol, on_result));
    } else if (c == "verify-theorem1") {
        out.reports.emplace_back("verify-theorem1.txt", run_verify_theorem1(cfg, tol, domains));
    } else {
        for (const auto& nd : domains) {
            const std::string file = c + "-" + nd.name + ".txt";
            if (c == "robin") out.reports.emplace_back(file, run_robin(cfg, tol, nd));
            else if (c == "energy") out.reports.emplace_back(file, run_energy(cfg, tol, nd));
            else if (c == "strip-check") out.reports.emplace_back(file, run_strip_check(cfg, tol, nd));
            else if (c == "testfn-bound") out.reports.emplace_back(file, run_testfn_bound(cfg, tol, nd));
            else if (c == "blowup-trace") out.reports.emplace_back(file, run_blowup_trace(cfg, tol, nd));
        }
    }
    return out;
}

/// Validates, loads the spec files, then runs.
inline CommandOutput run_command(const ExperimentConfig& cfg)
{
    cfg.validate();
    return run_command(cfg, load_domains(cfg.spec_paths));
}

} // namespace mfe
