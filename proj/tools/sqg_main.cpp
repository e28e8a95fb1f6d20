// Command-line front end: reproducible experiments over the library modules,
// driven by sectioned key=value configs with flag overrides. Every run writes
// its artifacts plus a manifest (config hash, seed, artifact checksums).

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqg/io.hpp"
#include "sqg/kernels.hpp"
#include "sqg/model.hpp"
#include "sqg/noise.hpp"
#include "sqg/norms.hpp"
#include "sqg/solver.hpp"
#include "sqg/structure.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sqg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiagnostic = 3;

const std::set<std::string>& allowed_keys() {
    static const std::set<std::string> keys{
        "global.mu", "global.kappa", "global.eps", "global.seed", "global.grid", "global.T",
        "global.samples", "global.lambda_list", "global.out",
        "structure.depth", "structure.gamma_cut",
        "kernels.kind", "kernels.radii", "kernels.deriv", "kernels.nmax", "kernels.resolution",
        "kernels.moment_degree", "kernels.eps_list", "kernels.nu", "kernels.pair",
        "noise.mollifier", "noise.literal_scaling",
        "model.symbols", "model.symbol", "model.delta", "model.lambda", "model.increments",
        "model.t_star_frac", "model.center", "model.threads", "model.stderr_stop",
        "model.check_every", "model.centers", "model.radii",
        "solver.nt", "solver.dealias", "solver.init", "solver.noise", "solver.blowup_cap",
        "solver.snapshots", "solver.eps_list", "solver.compare_mollifiers", "solver.eta",
        "norms.alpha", "norms.delta", "norms.eta", "norms.centers",
    };
    return keys;
}

struct Ctx {
    std::map<std::string, std::string> cfg;
    std::string out_dir = "out";
    Manifest manifest;

    bool has(const std::string& k) const { return cfg.count(k) > 0; }
    std::string get(const std::string& k, const std::string& dflt) const {
        auto it = cfg.find(k);
        return it == cfg.end() ? dflt : it->second;
    }
    double get_double(const std::string& k, double dflt) const {
        auto it = cfg.find(k);
        if (it == cfg.end()) return dflt;
        // Rational inputs are accepted anywhere a real is expected.
        if (it->second.find('/') != std::string::npos) return Rational::parse(it->second).to_double();
        return std::stod(it->second);
    }
    Rational get_rational(const std::string& k, const Rational& dflt) const {
        auto it = cfg.find(k);
        if (it == cfg.end()) return dflt;
        if (it->second.find('.') != std::string::npos)
            std::cerr << "note: decimal value for " << k << " coerced to an exact rational\n";
        return Rational::parse(it->second);
    }
    long get_long(const std::string& k, long dflt) const {
        auto it = cfg.find(k);
        return it == cfg.end() ? dflt : std::stol(it->second);
    }
    std::uint64_t seed() const { return static_cast<std::uint64_t>(get_long("global.seed", 1)); }
    std::vector<double> get_list(const std::string& k, const std::vector<double>& dflt) const {
        auto it = cfg.find(k);
        if (it == cfg.end()) return dflt;
        std::vector<double> out;
        std::istringstream in(it->second);
        std::string tok;
        while (std::getline(in, tok, ','))
            out.push_back(tok.find('/') != std::string::npos ? Rational::parse(tok).to_double()
                                                             : std::stod(tok));
        if (out.empty()) throw std::runtime_error("empty list for " + k);
        return out;
    }
    /// grid spec NX[xNY[xNT]]
    NoiseGrid grid(std::size_t dflt_nx, std::size_t dflt_nt, double dflt_T) const {
        NoiseGrid g;
        g.nx = g.ny = dflt_nx;
        g.nt = dflt_nt;
        g.T = get_double("global.T", dflt_T);
        auto it = cfg.find("global.grid");
        if (it != cfg.end()) {
            std::vector<long> dims;
            std::istringstream in(it->second);
            std::string tok;
            while (std::getline(in, tok, 'x')) dims.push_back(std::stol(tok));
            if (dims.empty() || dims.size() > 3) throw std::runtime_error("bad grid spec");
            g.nx = static_cast<std::size_t>(dims[0]);
            g.ny = dims.size() > 1 ? static_cast<std::size_t>(dims[1]) : g.nx;
            if (dims.size() > 2) g.nt = static_cast<std::size_t>(dims[2]);
        }
        return g;
    }

    void note_artifact(const std::string& name) {
        manifest.artifacts[name] = sha256_file(out_dir + "/" + name);
    }
    void write_json(const std::string& name, const json& j) {
        write_text_file(out_dir + "/" + name, j.dump(2) + "\n");
        note_artifact(name);
    }
    void finish(const std::string& command) {
        manifest.command = command;
        manifest.seed = seed();
        manifest.config = cfg;
        write_manifest(out_dir, manifest);
    }
};

json fit_to_json(const ScalingFit& f) {
    json pts = json::array();
    for (auto [x, y] : f.points) pts.push_back({x, y});
    return json{{"slope", f.slope},
                {"intercept", f.intercept},
                {"max_residual", f.max_residual},
                {"points", pts},
                {"excluded", f.excluded},
                {"log_mode", f.log_mode}};
}

json homogeneity_to_json(const Homogeneity& h) {
    return json{{"c", h.const_part.str()}, {"mu", h.mu_coeff.str()}, {"kappa", h.kappa_coeff.str()}};
}

GenerationParams generation_params(const Ctx& ctx) {
    GenerationParams p;
    p.mu = ctx.get_rational("global.mu", Rational(9, 10));
    p.kappa = ctx.get_rational("global.kappa", Rational(1, 100));
    p.depth = static_cast<int>(ctx.get_long("structure.depth", 2));
    if (ctx.has("structure.gamma_cut"))
        p.gamma_cut = ctx.get_rational("structure.gamma_cut", Rational(0));
    return p;
}

ModelParams model_params(const Ctx& ctx, std::size_t dflt_nx, std::size_t dflt_nt, double dflt_T) {
    ModelParams p;
    p.mu = ctx.get_double("global.mu", 0.9);
    p.kappa = ctx.get_double("global.kappa", 0.01);
    p.eps = ctx.get_double("global.eps", 0.0625);
    p.grid = ctx.grid(dflt_nx, dflt_nt, dflt_T);
    p.seed = ctx.seed();
    p.shape = ctx.get("noise.mollifier", "exponential") == "polynomial"
                  ? MollifierProfile::Shape::PolynomialC3
                  : MollifierProfile::Shape::Exponential;
    p.literal_mollifier = ctx.get("noise.literal_scaling", "off") == "on";
    return p;
}

// --- structure ------------------------------------------------------------------

int cmd_structure_generate(Ctx& ctx) {
    GenerationParams p = generation_params(ctx);
    ModelSpace space = generate(p);

    json syms = json::array();
    for (const auto& s : space.symbols)
        syms.push_back({{"symbol", s.symbol->str()},
                        {"homogeneity", homogeneity_to_json(s.degree)},
                        {"level", s.level}});
    auto table = [&](const std::vector<const StoredSymbol*>& set) {
        json out = json::array();
        for (const auto& e : collapse_shapes(set, p.mu, p.kappa))
            out.push_back({{"shape", e.text},
                           {"homogeneity", homogeneity_to_json(e.degree)},
                           {"multiplicity", e.multiplicity}});
        return out;
    };
    json j{{"mu", p.mu.str()},
           {"kappa", p.kappa.str()},
           {"depth", p.depth},
           {"gamma_cut", space.gamma_cut_value.str()},
           {"nonterminating", space.nonterminating},
           {"diagnostic", space.diagnostic},
           {"symbols", syms}};
    j["tables"] = {{"bar0", table(space.level_bar(0))},
                   {"tilde1", table(space.level_tilde(1))},
                   {"bar1", table(space.level_bar(1))},
                   {"tilde2", table(space.level_tilde(2))}};
    ctx.write_json("model_space.json", j);
    ctx.finish("structure generate");
    std::cout << "generated " << space.symbols.size() << " symbols (gamma_cut "
              << space.gamma_cut_value.str() << ")\n";
    if (space.nonterminating) {
        std::cerr << "diagnostic: " << space.diagnostic << "\n";
        return kExitDiagnostic;
    }
    return kExitOk;
}

int cmd_structure_negatives(Ctx& ctx) {
    GenerationParams p = generation_params(ctx);
    if (!ctx.has("structure.depth")) p.depth = 3;
    ModelSpace space = generate(p);
    NegativeTable t = negative_symbols(space);
    auto view = [&](const std::vector<NegativeEntry>& v) {
        json out = json::array();
        for (const auto& e : v)
            out.push_back({{"symbol", e.text},
                           {"homogeneity", homogeneity_to_json(e.degree)},
                           {"value", e.degree.eval(p.mu, p.kappa).to_double()},
                           {"multiplicity", e.multiplicity}});
        return out;
    };
    json j{{"mu", p.mu.str()},
           {"kappa", p.kappa.str()},
           {"display", view(t.display)},
           {"shapes", view(t.shapes)},
           {"indexed", view(t.indexed)},
           {"min_homogeneity", homogeneity_to_json(t.min_degree)},
           {"min_value", t.min_degree.eval(p.mu, p.kappa).to_double()}};
    ctx.write_json("negatives.json", j);
    ctx.finish("structure negatives");
    std::cout << "negative symbols: " << t.display.size() << " (display view), "
              << t.shapes.size() << " shapes, " << t.indexed.size() << " indexed\n";
    return kExitOk;
}

int cmd_structure_threshold(Ctx& ctx) {
    Rational mu = ctx.get_rational("global.mu", Rational(7, 10));
    SubcriticalityResult r = is_subcritical(mu);
    json j{{"critical_mu", "2/3"},
           {"mu", mu.str()},
           {"subcritical", r.subcritical},
           {"increment", homogeneity_to_json(r.increment)},
           {"increment_value", r.increment_value.str()}};
    ctx.write_json("threshold.json", j);
    ctx.finish("structure threshold");
    std::cout << "critical mu = 2/3\n";
    std::cout << "mu = " << mu.str() << ": " << (r.subcritical ? "subcritical" : "not subcritical")
              << " (cycle increment " << r.increment_value.str() << ")\n";
    return kExitOk;
}

// --- kernels --------------------------------------------------------------------

KernelSpec kernel_by_name(const std::string& name, double mu) {
    if (name == "heat") return KernelSpec::fractional_heat(mu);
    if (name == "heat-deriv") return KernelSpec::heat_deriv(1, mu);
    if (name == "riesz-heat") return KernelSpec::riesz_heat(1, mu);
    throw std::runtime_error("unknown kernel kind: " + name);
}

int cmd_kernel_order(Ctx& ctx) {
    double mu = ctx.get_double("global.mu", 0.9);
    KernelContext kctx(mu);
    KernelSpec spec = kernel_by_name(ctx.get("kernels.kind", "heat"), mu);
    std::vector<double> radii =
        ctx.get_list("kernels.radii", {0.5, 0.354, 0.25, 0.177, 0.125, 0.088, 0.0625, 0.0442, 0.03125});
    MultiIndex k{0, 0, 0};
    if (ctx.has("kernels.deriv")) {
        auto v = ctx.get_list("kernels.deriv", {});
        if (v.size() != 3) throw std::runtime_error("kernels.deriv needs k0,k1,k2");
        k = {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
    }
    ScalingFit fit = kernel_order_fit(kctx, spec, k, radii);
    double target = spec.order() - (2.0 * mu * k.k0 + k.k1 + k.k2);
    json j{{"kernel", ctx.get("kernels.kind", "heat")},
           {"derivative", {k.k0, k.k1, k.k2}},
           {"fit", fit_to_json(fit)},
           {"declared_order", spec.order()},
           {"target_slope", target}};
    ctx.write_json("kernel_order.json", j);
    ctx.finish("kernel order");
    std::cout << "slope " << fit.slope << " vs target " << target << "\n";
    return kExitOk;
}

int cmd_kernel_dyadic(Ctx& ctx) {
    double mu = ctx.get_double("global.mu", 0.9);
    KernelContext kctx(mu);
    int nmax = static_cast<int>(ctx.get_long("kernels.nmax", 6));
    int resolution = static_cast<int>(ctx.get_long("kernels.resolution", 256));
    int deg = static_cast<int>(ctx.get_long("kernels.moment_degree", 2));
    DyadicDecomposition dec =
        dyadic_decompose(kctx, kernel_by_name(ctx.get("kernels.kind", "heat"), mu), nmax,
                         resolution, deg);
    json pieces = json::array();
    for (const auto& p : dec.pieces) {
        json moments;
        for (const auto& [k, v] : p.residual_moments) moments[k] = v;
        pieces.push_back({{"level", p.level},
                          {"support_radius", p.r_max},
                          {"sup_abs", p.sup_abs()},
                          {"grid", {p.nt, p.nxy, p.nxy}},
                          {"residual_moments", moments}});
    }
    json j{{"mu", mu},
           {"n_max", nmax},
           {"resolution", resolution},
           {"moment_degree", deg},
           {"reassembly_rel_error", dec.reassembly_rel_error},
           {"max_residual_moment", dec.max_residual_moment},
           {"pieces", pieces}};
    ctx.write_json("dyadic.json", j);
    ctx.finish("kernel dyadic");
    std::cout << "reassembly error " << dec.reassembly_rel_error << ", max residual moment "
              << dec.max_residual_moment << "\n";
    return kExitOk;
}

int cmd_kernel_mollify(Ctx& ctx) {
    double mu = ctx.get_double("global.mu", 0.9);
    KernelContext kctx(mu);
    std::vector<double> eps = ctx.get_list("kernels.eps_list", {0.125, 0.0625, 0.03125, 0.015625});
    double nu = ctx.get_double("kernels.nu", 0.5);
    auto shape = ctx.get("noise.mollifier", "exponential") == "polynomial"
                     ? MollifierProfile::Shape::PolynomialC3
                     : MollifierProfile::Shape::Exponential;
    MollifiedCheckReport rep = mollified_kernel_check(
        kctx, kernel_by_name(ctx.get("kernels.kind", "heat"), mu), shape, eps, nu);
    json j{{"mu", mu},
           {"nu", nu},
           {"eps", rep.eps_list},
           {"bound_ratio_sup", rep.bound_ratio_sup},
           {"diff_ratio_sup", rep.diff_ratio_sup},
           {"bound_spread", rep.bound_spread},
           {"diff_spread", rep.diff_spread},
           {"flagged", rep.flagged},
           {"note", rep.note}};
    ctx.write_json("mollified_check.json", j);
    ctx.finish("kernel mollify");
    std::cout << "bound spread " << rep.bound_spread << ", difference spread " << rep.diff_spread
              << (rep.flagged ? " [flagged]" : "") << "\n";
    return rep.flagged ? kExitDiagnostic : kExitOk;
}

int cmd_kernel_convolve(Ctx& ctx) {
    double mu = ctx.get_double("global.mu", 0.9);
    KernelContext kctx(mu);
    std::string pair = ctx.get("kernels.pair", "kk");
    std::vector<double> radii = ctx.get_list("kernels.radii", {0.4, 0.25, 0.16, 0.1, 0.063, 0.04});
    ScalingFit fit;
    double target = 0.0;
    if (pair == "kk") {
        fit = convolution_order_fit(kctx, KernelSpec::fractional_heat(mu),
                                    KernelSpec::fractional_heat(mu), radii, false);
        target = -2.0 + 2.0 * mu;
    } else if (pair == "pointwise") {
        fit = convolution_order_fit(kctx, KernelSpec::fractional_heat(mu),
                                    KernelSpec::fractional_heat(mu), radii, true);
        target = -4.0;
    } else if (pair == "covariance-product") {
        fit = convolution_product_order_fit(kctx, KernelSpec::riesz_heat(1, mu),
                                            KernelSpec::riesz_heat(1, mu),
                                            KernelSpec::fractional_heat(mu),
                                            KernelSpec::fractional_heat(mu), radii);
        target = -4.0 + 4.0 * mu;
    } else {
        throw std::runtime_error("kernels.pair must be kk, pointwise or covariance-product");
    }
    json j{{"mu", mu}, {"pair", pair}, {"fit", fit_to_json(fit)}, {"target_slope", target}};
    ctx.write_json("convolution_order.json", j);
    ctx.finish("kernel convolve");
    std::cout << "slope " << fit.slope << " vs target " << target << "\n";
    return kExitOk;
}

// --- noise ----------------------------------------------------------------------

int cmd_noise_sample(Ctx& ctx) {
    NoiseGrid grid = ctx.grid(64, 16, 1.0);
    NoiseRealization xi(ctx.seed(), grid, 0);
    std::vector<PeriodicField> slices;
    for (std::size_t j = 0; j < grid.nt; ++j) slices.push_back(xi.slice(static_cast<long>(j)));
    write_krn1(ctx.out_dir + "/noise.krn1", slices, ctx.get_double("global.mu", 0.9));
    ctx.note_artifact("noise.krn1");

    double mean = 0.0, var = 0.0;
    std::size_t n = 0;
    for (const auto& s : slices)
        for (double v : s.values()) { mean += v; var += v * v; ++n; }
    mean /= n;
    var = var / n - mean * mean;
    json j{{"grid", {grid.nt, grid.nx, grid.ny}},
           {"T", grid.T},
           {"cell_variance_expected", 1.0 / grid.cell_volume()},
           {"cell_variance_sample", var},
           {"mean_sample", mean}};
    ctx.write_json("noise.json", j);
    ctx.finish("noise sample");
    std::cout << "cell variance " << var << " (expected " << 1.0 / grid.cell_volume() << ")\n";
    return kExitOk;
}

int cmd_noise_regularity(Ctx& ctx) {
    double mu = ctx.get_double("global.mu", 0.9);
    NoiseGrid grid = ctx.grid(64, 512, 0.75);
    std::vector<double> lambdas = ctx.get_list("global.lambda_list", {0.5, 0.297, 0.177, 0.105, 0.0625});
    int samples = static_cast<int>(ctx.get_long("global.samples", 1000));
    double eps = ctx.get_double("global.eps", 0.0);
    ScalingFit fit = noise_regularity_fit(ctx.seed(), grid, mu, lambdas, samples, eps);
    double target = -(2.0 + 2.0 * mu);
    json j{{"mu", mu},
           {"eps", eps},
           {"samples", samples},
           {"fit", fit_to_json(fit)},
           {"target_slope", target}};
    ctx.write_json("noise_regularity.json", j);
    ctx.finish("noise regularity");
    std::cout << "slope " << fit.slope << " vs target " << target << "\n";
    return kExitOk;
}

// --- model ----------------------------------------------------------------------

int cmd_model_pi(Ctx& ctx) {
    ModelParams p = model_params(ctx, 64, 128, 0.1);
    SymbolPtr tau = Symbol::parse(ctx.get("model.symbol", "I[Xi]"));
    double lambda = ctx.get_double("model.lambda", 0.25);
    CanonicalModel model(p, 0);
    SpatialProbe pr{0.5, 0.5, lambda};
    double raw = model.pi_pair(tau, p.grid.nt, pr);
    double c = renorm_constant(p, 1).value;
    double renorm = renormalize_pair(tau, raw, c);
    json j{{"symbol", tau->str()},
           {"lambda", lambda},
           {"value", raw},
           {"renormalized", renorm},
           {"renorm_constant", c}};
    ctx.write_json("model_pi.json", j);
    ctx.finish("model pi");
    std::cout << "pairing " << raw << " (renormalized " << renorm << ")\n";
    return kExitOk;
}

int cmd_model_renorm(Ctx& ctx) {
    ModelParams p = model_params(ctx, 64, 128, 1.0);
    std::vector<double> eps = ctx.get_list("kernels.eps_list", {0.25, 0.177, 0.125, 0.0884, 0.0625});
    RenormEpsReport rep = renorm_eps_report(p, eps);
    json consts = json::array();
    for (const auto& c : rep.constants)
        consts.push_back({{"dir", c.dir},
                          {"eps", c.eps},
                          {"value", c.value},
                          {"unsigned_integral", c.unsigned_integral},
                          {"max_slice_integral", c.max_slice_integral},
                          {"t_slab", c.t_slab}});
    json j{{"constants", consts},
           {"unsigned_fit", fit_to_json(rep.unsigned_fit)},
           {"claimed_exponent", rep.claimed_exponent},
           {"max_abs_value", rep.max_abs_value},
           {"note", "signed constants vanish by the odd-even slice symmetry; the unsigned "
                    "integral carries the eps trend reported against the claimed exponent"}};
    ctx.write_json("renorm.json", j);
    ctx.finish("model renorm-const");
    std::cout << "max |C| = " << rep.max_abs_value << ", unsigned-trend slope "
              << rep.unsigned_fit.slope << " vs claimed " << rep.claimed_exponent << "\n";
    return kExitOk;
}

int cmd_model_scaling(Ctx& ctx) {
    ModelParams p = model_params(ctx, 256, 432, 0.02);
    McParams mc;
    mc.lambdas = ctx.get_list("global.lambda_list", {0.5, 0.25, 0.125, 0.0625, 0.03125});
    mc.max_samples = static_cast<int>(ctx.get_long("global.samples", 2000));
    mc.stderr_stop_frac = ctx.get_double("model.stderr_stop", 0.06);
    mc.threads = static_cast<int>(ctx.get_long("model.threads", 2));
    mc.t_star_frac = ctx.get_double("model.t_star_frac", 1.0);
    std::vector<SymbolPtr> taus;
    std::istringstream in(ctx.get("model.symbols", "I[Xi];R1[I[Xi]]*I[Xi]"));
    std::string tok;
    while (std::getline(in, tok, ';')) taus.push_back(Symbol::parse(tok));
    auto results = scaling_mc(p, taus, mc);

    json per = json::array();
    bool warn = false;
    for (const auto& r : results) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& row : r.rows)
            rows.push_back({std::to_string(row.abscissa), std::to_string(row.mean_sq),
                            std::to_string(row.se), std::to_string(row.n)});
        std::string csv_name = "scaling_" + std::to_string(per.size()) + ".csv";
        write_csv(ctx.out_dir + "/" + csv_name, "lambda,mean_sq,stderr,n", rows);
        ctx.note_artifact(csv_name);
        per.push_back({{"symbol", r.symbol},
                       {"fit", fit_to_json(r.fit)},
                       {"slope_target", r.slope_target},
                       {"power_warning", r.power_warning},
                       {"renorm_constant", r.renorm_constant_used},
                       {"csv", csv_name}});
        warn = warn || r.power_warning;
        std::cout << r.symbol << ": slope " << r.fit.slope << " vs 2|tau| = " << r.slope_target
                  << (r.power_warning ? " [power warning]" : "") << "\n";
    }
    ctx.write_json("model_scaling.json", json{{"results", per}});
    ctx.finish("model scaling");
    return kExitOk;
}

int cmd_model_timereg(Ctx& ctx) {
    ModelParams p = model_params(ctx, 64, 256, 0.1);
    McParams mc;
    mc.max_samples = static_cast<int>(ctx.get_long("global.samples", 2000));
    mc.stderr_stop_frac = ctx.get_double("model.stderr_stop", 0.06);
    mc.threads = static_cast<int>(ctx.get_long("model.threads", 2));
    double lambda = ctx.get_double("model.lambda", 0.125);
    double delta = ctx.get_double("model.delta", 0.3);
    SymbolPtr tau = Symbol::parse(ctx.get("model.symbol", "I[Xi]"));
    std::vector<double> incs = ctx.get_list("model.increments", {});
    if (incs.empty()) {
        double span = std::pow(lambda, 2.0 * p.mu);
        for (double f : {1.0, 0.5, 0.25, 0.125}) {
            double v = std::max(p.dt(), std::round(span * f / p.dt()) * p.dt());
            incs.push_back(v);
        }
    }
    TimeRegResult res = time_regularity_mc(p, tau, lambda, delta, incs, mc);
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : res.rows)
        rows.push_back({std::to_string(row.abscissa), std::to_string(row.mean_sq),
                        std::to_string(row.se), std::to_string(row.n)});
    write_csv(ctx.out_dir + "/time_reg.csv", "increment,mean_sq,stderr,n", rows);
    ctx.note_artifact("time_reg.csv");
    ctx.write_json("time_reg.json", json{{"symbol", tau->str()},
                                         {"lambda", lambda},
                                         {"delta", delta},
                                         {"fit", fit_to_json(res.fit)},
                                         {"slope_target", res.slope_target},
                                         {"power_warning", res.power_warning}});
    ctx.finish("model time-reg");
    std::cout << "increment slope " << res.fit.slope << " vs 2 delta/s0 = " << res.slope_target
              << "\n";
    return kExitOk;
}

int cmd_model_covariance(Ctx& ctx) {
    double mu = ctx.get_double("global.mu", 0.9);
    std::vector<double> radii =
        ctx.get_list("model.radii", {0.12, 0.092, 0.071, 0.055, 0.042, 0.032});
    CovarianceOrderResult res = covariance_order(mu, radii);
    ctx.write_json("covariance.json", json{{"mu", mu},
                                           {"fit", fit_to_json(res.fit)},
                                           {"target", res.target},
                                           {"log_mode", res.log_mode},
                                           {"factorization_residual", res.factorization_residual}});
    ctx.finish("model covariance");
    std::cout << "slope " << res.fit.slope << " vs target " << res.target
              << (res.log_mode ? " [log mode]" : "") << "\n";
    return kExitOk;
}

int cmd_model_reconstruct(Ctx& ctx) {
    ModelParams p = model_params(ctx, 128, 128, 0.2);
    std::vector<double> lambdas = ctx.get_list("global.lambda_list", {0.5, 0.35, 0.25, 0.177, 0.125, 0.0884, 0.0625});
    int centers = static_cast<int>(ctx.get_long("model.centers", 16));
    DefectFitResult res = reconstruction_defect_fit(p, lambdas, centers);
    json rows = json::array();
    for (const auto& r : res.rows) rows.push_back({{"lambda", r.abscissa}, {"sup", r.mean_sq}});
    ctx.write_json("reconstruction_defect.json",
                   json{{"fit", fit_to_json(res.fit)},
                        {"gamma_target", res.gamma_target},
                        {"rows", rows}});
    ctx.finish("model reconstruct");
    std::cout << "defect slope " << res.fit.slope << " vs gamma = " << res.gamma_target << "\n";
    return kExitOk;
}

// --- solver ----------------------------------------------------------------------

SolverConfig solver_config(Ctx& ctx, const NoiseGrid& grid) {
    SolverConfig cfg;
    cfg.mu = ctx.get_double("global.mu", 0.9);
    cfg.T = grid.T;
    cfg.nt = grid.nt;
    cfg.nx = grid.nx;
    cfg.dealias_frac = ctx.get_double("solver.dealias", 2.0 / 3.0);
    cfg.blowup_cap = ctx.get_double("solver.blowup_cap", 1e6);
    cfg.snapshots = static_cast<std::size_t>(ctx.get_long("solver.snapshots", 17));
    std::string init = ctx.get("solver.init", "zero");
    if (init == "zero") {
        cfg.init = SolverConfig::Init::Zero;
    } else if (init.rfind("mode:", 0) == 0) {
        cfg.init = SolverConfig::Init::Mode;
        std::istringstream in(init.substr(5));
        char comma;
        in >> cfg.mode_kx >> comma >> cfg.mode_ky;
        if (!in) throw std::runtime_error("solver.init mode spec must be mode:kx,ky");
    } else {
        throw std::runtime_error("solver.init must be zero or mode:kx,ky");
    }
    return cfg;
}

int cmd_solve(Ctx& ctx) {
    NoiseGrid grid = ctx.grid(64, 256, 0.5);
    SolverConfig cfg = solver_config(ctx, grid);
    bool noise_on = ctx.get("solver.noise", "on") == "on";

    std::optional<MollifiedNoise> xe;
    if (noise_on) {
        Mollifier m{MollifierProfile(ctx.get("noise.mollifier", "exponential") == "polynomial"
                                         ? MollifierProfile::Shape::PolynomialC3
                                         : MollifierProfile::Shape::Exponential),
                    ctx.get_double("global.eps", 0.125), 2.0 * cfg.mu,
                    ctx.get("noise.literal_scaling", "off") == "on"};
        xe = mollify(NoiseRealization(ctx.seed(), grid, 0), m);
    }
    Trajectory traj = solve_sqg(cfg, xe ? &xe->slices : nullptr);
    write_krn1(ctx.out_dir + "/trajectory.krn1", traj.fields, cfg.mu);
    ctx.note_artifact("trajectory.krn1");

    json times = json::array();
    for (double t : traj.times) times.push_back(t);
    ctx.write_json("solve.json", json{{"mu", cfg.mu},
                                      {"T", cfg.T},
                                      {"nt", cfg.nt},
                                      {"nx", cfg.nx},
                                      {"noise", noise_on},
                                      {"cfl_ratio", traj.cfl_ratio},
                                      {"blew_up", traj.blew_up},
                                      {"blowup_time", traj.blowup_time},
                                      {"max_imag_residue", traj.max_imag_residue},
                                      {"max_divergence", traj.max_divergence},
                                      {"times", times},
                                      {"final_l2", traj.fields.back().l2_norm()}});
    ctx.finish("solve");
    std::cout << "solved to t = " << traj.times.back() << ", |theta|_2 = "
              << traj.fields.back().l2_norm() << (traj.blew_up ? " [blow-up]" : "") << "\n";
    return traj.blew_up ? kExitDiagnostic : kExitOk;
}

int cmd_converge(Ctx& ctx) {
    NoiseGrid grid = ctx.grid(128, 720, 0.4);
    EpsConvergenceConfig cc;
    cc.base = solver_config(ctx, grid);
    cc.kappa = ctx.get_double("global.kappa", 0.01);
    cc.seed = ctx.seed();
    cc.compare_mollifiers = ctx.get("solver.compare_mollifiers", "on") == "on";
    cc.eta_initial = ctx.get_double("solver.eta", -0.1);
    std::vector<double> eps = ctx.get_list("solver.eps_list", {0.25, 0.125, 0.0625, 0.03125});
    EpsConvergenceReport rep = eps_convergence(cc, eps);

    std::vector<std::vector<std::string>> rows;
    for (const auto& r : rep.rows)
        rows.push_back({std::to_string(r.eps), std::to_string(r.diff_norm),
                        std::to_string(rep.alpha), std::to_string(rep.t_star)});
    write_csv(ctx.out_dir + "/converge.csv", "eps,diff_norm,alpha,t_star", rows);
    ctx.note_artifact("converge.csv");

    json jr = json::array();
    for (const auto& r : rep.rows) jr.push_back({{"eps", r.eps}, {"diff_norm", r.diff_norm}});
    ctx.write_json("converge.json",
                   json{{"alpha", rep.alpha},
                        {"t_star", rep.t_star},
                        {"rows", jr},
                        {"mollifier_diff", rep.mollifier_diff},
                        {"delta_bar", rep.delta_bar},
                        {"trajectory_norm",
                         {{"value", rep.trajectory_norm.value},
                          {"sup_term", rep.trajectory_norm.sup_term},
                          {"increment_term", rep.trajectory_norm.increment_term}}},
                        {"any_blowup", rep.any_blowup}});
    ctx.finish("converge");
    for (const auto& r : rep.rows)
        std::cout << "eps " << r.eps << ": successive difference " << r.diff_norm << "\n";
    std::cout << "mollifier difference at smallest eps: " << rep.mollifier_diff << "\n";
    return rep.any_blowup ? kExitDiagnostic : kExitOk;
}

// --- manifest / rerun ---------------------------------------------------------------

int cmd_manifest(const std::string& dir, const std::string& against) {
    ManifestCheck c = verify_manifest(dir);
    for (const auto& m : c.missing) std::cout << "missing: " << m << "\n";
    for (const auto& m : c.mismatched) std::cout << "mismatch: " << m << "\n";
    if (!against.empty()) {
        Manifest a = read_manifest(dir + "/manifest.json");
        Manifest b = read_manifest(against);
        for (const auto& d : manifest_config_diff(a, b)) std::cout << "config diff: " << d << "\n";
        if (a.config_hash() != b.config_hash()) {
            std::cout << "config hashes differ\n";
            return kExitDiagnostic;
        }
    }
    std::cout << (c.ok ? "manifest ok\n" : "manifest verification failed\n");
    return c.ok ? kExitOk : kExitDiagnostic;
}

int dispatch(const std::string& command, Ctx& ctx);

int cmd_rerun(const std::string& manifest_path, const std::string& out_dir) {
    Manifest m = read_manifest(manifest_path);
    Ctx ctx;
    ctx.cfg = m.config;
    ctx.out_dir = out_dir;
    fs::create_directories(out_dir);
    int rc = dispatch(m.command, ctx);
    if (rc != kExitOk) return rc;
    Manifest replayed = read_manifest(out_dir + "/manifest.json");
    bool identical = replayed.artifacts == m.artifacts;
    std::cout << (identical ? "rerun reproduced all artifact checksums\n"
                            : "rerun produced different checksums\n");
    return identical ? kExitOk : kExitDiagnostic;
}

int dispatch(const std::string& command, Ctx& ctx) {
    if (command == "structure generate") return cmd_structure_generate(ctx);
    if (command == "structure negatives") return cmd_structure_negatives(ctx);
    if (command == "structure threshold") return cmd_structure_threshold(ctx);
    if (command == "kernel order") return cmd_kernel_order(ctx);
    if (command == "kernel dyadic") return cmd_kernel_dyadic(ctx);
    if (command == "kernel mollify") return cmd_kernel_mollify(ctx);
    if (command == "kernel convolve") return cmd_kernel_convolve(ctx);
    if (command == "noise sample") return cmd_noise_sample(ctx);
    if (command == "noise regularity") return cmd_noise_regularity(ctx);
    if (command == "model pi") return cmd_model_pi(ctx);
    if (command == "model renorm-const") return cmd_model_renorm(ctx);
    if (command == "model scaling") return cmd_model_scaling(ctx);
    if (command == "model time-reg") return cmd_model_timereg(ctx);
    if (command == "model covariance") return cmd_model_covariance(ctx);
    if (command == "model reconstruct") return cmd_model_reconstruct(ctx);
    if (command == "solve") return cmd_solve(ctx);
    if (command == "converge") return cmd_converge(ctx);
    throw std::runtime_error("unknown command: " + command);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic quasi-geostrophic toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::vector<std::string> overrides;
    std::string mu, kappa, eps, grid, T, seed, samples, lambda_list;
    app.add_option("--config", config_path, "sectioned key=value configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--mu", mu, "dissipation exponent (rational accepted)");
    app.add_option("--kappa", kappa, "degree shift (rational accepted)");
    app.add_option("--eps", eps, "mollification scale");
    app.add_option("--seed", seed, "base seed");
    app.add_option("--grid", grid, "grid NX[xNY[xNT]]");
    app.add_option("--T", T, "time horizon");
    app.add_option("--samples", samples, "Monte Carlo sample cap");
    app.add_option("--lambda-list", lambda_list, "comma-separated probe scales");
    app.add_option("--set", overrides, "extra section.key=value overrides")->take_all();

    std::map<std::string, std::pair<CLI::App*, std::string>> subs;
    auto add = [&](const char* group, const char* name, const char* desc) {
        CLI::App* g = app.get_subcommand_no_throw(group);
        if (!g) {
            g = app.add_subcommand(group, std::string("operations on ") + group);
            g->require_subcommand(1);
            g->fallthrough();
        }
        CLI::App* s = g->add_subcommand(name, desc);
        s->fallthrough();
        subs[std::string(group) + " " + name] = {s, ""};
        return s;
    };
    add("structure", "generate", "generate the symbol space and tables");
    add("structure", "negatives", "negative-degree symbol table");
    add("structure", "threshold", "subcriticality threshold check");
    add("kernel", "order", "kernel order fit");
    add("kernel", "dyadic", "dyadic decomposition with moment correction");
    add("kernel", "mollify", "mollified kernel bound check");
    add("kernel", "convolve", "convolution order fits");
    add("noise", "sample", "dump one white-noise realization");
    add("noise", "regularity", "probe-moment slope of the noise");
    add("model", "pi", "evaluate one model pairing");
    add("model", "renorm-const", "renormalization constants and eps trend");
    add("model", "scaling", "Monte Carlo pairing-moment slopes");
    add("model", "time-reg", "Monte Carlo time-increment slopes");
    add("model", "covariance", "covariance kernel order");
    add("model", "reconstruct", "reconstruction defect fit");
    CLI::App* solve_cmd = app.add_subcommand("solve", "integrate the mollified equation");
    solve_cmd->fallthrough();
    CLI::App* converge_cmd = app.add_subcommand("converge", "coupled eps-convergence study");
    converge_cmd->fallthrough();

    std::string manifest_dir, manifest_against;
    CLI::App* manifest_cmd = app.add_subcommand("manifest", "verify an output directory");
    manifest_cmd->add_option("dir", manifest_dir)->required();
    manifest_cmd->add_option("--against", manifest_against, "second manifest for a config diff");

    std::string rerun_path, rerun_out = "out_rerun";
    CLI::App* rerun_cmd = app.add_subcommand("rerun", "re-execute a recorded run");
    rerun_cmd->add_option("manifest", rerun_path)->required();
    rerun_cmd->add_option("--out", rerun_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (manifest_cmd->parsed()) return cmd_manifest(manifest_dir, manifest_against);
        if (rerun_cmd->parsed()) return cmd_rerun(rerun_path, rerun_out);

        Ctx ctx;
        if (!config_path.empty()) ctx.cfg = parse_config_text(read_text_file(config_path));
        auto set_if = [&](const std::string& key, const std::string& val) {
            if (!val.empty()) ctx.cfg[key] = val;
        };
        set_if("global.mu", mu);
        set_if("global.kappa", kappa);
        set_if("global.eps", eps);
        set_if("global.seed", seed);
        set_if("global.grid", grid);
        set_if("global.T", T);
        set_if("global.samples", samples);
        set_if("global.lambda_list", lambda_list);
        for (const auto& ov : overrides) {
            std::size_t eq = ov.find('=');
            if (eq == std::string::npos) throw std::runtime_error("--set expects key=value");
            ctx.cfg[ov.substr(0, eq)] = ov.substr(eq + 1);
        }
        for (const auto& [k, v] : ctx.cfg)
            if (!allowed_keys().count(k)) throw std::runtime_error("unknown configuration key: " + k);

        std::string command;
        if (solve_cmd->parsed()) command = "solve";
        else if (converge_cmd->parsed()) command = "converge";
        else {
            for (const auto& [name, sub] : subs)
                if (sub.first->parsed()) command = name;
        }
        if (command.empty()) throw std::runtime_error("no command selected");

        ctx.out_dir = out_dir;
        fs::create_directories(ctx.out_dir);
        return dispatch(command, ctx);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
