#include "freebnd/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "freebnd/blowup.hpp"
#include "freebnd/error.hpp"
#include "freebnd/flatness.hpp"
#include "freebnd/functionals.hpp"
#include "freebnd/grid.hpp"
#include "freebnd/hodograph.hpp"
#include "freebnd/keyvalue.hpp"
#include "freebnd/numerics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace freebnd::cli {

namespace {

const std::set<std::string> pair_experiments = {"solve", "acf", "frequency", "monneau", "density",
                                                "tangent", "flatness", "hodograph"};

[[noreturn]] void reject(const ConfigEntry& e, const std::string& key, const std::string& why) {
    fail(ErrorKind::invalid_input, fmt::format("{}: {}: {}", e.origin, key, why));
}

Point parse_point(const ConfigEntry& e, const std::string& key, const std::string& text) {
    std::vector<double> xs;
    try {
        xs = parse_double_list(text, key);
    } catch (const Error& err) {
        reject(e, key, err.what());
    }
    if (xs.size() < 2 || xs.size() > 4) reject(e, key, fmt::format("'{}' is not a point in 2 to 4 dimensions", text));
    Point p(static_cast<int>(xs.size()));
    for (size_t i = 0; i < xs.size(); ++i) p[static_cast<int>(i)] = xs[i];
    return p;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

double number(const ConfigEntry& e, const std::string& key) {
    try {
        return parse_double(e.value, key);
    } catch (const Error& err) {
        reject(e, key, err.what());
    }
}

long integer(const ConfigEntry& e, const std::string& key) {
    try {
        return parse_int(e.value, key);
    } catch (const Error& err) {
        reject(e, key, err.what());
    }
}

bool boolean(const ConfigEntry& e, const std::string& key) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    reject(e, key, fmt::format("'{}' is not a boolean", e.value));
}

double inf_distance(const Point& a, const Point& b) {
    double d = 0.0;
    for (int i = 0; i < a.dim; ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

// Flag rows are collected per point and written in point order.
struct Flags {
    std::vector<std::pair<std::string, std::string>> rows;
    void add(const std::string& source, const std::string& flag) { rows.emplace_back(source, flag); }
    void add_all(const std::string& source, const std::vector<std::string>& flags) {
        for (const auto& f : flags) add(source, f);
    }
};

class Writer {
public:
    explicit Writer(std::string dir) : dir_(std::move(dir)) {}
    void put(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
    const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::shared_ptr<const HarmonicPair> build_pair(const ExperimentConfig& cfg, const DomainPtr& domain) {
    const auto [dp, dm] = domain->default_poles();
    const GridSpec spec = GridSpec::cube(Box{cfg.box_center, cfg.box_half}, cfg.n);
    return std::make_shared<const HarmonicPair>(
        make_harmonic_pair(domain, spec, cfg.pole_plus.value_or(dp), cfg.pole_minus.value_or(dm)));
}

// ---- experiments ----------------------------------------------------------

void run_solve(const ExperimentConfig& cfg, const HarmonicPair& pair, Writer& out, Flags& flags, json& summary) {
    const auto& spec = pair.spec();
    if (spec.dim == 2) {
        std::string csv = "x,y,u_plus,u_minus\n";
        for (size_t i = 0; i < spec.node_count(); ++i) {
            const Point x = spec.node(spec.ijk(i));
            csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", x[0], x[1], pair.u_plus.values()[i],
                               pair.u_minus.values()[i]);
        }
        out.put("field.csv", std::move(csv));
    } else {
        flags.add("solve", "field dump skipped in 3D");
    }
    std::string bcsv = "Q,x,density_plus,density_minus,h\n";
    int skipped = 0;
    for (const auto& Q : cfg.Q) {
        for (const auto& s : pair.domain->boundary_in_ball(Q, cfg.radii.front(), 4 * spec.h)) {
            try {
                const double dp = pair.density(1, s.x), dm = pair.density(-1, s.x);
                bcsv += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", csv_point(Q), csv_point(s.x), dp, dm, dm / dp);
            } catch (const Error&) {
                ++skipped;
            }
        }
    }
    if (skipped) flags.add("solve", fmt::format("under-resolved: {} boundary samples without a density", skipped));
    out.put("boundary.csv", std::move(bcsv));
    summary["total_flux_plus"] = total_flux(pair, 1);
    summary["total_flux_minus"] = total_flux(pair, -1);
}

void run_traces(const ExperimentConfig& cfg, const std::shared_ptr<const HarmonicPair>& pair, int threads,
                Writer& out, Flags& flags, json& summary) {
    const size_t m = cfg.Q.size();
    std::vector<std::vector<RadialTrace>> traces(m);
    std::vector<json> info(m, json::object());
    parallel_for(static_cast<int>(m), threads, [&](int i) {
        const Point& Q = cfg.Q[i];
        if (cfg.experiment == "acf") {
            traces[i].push_back(trace_of(TraceKind::J, pair_field(*pair, 1.0, 1.0), Q, cfg.radii));
        } else if (cfg.experiment == "frequency") {
            const auto v = build_v(pair, Q);
            auto t = trace_of(TraceKind::N, v.view, Q, cfg.radii);
            double worst = 0.0;
            for (double x : t.values) worst = std::max(worst, std::abs(x - 1.0));
            info[i]["max_abs_N_minus_1"] = worst;
            traces[i].push_back(std::move(t));
        } else if (cfg.experiment == "monneau") {
            const auto v = build_v(pair, Q);
            const auto fit = fit_tangent(v, cfg.radii.back());
            const auto p = LinearForm::along(fit.nu, fit.c);
            traces[i].push_back(trace_of(TraceKind::M, v.view, Q, cfg.radii, &p));
            const auto g = monneau_growth_check(v.view, p, Q, cfg.radii);
            info[i]["tangent_c"] = fit.c;
            info[i]["worst_drop"] = g.worst;
            info[i]["fitted"] = g.fitted;
            if (g.fitted) info[i]["exponent"] = g.exponent;
            for (const auto& f : g.flags) info[i]["flags"].push_back(f);
        } else if (cfg.experiment == "density") {
            traces[i].push_back(boundary_density(*pair, 1, Q, cfg.radii));
            traces[i].push_back(boundary_density(*pair, -1, Q, cfg.radii));
        }
    });
    std::vector<RadialTrace> all;
    json points = json::array();
    for (size_t i = 0; i < m; ++i) {
        for (auto& t : traces[i]) {
            flags.add_all(csv_point(cfg.Q[i]), t.flags);
            all.push_back(std::move(t));
        }
        if (info[i].contains("flags")) flags.add_all(csv_point(cfg.Q[i]), info[i]["flags"]);
        info[i]["Q"] = std::vector<double>(cfg.Q[i].c.begin(), cfg.Q[i].c.begin() + cfg.Q[i].dim);
        points.push_back(info[i]);
    }
    summary["points"] = points;
    out.put("trace.csv", trace_csv(all));
}

void run_tangent(const ExperimentConfig& cfg, const std::shared_ptr<const HarmonicPair>& pair, int threads,
                 Writer& out, Flags& flags) {
    const size_t m = cfg.Q.size();
    std::vector<std::vector<TangentFit>> fits(m);
    parallel_for(static_cast<int>(m), threads, [&](int i) {
        const auto v = build_v(pair, cfg.Q[i]);
        for (double r : cfg.radii) fits[i].push_back(fit_tangent(v, r));
    });
    std::vector<TangentFit> all;
    for (size_t i = 0; i < m; ++i)
        for (const auto& f : fits[i]) {
            if (f.ambiguous) flags.add(csv_point(f.Q), fmt::format("ambiguous tangent at r = {:.17g}", f.r));
            all.push_back(f);
        }
    out.put("tangent.csv", tangent_csv(all));
}

void run_beta(const ExperimentConfig& cfg, const Domain& domain, int threads, Writer& out, json& summary) {
    const size_t m = cfg.Q.size();
    std::vector<std::vector<RadialTrace>> traces(m);
    parallel_for(static_cast<int>(m), threads, [&](int i) {
        RadialTrace beta{cfg.Q[i], TraceKind::beta, {}, {}, 0.0, {}};
        RadialTrace theta{cfg.Q[i], TraceKind::flatness, {}, {}, 0.0, {}};
        for (double r : cfg.radii) {
            beta.push(r, beta_number(domain, cfg.Q[i], r));
            theta.push(r, reifenberg_theta(domain, cfg.Q[i], r).theta);
        }
        traces[i] = {beta, theta};
    });
    std::vector<RadialTrace> all;
    json points = json::array();
    for (size_t i = 0; i < m; ++i) {
        json p;
        p["Q"] = std::vector<double>(cfg.Q[i].c.begin(), cfg.Q[i].c.begin() + cfg.Q[i].dim);
        const auto& b = traces[i][0];
        const bool positive = std::all_of(b.values.begin(), b.values.end(), [](double v) { return v > 0; });
        if (positive && b.size() >= 2) p["beta_exponent"] = fit_loglog(b.radii, b.values).slope;
        points.push_back(p);
        for (auto& t : traces[i]) all.push_back(std::move(t));
    }
    summary["points"] = points;
    out.put("trace.csv", trace_csv(all));
}

void run_flatness(const ExperimentConfig& cfg, const HarmonicPair& pair, int threads, Writer& out, Flags& flags,
                  json& summary) {
    const size_t m = cfg.Q.size();
    std::vector<IterationLog> logs(m);
    DecayOptions opts;
    opts.alpha = cfg.alpha;
    parallel_for(static_cast<int>(m), threads, [&](int i) {
        logs[i] = flatness_decay(pair, cfg.Q[i], cfg.radii.front(), cfg.rbar, cfg.steps, opts);
    });
    std::string csv = "Q,k,r,nu,gamma,eps,rel_eps,hypothesis_ok,contraction_ok,g_seminorm\n";
    json points = json::array();
    for (const auto& log : logs) {
        for (const auto& s : log.steps)
            csv += fmt::format("{},{},{:.17g},{},{:.17g},{:.17g},{:.17g},{},{},{:.17g}\n", csv_point(log.Q), s.k, s.r,
                               csv_point(s.nu), s.gamma, s.eps, s.rel_eps, s.hypothesis_ok ? 1 : 0,
                               s.contraction_ok ? 1 : 0, s.g_seminorm);
        flags.add_all(csv_point(log.Q), log.flags);
        if (log.truncated) flags.add(csv_point(log.Q), "under-resolved: chain stopped at the grid floor");
        json p;
        p["Q"] = std::vector<double>(log.Q.c.begin(), log.Q.c.begin() + log.Q.dim);
        p["rbar"] = log.rbar;
        p["s_floor"] = log.s_floor;
        p["steps"] = log.steps.size();
        if (log.s_fitted) p["s_fit"] = log.s_fit;
        points.push_back(p);
    }
    summary["points"] = points;
    out.put("iterations.csv", std::move(csv));
}

// Gap examples with known answers: w = U(x_2 + eps H) with H a rescaled
// Poisson kernel, and a tilted profile squeezed on B_r.
void run_harnack(const ExperimentConfig& cfg, Writer& out, Flags& flags) {
    const double eps = cfg.eps, g0 = 0.8, gamma = 1.0;
    const Point e2{0.0, 1.0};
    auto H = [](const Point& x) {
        const double d2 = x[0] * x[0] + (x[1] - 1.0) * (x[1] - 1.0);
        return (2.0 / 3.0) * (1.0 - dot(x, x)) / d2;
    };
    auto composed = [&](std::function<double(const Point&)> inner) {
        return analytic_field(
            2, [inner, gamma, g0](const Point& x) { return two_plane_eval(gamma, g0, inner(x)); },
            [](const Point&) { return Point(2); });
    };
    const Field poisson = composed([H, eps](const Point& x) { return x[1] + eps * H(x); });
    const Field shifted = composed([eps](const Point& x) { return x[1] + eps; });
    std::string csv = "case,hypothesis_ok,c,expected_c,passed\n";
    auto one = [&](const std::string& name, const HarnackReport& r, double expected) {
        csv += fmt::format("{},{},{:.17g},{:.17g},{}\n", name, r.hypothesis_ok ? 1 : 0, r.c, expected, r.passed ? 1 : 0);
        flags.add_all(name, r.flags);
        if (!r.hypothesis_ok) flags.add(name, "hypothesis violated");
    };
    one("shifted", harnack_gap_check(shifted, g0, 0.0, e2, gamma, eps), 1.0);
    one("poisson", harnack_gap_check(poisson, g0, 5 * eps * eps, e2, gamma, eps), 2.0 / 9.0);
    one("rough_g", harnack_gap_check(poisson, g0, 20 * eps * eps, e2, gamma, eps), 2.0 / 9.0);

    const double d = eps / 2, r = 0.8;
    const Field tilt = composed([d](const Point& x) { return x[1] + d * x[0]; });
    const auto t = harnack_two_sided(tilt, g0, 0.0, e2, gamma, -d * r, d * r, Point{0.0, 0.0}, r);
    csv += fmt::format("two_sided,{},{:.17g},{:.17g},{}\n", t.hypothesis_ok ? 1 : 0, t.c, 0.95, t.passed ? 1 : 0);
    flags.add_all("two_sided", t.flags);
    if (!t.hypothesis_ok) flags.add("two_sided", "hypothesis violated");
    out.put("harnack.csv", std::move(csv));
}

void run_transmission(const ExperimentConfig& cfg, const std::shared_ptr<const HarmonicPair>& pair, Writer& out,
                      Flags& flags) {
    std::string csv = "field,r,value,p,residual,norm,bound,flux_mismatch,within_bound\n";
    for (const auto& name : cfg.fields) {
        std::function<double(const Point&)> W;
        TransmissionOptions opts;
        if (name == "xn") {
            W = [](const Point& x) { return x[1]; };
        } else if (name == "x1") {
            W = [](const Point& x) { return x[0]; };
        } else if (name == "quadratic") {
            W = [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; };
        } else {
            // Hodograph-derived field at the first point; sampled data, so
            // the flux check is loose and the constant is 2.
            const auto hp = hodograph_transform(*pair, cfg.Q.front());
            const double rho = std::min(hp.psi.a, hp.psi.yn(hp.psi.nn - 1));
            W = hodograph_transmission_field(hp, rho);
            opts.step = hp.psi.dn / rho;
            opts.flux_tolerance = 0.02;
            opts.constant = 2.0;
        }
        for (double r : cfg.radii) {
            const auto rep = transmission_expand(W, 2, r, opts);
            csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", name, r, rep.value,
                               rep.p, rep.residual, rep.norm, rep.bound, rep.flux_mismatch, rep.within_bound ? 1 : 0);
            if (!rep.within_bound) flags.add(name, fmt::format("residual above bound at r = {:.17g}", r));
        }
    }
    out.put("transmission.csv", std::move(csv));
}

void run_hodograph(const ExperimentConfig& cfg, const HarmonicPair& pair, Writer& out, json& summary) {
    std::string csv = "Q,field,y1,yn,value\n";
    json points = json::array();
    for (const auto& Q : cfg.Q) {
        const auto hp = hodograph_transform(pair, Q);
        for (const auto* f : {&hp.psi, &hp.phi})
            for (int j = 0; j < f->nn; ++j)
                for (int i = 0; i < f->n1; ++i)
                    csv += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", csv_point(Q), f == &hp.psi ? "psi" : "phi",
                                       f->y1(i), f->yn(j), f->at(i, j));
        json p = to_json(transformed_residual(hp));
        p["Q"] = std::vector<double>(Q.c.begin(), Q.c.begin() + Q.dim);
        points.push_back(p);
    }
    summary["points"] = points;
    out.put("hodograph.csv", std::move(csv));
}

void run_syscheck(const ExperimentConfig& cfg, Writer& out, Flags& flags, json& summary, std::string& line) {
    const auto w = cfg.weights.empty() ? hodograph_weights() : parse_weights(cfg.weights);
    const auto rep = weights_validate(w);
    json j;
    j["weights"] = format_weights(w);
    j["verdict"] = rep.valid ? "valid" : "invalid";
    j["report"] = to_json(rep);
    json muts = json::array();
    for (const auto& m : weight_mutations()) {
        const auto r = weights_validate(m.weights);
        std::vector<int> failed;
        for (int k = 0; k < 4; ++k)
            if (!r.conditions[k]) failed.push_back(k + 1);
        muts.push_back({{"label", m.label}, {"weights", format_weights(m.weights)}, {"expected", m.failing},
                        {"observed", failed}, {"as_expected", failed == m.failing}});
    }
    j["mutations"] = muts;
    j["suites"] = {to_json(da_suite(cfg.seed, cfg.draws)), to_json(conjugacy_suite(cfg.seed, cfg.draws)),
                   to_json(coercivity_suite(cfg.seed, cfg.draws))};
    for (const auto& s : j["suites"])
        if (s["passed"] != s["draws"]) flags.add(s["kind"].get<std::string>(), "suite has failing draws");
    if (!rep.valid) flags.add("weights", "weights invalid");
    summary["verdict"] = j["verdict"];
    line = rep.valid ? "valid" : "invalid";
    out.put("syscheck.json", json_text(j));
}

std::string manifest_text(const ExperimentConfig& cfg, const Writer& out, const std::string& input_hash,
                          double seconds, int threads, const Flags& flags) {
    json m;
    m["tool"] = "freebnd";
    m["version"] = version;
    m["experiment"] = cfg.experiment;
    json c = json::object();
    for (const auto& [k, e] : cfg.entries) c[k] = e.value;
    m["config"] = c;
    json pts = json::array();
    for (const auto& q : cfg.Q) pts.push_back(std::vector<double>(q.c.begin(), q.c.begin() + q.dim));
    m["resolved"] = {{"domain", cfg.domain}, {"Q", pts},          {"radii", cfg.radii}, {"seed", cfg.seed},
                     {"alpha", cfg.alpha},   {"rbar", cfg.rbar},  {"steps", cfg.steps}, {"draws", cfg.draws},
                     {"eps", cfg.eps},       {"fields", cfg.fields}, {"weights", cfg.weights}};
    if (cfg.h > 0) {
        m["grid"] = {{"n_cells", cfg.n},
                     {"h", cfg.h},
                     {"box_center", std::vector<double>(cfg.box_center.c.begin(), cfg.box_center.c.begin() + cfg.box_center.dim)},
                     {"box_half_width", cfg.box_half}};
    } else {
        m["grid"] = nullptr;
    }
    m["input_hash"] = input_hash;
    m["wall_time_s"] = seconds;
    m["threads"] = threads;
    json files = json::array();
    for (const auto& [name, content] : out.files())
        files.push_back({{"name", name}, {"bytes", content.size()}, {"sha1", git_blob_sha1(content)}});
    m["files"] = files;
    m["flag_count"] = flags.rows.size();
    return json_text(m);
}

std::string canonical_inputs(const ExperimentConfig& cfg) {
    std::string s = "experiment = " + cfg.experiment + "\n";
    for (const auto& [k, e] : cfg.entries)
        if (k != "output_dir") s += k + " = " + e.value + "\n";
    if (cfg.domain.rfind("graph:", 0) == 0) s += read_text_file(cfg.domain.substr(6));
    return s;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k = {"solve",   "acf",      "frequency", "monneau",      "density",   "beta",
                                               "tangent", "flatness", "harnack",   "transmission", "hodograph", "syscheck"};
    return k;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> k = {
        "experiment", "domain", "n",     "box_half_width", "Q",     "pole_plus", "pole_minus", "radii",
        "r_min",      "r_max",  "count", "log_spacing",    "output_dir", "seed", "weights",    "alpha",
        "rbar",       "steps",  "draws", "eps",            "fields"};
    return k;
}

ExperimentConfig build_config(const std::string& experiment, const std::vector<ConfigSource>& files,
                              const std::vector<std::pair<std::string, std::string>>& flags) {
    const auto& kinds = experiment_kinds();
    const auto& keys = config_keys();
    auto known_key = [&](const std::string& k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };
    auto known_kind = [&](const std::string& k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };

    ExperimentConfig cfg;
    std::map<std::string, ConfigEntry> general, specific;
    for (const auto& src : files) {
        for (const auto& kv : parse_key_values(src.text, src.origin)) {
            const ConfigEntry e{kv.value, fmt::format("{}:{}", src.origin, kv.line)};
            if (!kv.section.empty() && kv.section != "run" && !known_kind(kv.section))
                fail(ErrorKind::invalid_input, fmt::format("{}: unknown section [{}]", e.origin, kv.section));
            if (!known_key(kv.key)) reject(e, kv.key, "unknown key");
            if (kv.section.empty() || kv.section == "run")
                general[kv.key] = e;
            else if (kv.section == experiment)
                specific[kv.key] = e;
        }
    }
    for (auto& [k, e] : specific) general[k] = e;
    for (const auto& [k, v] : flags) {
        const ConfigEntry e{v, "--" + k};
        if (!known_key(k)) reject(e, k, "unknown key");
        general[k] = e;
    }

    std::string exp = experiment;
    if (auto it = general.find("experiment"); it != general.end()) {
        if (exp.empty()) exp = it->second.value;
        else if (it->second.value != exp)
            reject(it->second, "experiment", fmt::format("'{}' conflicts with '{}'", it->second.value, exp));
    }
    if (!known_kind(exp)) fail(ErrorKind::invalid_input, fmt::format("unknown experiment '{}'", exp));
    cfg.experiment = exp;
    general.erase("experiment");
    cfg.entries = general;

    auto get = [&](const std::string& k) -> const ConfigEntry* {
        auto it = general.find(k);
        return it == general.end() ? nullptr : &it->second;
    };

    if (auto e = get("domain")) cfg.domain = e->value;
    // Monneau drops need radii spanning a decade above 8h.
    if (cfg.experiment == "monneau") cfg.n = 512;
    if (auto e = get("n")) {
        const long n = integer(*e, "n");
        if (n < 8) reject(*e, "n", "grid needs at least 8 cells per axis");
        if (n > 4096) reject(*e, "n", "more than 4096 cells per axis");
        cfg.n = static_cast<int>(n);
    }
    if (auto e = get("box_half_width")) {
        cfg.box_half_width = number(*e, "box_half_width");
        if (!(cfg.box_half_width > 0)) reject(*e, "box_half_width", "must be positive");
    }
    if (auto e = get("output_dir")) {
        if (e->value.empty()) reject(*e, "output_dir", "empty path");
        cfg.output_dir = e->value;
    }
    if (auto e = get("seed")) {
        const long s = integer(*e, "seed");
        if (s < 0) reject(*e, "seed", "must be nonnegative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (auto e = get("weights")) {
        try {
            parse_weights(e->value);
        } catch (const Error& err) {
            reject(*e, "weights", err.what());
        }
        cfg.weights = e->value;
    }
    if (auto e = get("alpha")) {
        cfg.alpha = number(*e, "alpha");
        if (!(cfg.alpha > 0 && cfg.alpha <= 1)) reject(*e, "alpha", "must lie in (0, 1]");
    }
    cfg.rbar = default_rbar(cfg.alpha);
    if (auto e = get("rbar")) {
        cfg.rbar = number(*e, "rbar");
        if (!(cfg.rbar > 0 && cfg.rbar < 1)) reject(*e, "rbar", "must lie in (0, 1)");
        if (cfg.rbar > default_rbar(cfg.alpha, 1.0))
            reject(*e, "rbar", fmt::format("must be at most 4^(-1/alpha) = {:.6g}", default_rbar(cfg.alpha, 1.0)));
    }
    if (auto e = get("steps")) {
        const long s = integer(*e, "steps");
        if (s < 3 || s > 64) reject(*e, "steps", "must lie in [3, 64]");
        cfg.steps = static_cast<int>(s);
    }
    if (auto e = get("draws")) {
        const long d = integer(*e, "draws");
        if (d < 1 || d > 10000000) reject(*e, "draws", "must lie in [1, 10^7]");
        cfg.draws = static_cast<int>(d);
    }
    if (auto e = get("eps")) {
        cfg.eps = number(*e, "eps");
        if (!(cfg.eps > 0 && cfg.eps <= 0.05)) reject(*e, "eps", "must lie in (0, 0.05]");
    }
    if (auto e = get("fields")) {
        cfg.fields = split(e->value, ',');
        if (cfg.fields.empty()) reject(*e, "fields", "empty list");
        for (const auto& f : cfg.fields)
            if (f != "xn" && f != "x1" && f != "quadratic" && f != "hodograph")
                reject(*e, "fields", fmt::format("unknown field '{}'", f));
    }

    // Domain, points and grid only matter for experiments that use them.
    const bool uses_domain = cfg.experiment != "harnack" && cfg.experiment != "syscheck";
    const bool needs_pair = pair_experiments.count(cfg.experiment) ||
                            (cfg.experiment == "transmission" &&
                             std::find(cfg.fields.begin(), cfg.fields.end(), "hodograph") != cfg.fields.end());
    DomainPtr domain;
    if (uses_domain) {
        const ConfigEntry fallback{cfg.domain, "default"};
        const ConfigEntry& de = get("domain") ? *get("domain") : fallback;
        try {
            domain = make_domain(cfg.domain);
        } catch (const Error& err) {
            reject(de, "domain", err.what());
        }
        if (auto e = get("Q")) {
            for (const auto& part : split(e->value, ';')) {
                const Point q = parse_point(*e, "Q", part);
                if (q.dim != domain->dim()) reject(*e, "Q", fmt::format("point {} is not in dimension {}", part, domain->dim()));
                cfg.Q.push_back(q);
            }
            if (cfg.Q.empty()) reject(*e, "Q", "empty list");
        } else {
            cfg.Q.push_back(domain->default_Q());
        }
        for (const char* k : {"pole_plus", "pole_minus"}) {
            if (auto e = get(k)) {
                const Point p = parse_point(*e, k, e->value);
                if (p.dim != domain->dim()) reject(*e, k, "wrong dimension");
                (std::string(k) == "pole_plus" ? cfg.pole_plus : cfg.pole_minus) = p;
            }
        }
        const Box box = domain->default_box();
        cfg.box_center = box.center;
        cfg.box_half = cfg.box_half_width > 0 ? cfg.box_half_width : box.half_width;
        if (needs_pair) {
            cfg.h = 2 * cfg.box_half / cfg.n;
            const double nodes = std::pow(cfg.n + 1.0, domain->dim());
            if (nodes > 3e7) {
                const ConfigEntry fb{std::to_string(cfg.n), "default"};
                reject(get("n") ? *get("n") : fb, "n", fmt::format("{:.3g} grid nodes exceed the 3e7 limit", nodes));
            }
        }
        const ConfigEntry qfb{"", "default"};
        const ConfigEntry& qe = get("Q") ? *get("Q") : qfb;
        for (const auto& q : cfg.Q) {
            if (needs_pair || cfg.experiment == "beta") {
                const double sd = std::abs(domain->signed_distance(q));
                if (sd > std::max(1e-9, 0.5 * cfg.h))
                    reject(qe, "Q", fmt::format("{} is not on the boundary (distance {:.3g})", csv_point(q), sd));
            }
            if (needs_pair && inf_distance(q, cfg.box_center) >= cfg.box_half)
                reject(qe, "Q", fmt::format("{} is outside the grid box", csv_point(q)));
        }
    }

    if (!uses_domain && cfg.experiment != "transmission") {
        for (const char* k : {"radii", "r_min", "r_max", "count", "log_spacing"})
            if (auto e = get(k)) reject(*e, k, fmt::format("not used by {}", cfg.experiment));
        return cfg;
    }

    // Radii: explicit list, or a range.
    const ConfigEntry* re = get("radii");
    const ConfigEntry* range_keys[] = {get("r_min"), get("r_max"), get("count"), get("log_spacing")};
    if (re) {
        for (const auto* k : range_keys)
            if (k) reject(*k, "radii", "give either radii or r_min/r_max/count, not both");
        try {
            cfg.radii = parse_double_list(re->value, "radii");
        } catch (const Error& err) {
            reject(*re, "radii", err.what());
        }
        for (double r : cfg.radii)
            if (!(r > 0)) reject(*re, "radii", "radii must be positive");
    } else {
        double lo = 0, hi = 0;
        int count = 8;
        bool log_sp = true;
        if (cfg.experiment == "transmission") {
            lo = 0.1, hi = 0.4, count = 3;
        } else if (cfg.experiment == "beta") {
            lo = 0.05, hi = 0.5;
        } else if (cfg.experiment == "flatness") {
            lo = hi = 0.8, count = 1;
        } else if (uses_domain) {
            lo = 8 * cfg.h;
            double room = cfg.box_half;
            for (const auto& q : cfg.Q) room = std::min(room, cfg.box_half - inf_distance(q, cfg.box_center));
            hi = std::min(0.5, 0.9 * room);
        }
        if (cfg.experiment == "flatness") {
            double room = cfg.box_half;
            for (const auto& q : cfg.Q) room = std::min(room, cfg.box_half - inf_distance(q, cfg.box_center));
            lo = hi = std::min(0.8, 0.9 * room);
        }
        if (auto e = get("r_min")) lo = number(*e, "r_min");
        if (auto e = get("r_max")) hi = number(*e, "r_max");
        if (auto e = get("count")) {
            const long c = integer(*e, "count");
            if (c < 1 || c > 1000) reject(*e, "count", "must lie in [1, 1000]");
            count = static_cast<int>(c);
        }
        if (auto e = get("log_spacing")) log_sp = boolean(*e, "log_spacing");
        const ConfigEntry fb{"", "default"};
        const ConfigEntry& ee = get("r_min") ? *get("r_min") : (get("r_max") ? *get("r_max") : fb);
        if (!(lo > 0) || lo > hi)
            reject(ee, "radii", fmt::format("empty radius range [{:.4g}, {:.4g}] (resolved radii start at 8h = {:.4g})", lo,
                                            hi, 8 * cfg.h));
        if (count == 1 || lo == hi) {
            cfg.radii = {hi};
        } else if (log_sp) {
            cfg.radii = log_spaced(lo, hi, count);
        } else {
            for (int i = 0; i < count; ++i) cfg.radii.push_back(lo + (hi - lo) * i / (count - 1));
        }
    }
    std::sort(cfg.radii.rbegin(), cfg.radii.rend());
    cfg.radii.erase(std::unique(cfg.radii.begin(), cfg.radii.end()), cfg.radii.end());

    const ConfigEntry rfb{"", "default"};
    const ConfigEntry& rsrc = re ? *re : (get("r_min") ? *get("r_min") : (get("r_max") ? *get("r_max") : rfb));
    if (cfg.experiment == "transmission" && cfg.radii.front() > 0.5) reject(rsrc, "radii", "transmission radii must be at most 1/2");
    if (needs_pair && cfg.experiment != "transmission" && cfg.experiment != "hodograph") {
        if (cfg.experiment != "flatness" && cfg.radii.back() < 8 * cfg.h)
            reject(rsrc, "radii",
                   fmt::format("r = {:.4g} is below the resolved range 8h = {:.4g}", cfg.radii.back(), 8 * cfg.h));
        for (const auto& q : cfg.Q)
            if (inf_distance(q, cfg.box_center) + cfg.radii.front() > cfg.box_half)
                reject(rsrc, "radii", fmt::format("B({}, {:.4g}) leaves the grid box", csv_point(q), cfg.radii.front()));
    }
    if (cfg.experiment == "monneau" && cfg.radii.front() < 10 * (1 - 1e-9) * cfg.radii.back())
        reject(rsrc, "radii", "Monneau drops need radii spanning at least one decade");
    if (cfg.experiment == "hodograph" || (cfg.experiment == "transmission" && needs_pair)) {
        if (domain->dim() != 2) fail(ErrorKind::invalid_input, "domain: the hodograph transform is two-dimensional");
    }
    return cfg;
}

int thread_cap() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("FREEBND_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, hw));
    }
    return hw;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    const int workers = std::max(1, std::min(threads, count));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(std::max(count, 0)));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string git_blob_sha1(const std::string& content) {
    const std::string data = "blob " + std::to_string(content.size()) + '\0' + content;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1)
        fail(ErrorKind::internal, "sha1 digest failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::invalid_input, fmt::format("cannot write {}", tmp));
        out << content;
        if (!out) fail(ErrorKind::internal, fmt::format("short write to {}", tmp));
    }
    fs::rename(tmp, path);
}

std::string list_domains() {
    std::string out;
    for (const auto& name : zoo_names()) {
        if (name.find('<') != std::string::npos) continue;
        const auto d = make_domain(name);
        out += fmt::format("{}\tdim={}\t{}", name, d->dim(), d->label());
        if (!d->notes().empty()) out += "\t" + d->notes();
        out += "\n";
    }
    out += "graph:<file>\tdim=2\tgraph domain from a key = value file\n";
    return out;
}

RunOutcome run(const ExperimentConfig& cfg, int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string input_hash = git_blob_sha1(canonical_inputs(cfg));
    Writer out(cfg.output_dir);
    Flags flags;
    json summary;
    summary["experiment"] = cfg.experiment;
    std::string line;

    const auto& e = cfg.experiment;
    DomainPtr domain;
    if (e != "harnack" && e != "syscheck") domain = make_domain(cfg.domain);
    std::shared_ptr<const HarmonicPair> pair;
    if (pair_experiments.count(e) ||
        (e == "transmission" && std::find(cfg.fields.begin(), cfg.fields.end(), "hodograph") != cfg.fields.end()))
        pair = build_pair(cfg, domain);

    if (e == "solve") run_solve(cfg, *pair, out, flags, summary);
    else if (e == "acf" || e == "frequency" || e == "monneau" || e == "density") run_traces(cfg, pair, threads, out, flags, summary);
    else if (e == "tangent") run_tangent(cfg, pair, threads, out, flags);
    else if (e == "beta") run_beta(cfg, *domain, threads, out, summary);
    else if (e == "flatness") run_flatness(cfg, *pair, threads, out, flags, summary);
    else if (e == "harnack") run_harnack(cfg, out, flags);
    else if (e == "transmission") run_transmission(cfg, pair, out, flags);
    else if (e == "hodograph") run_hodograph(cfg, *pair, out, summary);
    else if (e == "syscheck") run_syscheck(cfg, out, flags, summary, line);

    std::string fcsv = "source,flag\n";
    for (const auto& [src, f] : flags.rows) fcsv += src + "," + f + "\n";
    out.put("flags.csv", std::move(fcsv));
    out.put("summary.json", json_text(summary));

    fs::create_directories(cfg.output_dir);
    RunOutcome res;
    for (const auto& [name, content] : out.files()) {
        write_atomic((fs::path(cfg.output_dir) / name).string(), content);
        res.files.push_back(name);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_atomic((fs::path(cfg.output_dir) / "manifest.json").string(),
                 manifest_text(cfg, out, input_hash, seconds, threads, flags));
    res.files.push_back("manifest.json");
    for (const auto& [src, f] : flags.rows) res.flags.push_back(src + ": " + f);
    res.summary = line.empty() ? fmt::format("{}: {} files in {} ({:.2f} s, {} flags)", e, res.files.size(),
                                             cfg.output_dir, seconds, flags.rows.size())
                               : line;
    return res;
}

int main(int argc, char** argv) {
    CLI::App app{"Two-phase free boundary laboratory"};
    app.set_version_flag("--version", version);
    bool list = false;
    app.add_flag("--list-domains", list, "Print the domain zoo");
    auto* runcmd = app.add_subcommand("run", "Run one experiment");
    std::string experiment, config_path;
    runcmd->add_option("experiment", experiment, "Experiment kind")->required();
    runcmd->add_option("--config", config_path, "Key = value config file");
    std::map<std::string, std::string> inline_values;
    for (const auto& k : config_keys()) {
        if (k == "experiment") continue;
        runcmd->add_option("--" + k, inline_values[k], "Config key " + k)->allow_extra_args(false);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (list) {
        std::cout << list_domains();
        return 0;
    }
    if (!runcmd->parsed()) {
        std::cerr << app.help();
        return 2;
    }
    ExperimentConfig cfg;
    try {
        std::vector<ConfigSource> files;
        if (!config_path.empty()) files.push_back({read_text_file(config_path), config_path});
        std::vector<std::pair<std::string, std::string>> flags;
        for (const auto& k : config_keys())
            if (k != "experiment" && runcmd->count("--" + k)) flags.emplace_back(k, inline_values[k]);
        cfg = build_config(experiment, files, flags);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        const auto res = run(cfg, thread_cap());
        for (const auto& f : res.flags) std::cerr << "flag: " << f << "\n";
        std::cout << res.summary << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << to_string(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::invalid_input ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace freebnd::cli
