#pragma once

// Scenario runner: INI-style configuration -> simulation -> CSV time series
// plus a JSON run summary. Also the envelope comparison behind `compare`.
//
// Configuration grammar (';' starts a comment line, keys are case-sensitive):
//
//   [model]
//   family    = static_ising | transverse_bath | bath_exchange | two_spin_heisenberg
//   delta     = <real>                    central field (not for two_spin_heisenberg)
//   couplings = reference | <r1>, <r2>, ...   bath couplings J_k
//   n_bath    = <int>                     optional, must match the coupling count
//   hx        = <real> | <r1>, <r2>, ...  transverse_bath; a list runs one member per value
//   exchange  = <real>                    bath_exchange: A (constant) or upper bound (random)
//   exchange_random = true | false        bath_exchange: draw A_kl uniformly from [0, A]
//   exchange_seed   = <int>
//   j_central = <real>                    two_spin_heisenberg
//
//   [initial]
//   bloch     = <x>, <y>, <z>             one central spin
//   state     = up-down | down-up | up-up | down-down   two central spins
//   bath_seed = <int>
//
//   [run]
//   t_max     = <real>
//   n_samples = <int>                     uniform grid including t = 0 and t = t_max
//   method    = auto | exact_static_ising | polynomial | dense_oracle
//   tolerance = <real>                    polynomial truncation, default 1e-12
//
//   [output]
//   observables    = sigma_z, sigma_x, sigma_y, sigma1_z, sigma2_z, entropy,
//                    corr_zz, corr_xx, corr_yy, rho_coupled
//   theory_overlay = true | false

#include <spinbath/hilbert.hpp>
#include <spinbath/models.hpp>
#include <spinbath/observables.hpp>
#include <spinbath/propagators.hpp>
#include <spinbath/theory.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace spinbath {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Observable { SigmaZ, SigmaX, SigmaY, Sigma1Z, Sigma2Z, Entropy, CorrZZ, CorrXX, CorrYY, RhoCoupled };

inline const std::vector<std::pair<Observable, std::string_view>>& observable_names()
{
    static const std::vector<std::pair<Observable, std::string_view>> names = {
        {Observable::SigmaZ, "sigma_z"},   {Observable::SigmaX, "sigma_x"},   {Observable::SigmaY, "sigma_y"},
        {Observable::Sigma1Z, "sigma1_z"}, {Observable::Sigma2Z, "sigma2_z"}, {Observable::Entropy, "entropy"},
        {Observable::CorrZZ, "corr_zz"},   {Observable::CorrXX, "corr_xx"},   {Observable::CorrYY, "corr_yy"},
        {Observable::RhoCoupled, "rho_coupled"},
    };
    return names;
}

inline std::string_view to_string(Observable o)
{
    for (const auto& [k, v] : observable_names())
        if (k == o) return v;
    return "unknown";
}

inline Observable parse_observable(std::string_view name)
{
    for (const auto& [k, v] : observable_names())
        if (v == name) return k;
    throw ConfigError("output.observables: unknown observable '" + std::string(name) + "'");
}

/// Central-spin count an observable needs; 0 = any.
inline int required_central(Observable o)
{
    switch (o) {
    case Observable::SigmaZ:
    case Observable::SigmaX:
    case Observable::SigmaY: return 1;
    case Observable::Entropy: return 0;
    default: return 2;
    }
}

inline const std::vector<std::string>& rho_coupled_columns()
{
    static const std::vector<std::string> cols = {"p_singlet", "p_t_minus", "p_t_zero",  "p_t_plus",
                                                  "abs_s_tm",  "abs_s_t0",  "abs_s_tp",  "abs_tm_t0",
                                                  "abs_tm_tp", "abs_t0_tp"};
    return cols;
}

struct Scenario {
    std::string name;
    ModelSpec model;
    std::vector<double> hx_sweep;  // transverse_bath with several h_x values
    std::optional<std::array<double, 3>> bloch;
    std::string product_state;     // two central spins: "up-down", ...
    std::uint64_t bath_seed = 1;
    double t_max = 1.0;
    std::size_t n_samples = 2;
    std::string method = "auto";
    double tolerance = 1e-12;
    std::vector<Observable> observables;
    bool theory_overlay = false;
    std::string source_text;       // config as read, echoed into CSV headers

    double dt() const { return t_max / static_cast<double>(n_samples - 1); }
};

namespace detail {

inline std::string trim(std::string s)
{
    const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
    return s;
}

inline std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_real(const std::string& key, const std::string& text)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (trim(text.substr(used)).empty() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a real number, got '" + text + "'");
}

inline long long parse_int(const std::string& key, const std::string& text)
{
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (trim(text.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
}

inline bool parse_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_reals(const std::string& key, const std::string& text)
{
    std::vector<double> v;
    for (const auto& item : split_list(text)) v.push_back(parse_real(key, item));
    if (v.empty()) throw ConfigError(key + ": empty list");
    return v;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text, const std::string& name)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }

    static const std::map<std::string, std::set<std::string>> allowed = {
        {"model", {"family", "delta", "couplings", "n_bath", "hx", "exchange", "exchange_random", "exchange_seed",
                   "j_central"}},
        {"initial", {"bloch", "state", "bath_seed"}},
        {"run", {"t_max", "n_samples", "method", "tolerance"}},
        {"output", {"observables", "theory_overlay"}},
    };
    for (const auto& [section, body] : tree) {
        const auto it = allowed.find(section);
        if (it == allowed.end()) throw ConfigError("unknown section [" + section + "]");
        if (!body.data().empty()) throw ConfigError("key '" + section + "' must be inside a section");
        for (const auto& [key, value] : body)
            if (!it->second.contains(key)) throw ConfigError("unknown key " + section + "." + key);
    }

    const auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return detail::trim(*v);
        return std::nullopt;
    };
    const auto require = [&](const std::string& path) {
        auto v = get(path);
        if (!v || v->empty()) throw ConfigError("missing required key " + path);
        return *v;
    };

    Scenario sc;
    sc.name = name;
    sc.source_text = text;

    // [model]
    try {
        sc.model.family = parse_family(require("model.family"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model.family: ") + e.what());
    }
    auto& m = sc.model;
    const std::string couplings = require("model.couplings");
    m.couplings = couplings == "reference" ? reference_couplings() : detail::parse_reals("model.couplings", couplings);
    m.n_bath = static_cast<int>(m.couplings.size());
    if (auto v = get("model.n_bath")) {
        const auto n = detail::parse_int("model.n_bath", *v);
        if (n < 0) throw ConfigError("model.n_bath: must be >= 0");
        if (n != m.n_bath) throw ConfigError("model.n_bath: " + *v + " does not match the coupling count " +
                                             std::to_string(m.n_bath));
    }
    if (m.family == Family::TwoSpinHeisenberg) {
        m.j_central = detail::parse_real("model.j_central", require("model.j_central"));
        if (get("model.delta")) throw ConfigError("model.delta: not used by two_spin_heisenberg");
    } else {
        m.delta = detail::parse_real("model.delta", require("model.delta"));
        if (get("model.j_central")) throw ConfigError("model.j_central: only used by two_spin_heisenberg");
    }
    if (m.family == Family::TransverseBath) {
        const auto hx = detail::parse_reals("model.hx", require("model.hx"));
        for (double h : hx)
            if (h < 0.0) throw ConfigError("model.hx: values must be >= 0");
        if (hx.size() == 1)
            m.hx = hx.front();
        else
            sc.hx_sweep = hx;
    } else if (get("model.hx")) {
        throw ConfigError("model.hx: only used by transverse_bath");
    }
    if (m.family == Family::BathExchange) {
        const double a = detail::parse_real("model.exchange", require("model.exchange"));
        const bool random = get("model.exchange_random")
                                ? detail::parse_bool("model.exchange_random", *get("model.exchange_random"))
                                : false;
        const auto seed = get("model.exchange_seed") ? detail::parse_int("model.exchange_seed", *get("model.exchange_seed"))
                                                     : 1;
        m.exchange = random ? random_exchange(m.n_bath, a, static_cast<std::uint64_t>(seed))
                            : constant_exchange(m.n_bath, a);
    } else if (get("model.exchange") || get("model.exchange_random") || get("model.exchange_seed")) {
        throw ConfigError("model.exchange: only used by bath_exchange");
    }
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }

    // [initial]
    if (m.n_central() == 1) {
        const auto b = detail::parse_reals("initial.bloch", require("initial.bloch"));
        if (b.size() != 3) throw ConfigError("initial.bloch: expected three components");
        if (b[0] == 0.0 && b[1] == 0.0 && b[2] == 0.0) throw ConfigError("initial.bloch: zero vector");
        sc.bloch = std::array<double, 3>{b[0], b[1], b[2]};
        if (get("initial.state")) throw ConfigError("initial.state: only used with two central spins");
    } else {
        sc.product_state = require("initial.state");
        static const std::set<std::string> labels = {"up-down", "down-up", "up-up", "down-down"};
        if (!labels.contains(sc.product_state))
            throw ConfigError("initial.state: expected up-down, down-up, up-up or down-down, got '" +
                              sc.product_state + "'");
        if (get("initial.bloch")) throw ConfigError("initial.bloch: only used with one central spin");
    }
    if (auto v = get("initial.bath_seed")) {
        const auto s = detail::parse_int("initial.bath_seed", *v);
        if (s < 0) throw ConfigError("initial.bath_seed: must be >= 0");
        sc.bath_seed = static_cast<std::uint64_t>(s);
    }

    // [run]
    sc.t_max = detail::parse_real("run.t_max", require("run.t_max"));
    if (!(sc.t_max > 0.0)) throw ConfigError("run.t_max: must be > 0");
    const auto n = detail::parse_int("run.n_samples", require("run.n_samples"));
    if (n < 2) throw ConfigError("run.n_samples: must be >= 2");
    sc.n_samples = static_cast<std::size_t>(n);
    if (auto v = get("run.method")) sc.method = *v;
    static const std::set<std::string> methods = {"auto", "exact_static_ising", "polynomial", "dense_oracle"};
    if (!methods.contains(sc.method)) throw ConfigError("run.method: unknown method '" + sc.method + "'");
    if (sc.method == "exact_static_ising" && m.family != Family::StaticIsing)
        throw ConfigError("run.method: exact_static_ising needs family static_ising");
    if (auto v = get("run.tolerance")) {
        sc.tolerance = detail::parse_real("run.tolerance", *v);
        if (!(sc.tolerance > 0.0)) throw ConfigError("run.tolerance: must be > 0");
    }

    // [output]
    for (const auto& item : detail::split_list(require("output.observables"))) {
        const Observable o = parse_observable(item);
        const int need = required_central(o);
        if (need != 0 && need != m.n_central())
            throw ConfigError("output.observables: '" + item + "' needs " + std::to_string(need) +
                              " central spin(s), model has " + std::to_string(m.n_central()));
        if (std::find(sc.observables.begin(), sc.observables.end(), o) == sc.observables.end())
            sc.observables.push_back(o);
    }
    if (auto v = get("output.theory_overlay")) sc.theory_overlay = detail::parse_bool("output.theory_overlay", *v);
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.stem().string());
}

// ---------------------------------------------------------------------------
// Running.

/// Observer for every sample of every member: (member tag, t, full state).
/// Members of a sweep may run on different threads.
using SampleHook = std::function<void(const std::string&, double, const StateVector&)>;

struct RunOptions {
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    int threads = 1;
    SampleHook hook;
};

struct MemberResult {
    std::string tag;                         // empty, or "hx<value>" for sweep members
    double hx = 0.0;
    TheoryParams theory;
    std::map<std::string, TimeSeries> series;  // observable / column name -> samples
    std::map<std::string, std::filesystem::path> files;
    std::map<std::string, double> metrics;
};

struct RunSummary {
    std::string scenario;
    std::string method;
    std::uint64_t bath_seed = 0;
    double wall_time_s = 0.0;
    std::vector<MemberResult> members;
    std::filesystem::path summary_file;
};

namespace detail {

inline std::string format_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string tag_for(double hx)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "hx%g", hx);
    return buf;
}

inline StateVector initial_state(const Scenario& sc, std::uint64_t seed)
{
    StateVector central;
    if (sc.bloch) {
        const auto& b = *sc.bloch;
        central = bloch_state(b[0], b[1], b[2]);
    } else {
        static const std::map<std::string, std::string> bits = {
            {"up-down", "10"}, {"down-up", "01"}, {"up-up", "11"}, {"down-down", "00"}};
        central = basis_state(2, 0, bits.at(sc.product_state));
    }
    if (sc.model.n_bath == 0) return central;
    return random_bath_product(central, sc.model.n_bath, seed);
}

inline Method resolve_method(const Scenario& sc)
{
    if (sc.method == "exact_static_ising") return Method::ExactStaticIsing;
    if (sc.method == "polynomial") return Method::Polynomial;
    if (sc.method == "dense_oracle") return Method::DenseOracle;
    return sc.model.family == Family::StaticIsing ? Method::ExactStaticIsing : Method::Polynomial;
}

inline void write_csv(const std::filesystem::path& path, const Scenario& sc, std::uint64_t seed,
                      const std::string& tag, const std::vector<std::string>& columns,
                      const std::vector<double>& times, const std::vector<const std::vector<double>*>& data)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# spinbath scenario: " << sc.name << "\n";
    if (!tag.empty()) out << "# member: " << tag << "\n";
    out << "# bath_seed: " << seed << "\n";
    std::istringstream cfg(sc.source_text);
    for (std::string line; std::getline(cfg, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out << "# config: " << line << "\n";
    }
    out << "time";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < times.size(); ++i) {
        out << format_real(times[i]);
        for (const auto* col : data) out << ',' << format_real((*col)[i]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("error while writing " + path.string());
}

/// Envelope/entropy figures of merit for one member.
inline void compute_metrics(const Scenario& sc, MemberResult& r)
{
    const std::string primary = sc.model.n_central() == 1 ? "sigma_z" : "sigma1_z";
    const auto it = r.series.find(primary);
    if (it == r.series.end()) return;
    const TimeSeries& sig = it->second;
    const double sigma0 = sig.values.front();
    r.metrics["sigma0"] = sigma0;

    std::optional<TimeSeries> env;
    try {
        env = extract_envelope(sig);
    } catch (const EnvelopeError&) {
        return;
    }

    const auto& p = r.theory;
    const double t_end = sig.times.back();
    switch (p.b2 > 0.0 ? sc.model.family : Family::BathExchange) {
    case Family::StaticIsing:
        r.metrics["envelope_deviation"] = max_relative_deviation(
            *env, [&](double t) { return envelope_static(t, p, sigma0); }, 0.0, t_end);
        break;
    case Family::TransverseBath:
        if (p.tau2 > 0.0 && p.tau2 < t_end)
            r.metrics["envelope_deviation"] = max_relative_deviation(
                *env, [&](double t) { return envelope_dynamic(t, p, sigma0); }, p.tau2, t_end);
        break;
    case Family::TwoSpinHeisenberg: {
        // The mean-field law dips close to zero near b t = sqrt(3); deviations are
        // measured against the initial amplitude.
        const double t_stop = std::min(3.0 / std::sqrt(p.b2), t_end);
        double worst = 0.0;
        for (std::size_t i = 0; i < env->size(); ++i)
            if (env->times[i] <= t_stop)
                worst = std::max(worst, std::abs(env->values[i] - sigma0 * envelope_heisenberg(env->times[i], p.b2)));
        r.metrics["envelope_deviation"] = worst / std::abs(sigma0);
        break;
    }
    case Family::BathExchange: break;
    }

    const auto ent = r.series.find("entropy");
    if (ent == r.series.end()) return;
    const auto& s = ent->second.values;
    const std::size_t tail = std::max<std::size_t>(1, s.size() / 10);
    double plateau = 0.0;
    for (std::size_t i = s.size() - tail; i < s.size(); ++i) plateau += s[i];
    plateau /= static_cast<double>(tail);
    r.metrics["entropy_plateau"] = plateau;
    if (!(plateau > 1e-9)) return;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] >= 0.98 * plateau) {
            const double t_sat = ent->second.times[i];
            r.metrics["saturation_time"] = t_sat;
            for (std::size_t k = 0; k < env->size(); ++k)
                if (env->times[k] >= t_sat) {
                    r.metrics["residual_amplitude_fraction"] = env->values[k] / std::abs(sigma0);
                    break;
                }
            break;
        }
    }
}

inline MemberResult run_member(const Scenario& sc, const ModelSpec& spec, const std::string& tag,
                               std::uint64_t seed, const RunOptions& opt)
{
    MemberResult r;
    r.tag = tag;
    r.hx = spec.hx;
    if (spec.n_bath > 0 && bath_dispersion(spec.couplings) > 0.0) {
        const double energy_scale = spec.family == Family::TwoSpinHeisenberg ? spec.j_central : spec.delta;
        r.theory = TheoryParams::from(spec.couplings, energy_scale, spec.hx);
    }

    const StateVector s0 = initial_state(sc, seed);
    const double dt = sc.dt();
    const std::size_t n = sc.n_samples;
    const int m = spec.n_central();

    std::vector<double> times;
    std::map<Observable, std::vector<double>> values;
    std::array<std::vector<double>, 10> rho_cols;
    times.reserve(n);

    const auto visit = [&](double t, const StateVector& psi) {
        times.push_back(t);
        DensityMatrix rho = reduced_density_matrix(psi, m);
        // Roundoff in long Chebyshev runs accumulates slowly; rho is checked against the
        // state's own norm to 1e-12 and the norm itself to 1e-10.
        const double nrm = psi.norm_squared();
        if (std::abs(nrm - 1.0) > 1e-10)
            throw std::runtime_error("norm drifted to " + format_real(nrm) + " at t = " + format_real(t));
        rho.entries /= nrm;
        try {
            rho.validate();
        } catch (const std::logic_error& e) {
            throw std::runtime_error(std::string("invalid reduced density matrix at t = ") + format_real(t) +
                                     ": " + e.what());
        }
        for (Observable o : sc.observables) {
            double v = 0.0;
            switch (o) {
            case Observable::SigmaZ: v = expect_local(rho, "Z"); break;
            case Observable::SigmaX: v = expect_local(rho, "X"); break;
            case Observable::SigmaY: v = expect_local(rho, "Y"); break;
            case Observable::Sigma1Z: v = expect_local(rho, "ZI"); break;
            case Observable::Sigma2Z: v = expect_local(rho, "IZ"); break;
            case Observable::Entropy: v = quadratic_entropy(rho); break;
            case Observable::CorrZZ: v = expect_local(rho, "ZZ"); break;
            case Observable::CorrXX: v = expect_local(rho, "XX"); break;
            case Observable::CorrYY: v = expect_local(rho, "YY"); break;
            case Observable::RhoCoupled: {
                const DensityMatrix c = to_coupled_basis(rho);
                for (int k = 0; k < 4; ++k) rho_cols[k].push_back(c.entries(k, k).real());
                int col = 4;
                for (int a = 0; a < 4; ++a)
                    for (int b = a + 1; b < 4; ++b) rho_cols[col++].push_back(std::abs(c.entries(a, b)));
                continue;
            }
            }
            values[o].push_back(v);
        }
        if (opt.hook) opt.hook(tag, t, psi);
    };

    const CompiledModel model = compile(spec);
    switch (resolve_method(sc)) {
    case Method::ExactStaticIsing:
        StaticIsingEvolver(spec).sample(s0, dt, n, visit);
        break;
    case Method::Polynomial:
        ChebyshevPropagator(model, sc.tolerance).sample(s0, dt, n, visit);
        break;
    case Method::DenseOracle: {
        const DenseEvolver ev(model);
        for (std::size_t j = 0; j < n; ++j) {
            const double t = static_cast<double>(j) * dt;
            visit(t, ev.evolve(s0, t));
        }
        break;
    }
    }

    const std::string suffix = tag.empty() ? "" : "_" + tag;
    const double sigma0 = [&] {
        for (Observable o : {Observable::SigmaZ, Observable::Sigma1Z})
            if (values.contains(o)) return values[o].front();
        return 0.0;
    }();
    for (Observable o : sc.observables) {
        const std::string name(to_string(o));
        const auto path = opt.out_dir / (name + suffix + ".csv");
        if (o == Observable::RhoCoupled) {
            std::vector<const std::vector<double>*> cols;
            for (const auto& c : rho_cols) cols.push_back(&c);
            write_csv(path, sc, seed, tag, rho_coupled_columns(), times, cols);
            for (std::size_t k = 0; k < rho_cols.size(); ++k)
                r.series[rho_coupled_columns()[k]] = TimeSeries{times, rho_cols[k], rho_coupled_columns()[k]};
            r.files[name] = path;
            continue;
        }
        std::vector<std::string> columns = {name};
        std::vector<const std::vector<double>*> cols = {&values[o]};
        std::vector<double> signal;
        std::vector<double> env;
        const bool oscillating = o == Observable::SigmaZ || o == Observable::Sigma1Z;
        if (sc.theory_overlay && oscillating && r.theory.b2 > 0.0) {
            const auto& p = r.theory;
            for (double t : times) {
                switch (spec.family) {
                case Family::StaticIsing:
                    signal.push_back(gaussian_average_analytic(t, p, sigma0));
                    env.push_back(envelope_static(t, p, sigma0));
                    break;
                case Family::TransverseBath:
                case Family::BathExchange:
                    env.push_back(envelope_dynamic(t, p, sigma0));
                    break;
                case Family::TwoSpinHeisenberg:
                    env.push_back(sigma0 * envelope_heisenberg(t, p.b2));
                    break;
                }
            }
            if (!signal.empty()) {
                columns.push_back("theory_signal");
                cols.push_back(&signal);
            }
            columns.push_back("theory_envelope");
            cols.push_back(&env);
        }
        write_csv(path, sc, seed, tag, columns, times, cols);
        r.series[name] = TimeSeries{times, values[o], name};
        r.files[name] = path;
    }
    compute_metrics(sc, r);
    return r;
}

inline nlohmann::json to_json(const TheoryParams& p)
{
    return {{"b2", p.b2}, {"delta", p.delta}, {"tau1", p.tau1}, {"tau2", p.tau2}};
}

}  // namespace detail

inline RunSummary run_scenario(const Scenario& sc, const RunOptions& opt = {})
{
    const auto start = std::chrono::steady_clock::now();
    std::filesystem::create_directories(opt.out_dir);
    const std::uint64_t seed = opt.seed_override.value_or(sc.bath_seed);

    std::vector<std::pair<ModelSpec, std::string>> jobs;
    if (sc.hx_sweep.empty()) {
        jobs.emplace_back(sc.model, "");
    } else {
        for (double h : sc.hx_sweep) {
            ModelSpec spec = sc.model;
            spec.hx = h;
            jobs.emplace_back(spec, detail::tag_for(h));
        }
    }

    RunSummary summary;
    summary.scenario = sc.name;
    summary.method = std::string(to_string(detail::resolve_method(sc)));
    summary.bath_seed = seed;
    summary.members.resize(jobs.size());

    std::vector<std::exception_ptr> errors(jobs.size());
    std::size_t next = 0;
    std::mutex lock;
    const auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard g(lock);
                if (next >= jobs.size()) return;
                i = next++;
            }
            try {
                summary.members[i] = detail::run_member(sc, jobs[i].first, jobs[i].second, seed, opt);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int workers = std::clamp(opt.threads, 1, static_cast<int>(jobs.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            const std::string where = jobs[i].second.empty() ? "" : " (member " + jobs[i].second + ")";
            throw std::runtime_error("scenario " + sc.name + where + ": " + e.what());
        }
    }

    summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    nlohmann::json j;
    j["scenario"] = summary.scenario;
    j["family"] = std::string(to_string(sc.model.family));
    j["method"] = summary.method;
    j["bath_seed"] = summary.bath_seed;
    j["t_max"] = sc.t_max;
    j["n_samples"] = sc.n_samples;
    j["wall_time_s"] = summary.wall_time_s;
    j["members"] = nlohmann::json::array();
    for (const auto& mem : summary.members) {
        nlohmann::json mj;
        if (!mem.tag.empty()) {
            mj["tag"] = mem.tag;
            mj["hx"] = mem.hx;
        }
        if (mem.theory.b2 > 0.0) mj["theory"] = detail::to_json(mem.theory);
        for (const auto& [k, v] : mem.files) mj["files"][k] = v.filename().string();
        for (const auto& [k, v] : mem.metrics) mj["metrics"][k] = v;
        j["members"].push_back(mj);
    }
    summary.summary_file = opt.out_dir / "summary.json";
    std::ofstream out(summary.summary_file);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + summary.summary_file.string());
    return summary;
}

inline RunSummary run_scenario(const std::filesystem::path& config_path, const RunOptions& opt = {})
{
    return run_scenario(load_scenario(config_path), opt);
}

// ---------------------------------------------------------------------------
// compare

/// Time column and first value column of a CSV written by run_scenario.
inline TimeSeries read_series_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    TimeSeries ts;
    bool header = false;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = detail::split_list(line);
        if (!header) {
            if (cells.size() < 2) throw std::runtime_error(path.string() + ": header needs at least two columns");
            ts.label = cells[1];
            header = true;
            continue;
        }
        if (cells.size() < 2) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": short row");
        ts.times.push_back(detail::parse_real("time", cells[0]));
        ts.values.push_back(detail::parse_real(ts.label, cells[1]));
    }
    ts.validate();
    return ts;
}

struct CompareOptions {
    std::optional<double> sigma0;  // default: first sample value
    double t_min = 0.0;
    double t_max = 1e300;
    std::optional<std::filesystem::path> out_csv;  // default: <csv stem>_vs_<law>.csv beside the input
};

/// Max relative deviation between the extracted envelope of `sim_csv` and `law`.
inline double compare(const std::filesystem::path& sim_csv, EnvelopeLaw law, const TheoryParams& params,
                      const CompareOptions& opt = {})
{
    const TimeSeries series = read_series_csv(sim_csv);
    if (series.size() == 0) throw std::runtime_error(sim_csv.string() + ": no samples");
    const TimeSeries env = extract_envelope(series);
    const double sigma0 = opt.sigma0.value_or(series.values.front());
    const auto ref = [&](double t) { return envelope(law, t, params, sigma0); };
    const double dev = max_relative_deviation(env, ref, opt.t_min, opt.t_max);

    const auto out_path = opt.out_csv.value_or(sim_csv.parent_path() /
                                               (sim_csv.stem().string() + "_vs_" + std::string(to_string(law)) + ".csv"));
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path.string());
    out << "# envelope of " << sim_csv.filename().string() << " vs " << to_string(law) << " law, b2 = "
        << detail::format_real(params.b2) << ", delta = " << detail::format_real(params.delta)
        << ", sigma0 = " << detail::format_real(sigma0) << "\n";
    out << "time,envelope,law,relative_deviation\n";
    for (std::size_t i = 0; i < env.size(); ++i) {
        const double t = env.times[i];
        if (t < opt.t_min || t > opt.t_max) continue;
        const double l = ref(t);
        out << detail::format_real(t) << ',' << detail::format_real(env.values[i]) << ',' << detail::format_real(l)
            << ',' << detail::format_real(std::abs(env.values[i] - l) / std::abs(l)) << '\n';
    }
    return dev;
}

}  // namespace spinbath
