#include "hheat/config.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace hheat {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || trim(v.substr(pos)) != "")
        throw ConfigError(key, "config key '" + key + "': expected a number, got '" + v + "'");
    return d;
}

long to_long(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long d;
    try {
        d = std::stol(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || trim(v.substr(pos)) != "")
        throw ConfigError(key, "config key '" + key + "': expected an integer, got '" + v + "'");
    return d;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError(key, "config key '" + key + "': empty list");
    return out;
}

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os << std::setprecision(12);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

}  // namespace

McConfig RunConfig::mc() const {
    McConfig m;
    m.n = n;
    m.paths = mc_paths;
    m.substeps = mc_substeps;
    m.t = mc_t;
    m.seed = seed;
    m.hist = mc_hist;
    return m;
}

void RunConfig::validate() const {
    auto wrap = [](const std::string& key, const std::function<void()>& f) {
        try {
            f();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(key, "config key '" + key + "': " + e.what());
        }
    };
    if (n < 1) throw ConfigError("n", "config key 'n': n >= 1 required");
    if (!(solver.p > 1)) throw ConfigError("p", "config key 'p': p > 1 required");
    wrap("grid", [&] { solver.grid.validate(); });
    wrap("quad", [&] { solver.quad.validate(); });
    wrap("dt", [&] { solver.validate(); });
    for (double p : sweep_p)
        if (!(p > 1)) throw ConfigError("sweep.p", "config key 'sweep.p': p > 1 required");
    if (!(kernel_t > 0)) throw ConfigError("kernel.t", "config key 'kernel.t': t > 0 required");
    wrap("mc", [&] { mc().validate(); });
    if (!(condition_Tmax >= 2)) throw ConfigError("condition.Tmax", "config key 'condition.Tmax': Tmax >= 2 required");
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", "config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (kv.count(key)) throw ConfigError(key, "config key '" + key + "' given twice");
        kv[key] = val;
    }

    SolverConfig& s = c.solver;
    std::string kkind = "constant";
    double kc = 1.0, ka = 0.0;
    std::vector<double> ktt, ktk;
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
        {"n", [&](auto& k, auto& v) { c.n = static_cast<int>(to_long(k, v)); }},
        {"grid.Lx", [&](auto& k, auto& v) { s.grid.Lx = to_double(k, v); }},
        {"grid.Ly", [&](auto& k, auto& v) { s.grid.Ly = to_double(k, v); }},
        {"grid.Ltau", [&](auto& k, auto& v) { s.grid.Ltau = to_double(k, v); }},
        {"grid.Nx", [&](auto& k, auto& v) { s.grid.Nx = static_cast<int>(to_long(k, v)); }},
        {"grid.Ny", [&](auto& k, auto& v) { s.grid.Ny = static_cast<int>(to_long(k, v)); }},
        {"grid.Ntau", [&](auto& k, auto& v) { s.grid.Ntau = static_cast<int>(to_long(k, v)); }},
        {"p", [&](auto& k, auto& v) { s.p = to_double(k, v); }},
        {"dt", [&](auto& k, auto& v) { s.dt = to_double(k, v); }},
        {"T_end", [&](auto& k, auto& v) { s.T_end = to_double(k, v); }},
        {"splitting",
         [&](auto& k, auto& v) {
             if (v == "lie")
                 s.splitting = Splitting::Lie;
             else if (v == "strang")
                 s.splitting = Splitting::Strang;
             else
                 throw ConfigError(k, "config key '" + k + "': expected lie or strang, got '" + v + "'");
         }},
        {"record_every", [&](auto& k, auto& v) { s.record_every = static_cast<int>(to_long(k, v)); }},
        {"snapshot_every", [&](auto& k, auto& v) { s.snapshot_every = static_cast<int>(to_long(k, v)); }},
        {"initial.kind",
         [&](auto& k, auto& v) {
             if (v == "bump")
                 s.initial.kind = InitialData::Kind::Bump;
             else if (v == "gaussian")
                 s.initial.kind = InitialData::Kind::Gaussian;
             else if (v == "kernel")
                 s.initial.kind = InitialData::Kind::Kernel;
             else
                 throw ConfigError(k, "config key '" + k + "': expected bump, gaussian or kernel, got '" + v + "'");
         }},
        {"initial.amplitude", [&](auto& k, auto& v) { s.initial.amplitude = to_double(k, v); }},
        {"initial.radius", [&](auto& k, auto& v) { s.initial.radius = to_double(k, v); }},
        {"initial.width_z", [&](auto& k, auto& v) { s.initial.width_z = to_double(k, v); }},
        {"initial.width_tau", [&](auto& k, auto& v) { s.initial.width_tau = to_double(k, v); }},
        {"initial.t0", [&](auto& k, auto& v) { s.initial.t0 = to_double(k, v); }},
        {"k.kind",
         [&](auto& k, auto& v) {
             if (v != "constant" && v != "power" && v != "tabulated")
                 throw ConfigError(k, "config key '" + k + "': expected constant, power or tabulated, got '" + v + "'");
             kkind = v;
         }},
        {"k.c", [&](auto& k, auto& v) { kc = to_double(k, v); }},
        {"k.a", [&](auto& k, auto& v) { ka = to_double(k, v); }},
        {"k.t", [&](auto& k, auto& v) { ktt = to_list(k, v); }},
        {"k.values", [&](auto& k, auto& v) { ktk = to_list(k, v); }},
        {"quad.Lambda", [&](auto& k, auto& v) { s.quad.Lambda = to_double(k, v); }},
        {"quad.panels", [&](auto& k, auto& v) { s.quad.panels = static_cast<int>(to_long(k, v)); }},
        {"quad.nodes", [&](auto& k, auto& v) { s.quad.nodesPerPanel = static_cast<int>(to_long(k, v)); }},
        {"sweep.p", [&](auto& k, auto& v) { c.sweep_p = to_list(k, v); }},
        {"kernel.t", [&](auto& k, auto& v) { c.kernel_t = to_double(k, v); }},
        {"mc.paths", [&](auto& k, auto& v) { c.mc_paths = to_long(k, v); }},
        {"mc.substeps", [&](auto& k, auto& v) { c.mc_substeps = static_cast<int>(to_long(k, v)); }},
        {"mc.t", [&](auto& k, auto& v) { c.mc_t = to_double(k, v); }},
        {"mc.Lx", [&](auto& k, auto& v) { c.mc_hist.Lx = c.mc_hist.Ly = to_double(k, v); }},
        {"mc.Ltau", [&](auto& k, auto& v) { c.mc_hist.Ltau = to_double(k, v); }},
        {"mc.Nx", [&](auto& k, auto& v) { c.mc_hist.Nx = c.mc_hist.Ny = static_cast<int>(to_long(k, v)); }},
        {"mc.Ntau", [&](auto& k, auto& v) { c.mc_hist.Ntau = static_cast<int>(to_long(k, v)); }},
        {"condition.Tmax", [&](auto& k, auto& v) { c.condition_Tmax = to_double(k, v); }},
        {"out", [&](auto&, auto& v) { c.out = v; }},
        {"seed",
         [&](auto& k, auto& v) {
             std::size_t pos = 0;
             try {
                 c.seed = std::stoull(v, &pos);
             } catch (const std::exception&) {
                 pos = 0;
             }
             if (pos == 0 || pos != v.size())
                 throw ConfigError(k, "config key '" + k + "': expected an unsigned integer, got '" + v + "'");
         }},
    };
    for (const auto& [key, val] : kv) {
        auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(key, "unknown config key '" + key + "'");
        it->second(key, val);
    }
    if (!kv.count("n")) throw ConfigError("n", "missing required config key 'n'");

    s.grid.n = c.n;
    c.mc_hist.n = c.n;
    try {
        if (kkind == "constant")
            c.k = AbsorptionProfile::constant(kc);
        else if (kkind == "power")
            c.k = AbsorptionProfile::power_law(kc, ka);
        else
            c.k = AbsorptionProfile::tabulated(ktt, ktk);
    } catch (const std::exception& e) {
        throw ConfigError("k.kind", std::string("config key 'k.kind': ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("", "cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string RunConfig::echo() const {
    const SolverConfig& s = solver;
    std::ostringstream os;
    os << std::setprecision(12);
    os << "n = " << n << "\n";
    os << "grid.Lx = " << s.grid.Lx << "\ngrid.Ly = " << s.grid.Ly << "\ngrid.Ltau = " << s.grid.Ltau << "\n";
    os << "grid.Nx = " << s.grid.Nx << "\ngrid.Ny = " << s.grid.Ny << "\ngrid.Ntau = " << s.grid.Ntau << "\n";
    os << "p = " << s.p << "\ndt = " << s.dt << "\nT_end = " << s.T_end << "\n";
    os << "splitting = " << (s.splitting == Splitting::Lie ? "lie" : "strang") << "\n";
    os << "record_every = " << s.record_every << "\nsnapshot_every = " << s.snapshot_every << "\n";
    const char* ik = s.initial.kind == InitialData::Kind::Bump       ? "bump"
                     : s.initial.kind == InitialData::Kind::Gaussian ? "gaussian"
                                                                     : "kernel";
    os << "initial.kind = " << ik << "\ninitial.amplitude = " << s.initial.amplitude
       << "\ninitial.radius = " << s.initial.radius << "\ninitial.width_z = " << s.initial.width_z
       << "\ninitial.width_tau = " << s.initial.width_tau << "\ninitial.t0 = " << s.initial.t0 << "\n";
    os << "k = " << k.describe() << "\n";
    os << "quad.Lambda = " << s.quad.Lambda << "\nquad.panels = " << s.quad.panels
       << "\nquad.nodes = " << s.quad.nodesPerPanel << "\n";
    os << "sweep.p = " << join(sweep_p) << "\nkernel.t = " << kernel_t << "\n";
    os << "mc.paths = " << mc_paths << "\nmc.substeps = " << mc_substeps << "\nmc.t = " << mc_t << "\n";
    os << "mc.Lx = " << mc_hist.Lx << "\nmc.Ltau = " << mc_hist.Ltau << "\nmc.Nx = " << mc_hist.Nx
       << "\nmc.Ntau = " << mc_hist.Ntau << "\n";
    os << "condition.Tmax = " << condition_Tmax << "\nout = " << out << "\nseed = " << seed << "\n";
    return os.str();
}

}  // namespace hheat
