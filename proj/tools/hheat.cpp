#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "hheat/asymptotics.hpp"
#include "hheat/config.hpp"
#include "hheat/montecarlo.hpp"
#include "hheat/parallel.hpp"
#include "hheat/verify.hpp"

using namespace hheat;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config, out;
    int workers = 0;
    uint64_t seed = 0;
    bool seed_set = false;
};

RunConfig load(const Globals& g) {
    RunConfig c = g.config.empty() ? parse_config("n = 1\n") : load_config(g.config);
    if (!g.out.empty()) c.out = g.out;
    if (g.seed_set) c.seed = g.seed;
    return c;
}

std::string out_dir(const RunConfig& c) {
    fs::create_directories(c.out);
    return c.out;
}

std::vector<double> parse_point(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
    return v;
}

void write_summary(const std::string& path, const RunConfig& c, const std::string& extra) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "# effective configuration\n" << c.echo() << extra;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hheat: heat flow with absorption on the Heisenberg group"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "key-value config file");
    app.add_option("--out", g.out, "output directory (a file for montecarlo and kernel table)");
    app.add_option("--workers", g.workers, "worker threads, 0 = all cores");
    app.add_option_function<uint64_t>(
        "--seed", [&](uint64_t s) { g.seed = s, g.seed_set = true; }, "random seed");

    auto* kern = app.add_subcommand("kernel", "evaluate h_t at a point, or tabulate it");
    int kn = 1;
    double kt = 1.0;
    std::string kpoint = "0,0,0";
    bool literal = false;
    kern->add_option("--n", kn, "group dimension");
    kern->add_option("--t", kt, "time");
    kern->add_option("--point", kpoint, "comma separated x..., y..., tau");
    kern->add_flag("--literal", literal, "evaluate the closed-form expression as printed (mass 1/(2 pi))");
    auto* ktab = kern->add_subcommand("table", "sample h_t (t = kernel.t) on the config grid");

    auto* evo = app.add_subcommand("evolve", "run the solver, write trace.csv and final.bin");
    auto* sweep = app.add_subcommand("sweep", "dichotomy sweep over sweep.p, write sweep.csv");
    auto* cond = app.add_subcommand("check-condition", "integrability of t^{-Q(p-1)/2} k(t) over [1, inf)");
    auto* mcs = app.add_subcommand("montecarlo", "histogram of horizontal Brownian endpoints");
    int mn = 1;
    double mt = 1.0;
    long mpaths = 0;
    int msub = 0;
    mcs->add_option("--n", mn, "group dimension");
    mcs->add_option("--t", mt, "time");
    mcs->add_option("--paths", mpaths, "number of paths (default mc.paths)");
    mcs->add_option("--substeps", msub, "substeps per unit time (default mc.substeps)");
    auto* ver = app.add_subcommand("verify", "run the invariant battery");
    long vpaths = 100000;
    ver->add_option("--mc-paths", vpaths, "paths for the Monte Carlo smoke check");

    CLI11_PARSE(app, argc, argv);

    try {
        set_workers(g.workers);
        std::cout << std::setprecision(17);

        if (*kern) {
            if (*ktab) {
                RunConfig c = load(g);
                KernelTable tab = tabulate_kernel(c.n, c.grid(), c.quad());
                GridField h = c.kernel_t == 1.0 ? tab.values : sample_kernel(c.n, c.kernel_t, c.grid(), c.quad());
                const std::string path = g.out.empty() ? "kernel.bin" : g.out;
                write_field(h, path);
                const auto r = check_kernel_invariants(h);
                std::cout << "t,mass,min,symmetry,from_cache,file\n"
                          << c.kernel_t << "," << r.mass << "," << r.min << "," << r.symmetry << ","
                          << (tab.from_cache ? 1 : 0) << "," << path << "\n";
                return 0;
            }
            const auto v = parse_point(kpoint);
            if (static_cast<int>(v.size()) != 2 * kn + 1)
                throw std::invalid_argument("--point needs 2n+1 = " + std::to_string(2 * kn + 1) + " values");
            HPoint p(kn);
            for (int i = 0; i < kn; ++i) {
                p.x[i] = v[i];
                p.y[i] = v[kn + i];
            }
            p.tau = v[2 * kn];
            const double h = literal ? explicit_formula_value(kn, kt, p) : kernel_value(kn, kt, p);
            std::cout << "n,t,point,value\n" << kn << "," << kt << ",\"" << kpoint << "\"," << h << "\n";
            return 0;
        }

        if (*evo) {
            RunConfig c = load(g);
            const std::string dir = out_dir(c);
            const GridField u0 = make_initial(c.grid(), c.solver.initial, c.quad());
            const auto r = evolve(u0, c.solver, c.k);
            r.trace.write_csv(dir + "/trace.csv");
            write_field(r.final_state, dir + "/final.bin");
            std::ostringstream ex;
            ex << std::setprecision(12) << "# results\nmass_initial = " << r.trace.rows.front().mass
               << "\nmass_final = " << r.trace.rows.back().mass << "\nleak = " << r.trace.rows.back().leak_cum
               << "\nkernel_mass_deficit = " << r.kernel_mass_deficit
               << "\nmass_identity_residual = " << mass_identity_residual(r.trace) << "\n";
            write_summary(dir + "/summary.txt", c, ex.str());
            std::cout << c.echo() << ex.str();
            return 0;
        }

        if (*sweep) {
            RunConfig c = load(g);
            const std::string dir = out_dir(c);
            std::vector<EvolveResult> runs;
            const auto rows = dichotomy_sweep(c.sweep_p, c.solver, c.k, &runs);
            write_sweep_csv(rows, dir + "/sweep.csv");
            for (std::size_t i = 0; i < runs.size(); ++i) {
                std::ostringstream name;
                name << dir << "/trace_p" << c.sweep_p[i] << ".csv";
                runs[i].trace.write_csv(name.str());
            }
            write_summary(dir + "/summary.txt", c, "");
            std::ifstream f(dir + "/sweep.csv");
            std::cout << f.rdbuf();
            return 0;
        }

        if (*cond) {
            RunConfig c = load(g);
            const std::string dir = out_dir(c);
            const auto r = condition_check(c.k, c.solver.p, 2 * c.n + 2, c.condition_Tmax);
            std::ofstream f(dir + "/condition.csv");
            f << "T,integral\n" << std::setprecision(17);
            for (std::size_t i = 0; i < r.T.size(); ++i) f << r.T[i] << "," << r.integral[i] << "\n";
            std::cout << "p,Q,k,verdict,closed_form,details\n"
                      << r.p << "," << r.Q << ",\"" << r.k << "\"," << verdict_name(r.verdict) << ","
                      << (r.closed_form ? 1 : 0) << ",\"" << r.details << "\"\n";
            return 0;
        }

        if (*mcs) {
            RunConfig c = g.config.empty() ? parse_config("n = " + std::to_string(mn) + "\n") : load_config(g.config);
            if (g.seed_set) c.seed = g.seed;
            McConfig m = c.mc();
            if (!g.config.empty() && mn != c.n) throw std::invalid_argument("--n differs from the config n");
            m.t = mt;
            if (mpaths > 0) m.paths = mpaths;
            if (msub > 0) m.substeps = msub;
            const auto d = estimate_density(sample_paths(m), m.hist);
            const std::string path = g.out.empty() ? "density.bin" : g.out;
            write_density(d, path);
            const auto cmp = compare_with_kernel(d, cell_average_kernel(m.n, m.t, m.hist, c.quad()));
            std::cout << "paths,in_box,cells,exceed,fraction,worst_z,file\n"
                      << d.paths << "," << d.in_box << "," << cmp.cells << "," << cmp.exceed << "," << cmp.fraction
                      << "," << cmp.worst_z << "," << path << "\n";
            return 0;
        }

        if (*ver) {
            RunConfig c = load(g);
            VerifyOptions o;
            o.mc_paths = vpaths;
            const auto rep = run_verify(c, o);
            std::cout << rep.table();
            if (!g.out.empty()) {
                const std::string dir = out_dir(c);
                std::ofstream(dir + "/verify.json") << rep.summary_json();
            } else {
                std::cout << rep.summary_json();
            }
            std::cout << (rep.ok() ? "verify: pass\n" : "verify: FAIL\n");
            return rep.ok() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "hheat: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
