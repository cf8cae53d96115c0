#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "lapsim/harness.hpp"
#include "lapsim/json_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitAssumption = 2;

struct Pipeline {
    lapsim::SystemSpec spec;
    lapsim::SppSolution spp;
    lapsim::CrpReport crp;
    lapsim::PriorityAssignment pa;
    lapsim::EquilibriumPoint eq;
    lapsim::Assumption3Report a3;
};

Pipeline load_pipeline(const std::string& spec_path, int prefer_last_edge = -1) {
    Pipeline p;
    p.spec = lapsim::load_spec_file(spec_path);
    p.spp = lapsim::solve_spp(p.spec);
    p.crp = lapsim::check_crp(p.spec, p.spp);
    lapsim::PriorityOptions popts;
    popts.prefer_last_edge = prefer_last_edge;
    p.pa = lapsim::assign_priorities(p.spec, popts);
    p.eq = lapsim::compute_equilibrium(p.spec, p.pa);
    p.a3 = lapsim::check_assumption3(p.spec, p.pa, p.eq);
    return p;
}

int parse_edge_option(const lapsim::SystemSpec& spec, const std::string& text) {
    auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw lapsim::Error(lapsim::Errc::InvalidArgument,
                            "--prefer-last-edge expects i,j (1-based)");
    }
    int i = std::stoi(text.substr(0, comma)) - 1;
    int j = std::stoi(text.substr(comma + 1)) - 1;
    int e = spec.edge_index(i, j);
    if (e < 0) {
        throw lapsim::Error(lapsim::Errc::UnknownVertex, "no activity (" + text + ")");
    }
    return e;
}

void print_json(const nlohmann::json& doc) { std::cout << doc.dump(2) << '\n'; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LAP service-system simulator and diffusion toolkit"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string out_dir;
    std::uint64_t seed = 1;

    // plan
    auto* plan = app.add_subcommand("plan", "solve the static planning problem");
    double plan_tol = 1e-9;
    plan->add_option("--spec", spec_path, "system spec JSON")->required();
    plan->add_option("--tol", plan_tol, "basic-activity tolerance");

    // equilibrium
    auto* equil = app.add_subcommand("equilibrium", "LAP priorities and equilibrium point");
    std::string prefer_last;
    equil->add_option("--spec", spec_path, "system spec JSON")->required();
    equil->add_option("--prefer-last-edge", prefer_last,
                      "activity i,j to receive the lowest priority");

    // simulate
    auto* sim = app.add_subcommand("simulate", "stationary statistics at one scale r");
    int sim_r = 400;
    double sim_horizon = 2000.0, sim_burn_in = -1.0, sample_dt = 1.0;
    int sim_batches = 20;
    bool empty_start = false;
    std::string series_path;
    sim->add_option("--spec", spec_path, "system spec JSON")->required();
    sim->add_option("--r", sim_r, "scale parameter")->required();
    sim->add_option("--horizon", sim_horizon, "model-time horizon");
    sim->add_option("--burn-in", sim_burn_in, "discarded prefix (default: mixing heuristic)");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--batches", sim_batches, "batch count for standard errors");
    sim->add_flag("--empty-start", empty_start, "start from an empty system");
    sim->add_option("--series", series_path, "write a CSV time series of scaled deviations");
    sim->add_option("--sample-dt", sample_dt, "series sampling interval");

    // diffusion
    auto* diff = app.add_subcommand("diffusion", "limiting diffusion matrices");
    diff->add_option("--spec", spec_path, "system spec JSON")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "scaling sweep over r");
    std::vector<int> r_list{100, 400, 1600};
    double sweep_horizon = 2000.0, sweep_burn_in = -1.0, nu = 0.25;
    int sweep_batches = 20, replicas = 4, threads = 0;
    sweep->add_option("--spec", spec_path, "system spec JSON")->required();
    sweep->add_option("--r", r_list, "scale parameters");
    sweep->add_option("--horizon", sweep_horizon, "model-time horizon");
    sweep->add_option("--burn-in", sweep_burn_in, "discarded prefix (default: mixing heuristic)");
    sweep->add_option("--batches", sweep_batches, "batch count");
    sweep->add_option("--replicas", replicas, "replicas per r");
    sweep->add_option("--seed", seed, "base seed");
    sweep->add_option("--nu", nu, "exponent for the r^-nu queue/idleness metrics");
    sweep->add_option("--threads", threads, "worker threads (default: LAPSIM_THREADS or cores)");
    sweep->add_option("--out", out_dir, "directory for sweep.csv / sweep.json");

    // descent
    auto* descent = app.add_subcommand("descent", "drain from a displaced state");
    int descent_r = 400, descent_replicas = 50;
    double epsilon = 0.25, hit_c = 5.0, window_c = 5.0, displacement_scale = 1.0;
    descent->add_option("--spec", spec_path, "system spec JSON")->required();
    descent->add_option("--r", descent_r, "scale parameter");
    descent->add_option("--epsilon", epsilon, "displacement exponent offset, in (0, 1/2)");
    descent->add_option("--replicas", descent_replicas, "replica count");
    descent->add_option("--hit-c", hit_c, "hit threshold multiple of sqrt(r)");
    descent->add_option("--window-c", window_c, "deadline/window multiple of log r");
    descent->add_option("--displacement-scale", displacement_scale,
                        "multiplier on r^(1/2+epsilon)");
    descent->add_option("--seed", seed, "base seed");
    descent->add_option("--threads", threads, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan->parsed()) {
            auto spec = lapsim::load_spec_file(spec_path);
            auto spp = lapsim::solve_spp(spec);
            auto crp = lapsim::check_crp(spec, spp, plan_tol);
            print_json(lapsim::spp_json(spec, spp, crp));
            return crp.rho_subcritical ? kExitOk : kExitAssumption;
        }

        if (equil->parsed()) {
            auto spec = lapsim::load_spec_file(spec_path);
            int prefer = prefer_last.empty() ? -1 : parse_edge_option(spec, prefer_last);
            auto p = load_pipeline(spec_path, prefer);
            print_json(lapsim::equilibrium_json(p.spec, p.pa, p.eq, p.a3));
            return p.a3.pass ? kExitOk : kExitAssumption;
        }

        if (sim->parsed()) {
            auto p = load_pipeline(spec_path);
            if (!p.crp.rho_subcritical || !p.a3.pass) {
                std::cerr << "assumptions violated: rho=" << p.spp.rho
                          << " assumption3=" << (p.a3.pass ? "pass" : "fail") << '\n';
                return kExitAssumption;
            }
            auto model = lapsim::build_diffusion_model(p.spec, p.pa, p.eq);
            lapsim::SimOptions so;
            so.horizon = sim_horizon;
            so.burn_in = sim_burn_in >= 0.0 ? sim_burn_in : lapsim::default_burn_in(model);
            so.seed = seed;
            so.batches = sim_batches;
            so.empty_start = empty_start;

            std::ofstream series;
            lapsim::SeriesObserver obs;
            if (!series_path.empty()) {
                series.open(series_path);
                if (!series) {
                    throw lapsim::Error(lapsim::Errc::IoError, "cannot write " + series_path);
                }
                series << std::setprecision(17) << "t";
                for (const auto& e : p.spec.edges) {
                    series << ",psi_hat_" << (e.cls + 1) << "_" << (e.pool + 1);
                }
                for (int i = 0; i < p.spec.num_classes; ++i) series << ",q_hat_" << (i + 1);
                for (int j = 0; j < p.spec.num_pools; ++j) series << ",z_hat_" << (j + 1);
                series << '\n';
                obs.sample_dt = sample_dt;
                obs.on_sample = [&](double t, const lapsim::ScaledDeviation& dev) {
                    series << t;
                    for (double v : dev.psi_hat) series << ',' << v;
                    for (double v : dev.q_hat) series << ',' << v;
                    for (double v : dev.z_hat) series << ',' << v;
                    series << '\n';
                };
            }
            auto stats = lapsim::simulate_stationary(p.spec, p.pa, p.eq, sim_r, so,
                                                     series_path.empty() ? nullptr : &obs);
            print_json(lapsim::stationary_stats_json(p.spec, stats));
            return kExitOk;
        }

        if (diff->parsed()) {
            auto p = load_pipeline(spec_path);
            if (!p.crp.rho_subcritical || !p.a3.pass) {
                std::cerr << "assumptions violated: rho=" << p.spp.rho
                          << " assumption3=" << (p.a3.pass ? "pass" : "fail") << '\n';
                return kExitAssumption;
            }
            auto model = lapsim::build_diffusion_model(p.spec, p.pa, p.eq);
            auto stab = lapsim::check_local_stability(model.drift);
            print_json(lapsim::diffusion_json(p.spec, model, stab));
            return kExitOk;
        }

        if (sweep->parsed()) {
            auto spec = lapsim::load_spec_file(spec_path);
            lapsim::SweepOptions so;
            so.r_list = r_list;
            so.horizon = sweep_horizon;
            so.burn_in = sweep_burn_in;
            so.batches = sweep_batches;
            so.replicas = replicas;
            so.seed = seed;
            so.nu = nu;
            so.threads = threads;
            auto report = lapsim::run_sweep(spec, so);
            nlohmann::json doc = lapsim::sweep_report_json(report);
            if (!report.rows.empty()) {
                doc["convergence"] = lapsim::convergence_json(lapsim::convergence_metrics(report));
            }
            if (!out_dir.empty()) {
                auto files = lapsim::emit_report(report, out_dir);
                doc["files"] = files;
            }
            print_json(doc);
            return report.partial ? kExitError : kExitOk;
        }

        if (descent->parsed()) {
            auto spec = lapsim::load_spec_file(spec_path);
            lapsim::DescentOptions dopts;
            dopts.r = descent_r;
            dopts.epsilon = epsilon;
            dopts.replicas = descent_replicas;
            dopts.hit_c = hit_c;
            dopts.window_c = window_c;
            dopts.displacement_scale = displacement_scale;
            dopts.seed = seed;
            dopts.threads = threads;
            print_json(lapsim::descent_json(lapsim::descent_experiment(spec, dopts)));
            return kExitOk;
        }
    } catch (const lapsim::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == lapsim::Errc::AssumptionViolated ? kExitAssumption : kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
