#include "lapsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <thread>

#include "lapsim/json_io.hpp"
#include "lapsim/rng.hpp"

namespace lapsim {

double default_burn_in(const DiffusionModel& model) {
    StabilityReport stab = check_local_stability(model.drift);
    double slowest = std::abs(stab.max_real_part);
    if (!(slowest > 0.0)) return 100.0;
    return std::max(100.0, 20.0 / slowest);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LAPSIM_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

// Runs fn(0..count-1) on a small worker pool. Tasks own their output slots,
// so scheduling order cannot change the assembled result.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1)) fn(k);
        });
    }
    for (auto& th : pool) th.join();
}

double sample_se(const std::vector<double>& values) {
    const size_t n = values.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

double frobenius(const std::vector<std::vector<double>>& m) {
    double s = 0.0;
    for (const auto& row : m) {
        for (double v : row) s += v * v;
    }
    return std::sqrt(s);
}

double rel_frob_error(const std::vector<std::vector<double>>& got,
                      const std::vector<std::vector<double>>& want) {
    double diff = 0.0;
    for (size_t a = 0; a < got.size(); ++a) {
        for (size_t b = 0; b < got.size(); ++b) {
            double d = got[a][b] - want[a][b];
            diff += d * d;
        }
    }
    double ref = frobenius(want);
    return ref > 0.0 ? std::sqrt(diff) / ref : std::sqrt(diff);
}

std::vector<std::vector<double>> eigen_to_vec(const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols(), 0.0));
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
    }
    return out;
}

} // namespace

SweepReport run_sweep(const SystemSpec& spec, const SweepOptions& opts) {
    SppSolution spp = solve_spp(spec);
    if (!(spp.rho < 1.0)) {
        throw Error(Errc::AssumptionViolated, "system is not subcritical (rho >= 1)");
    }
    PriorityAssignment pa = assign_priorities(spec);
    EquilibriumPoint eq = compute_equilibrium(spec, pa);
    Assumption3Report a3 = check_assumption3(spec, pa, eq);
    if (!a3.pass) {
        throw Error(Errc::AssumptionViolated, "equilibrium does not use every activity");
    }
    DiffusionModel model = build_diffusion_model(spec, pa, eq);
    const double burn_in = opts.burn_in >= 0.0 ? opts.burn_in : default_burn_in(model);

    SweepReport report;
    report.opts = opts;
    report.opts.burn_in = burn_in;
    report.rho = spp.rho;
    report.sigma_psi = eigen_to_vec(model.sigma_psi);
    for (const Edge& e : spec.edges) report.edge_labels.push_back({e.cls + 1, e.pool + 1});
    for (int j = 0; j < spec.num_pools; ++j) {
        if (j != pa.last_pool) report.report_pools.push_back(j);
    }
    if (opts.r_list.empty()) return report;

    std::vector<int> r_sorted = opts.r_list;
    std::sort(r_sorted.begin(), r_sorted.end());

    const int replicas = std::max(1, opts.replicas);
    const int cells = static_cast<int>(r_sorted.size()) * replicas;
    std::vector<StationaryStats> results(cells);
    std::vector<std::string> failures(cells);
    std::vector<double> runtimes(cells, 0.0);

    parallel_for(cells, resolve_threads(opts.threads), [&](int cell) {
        const int ri = cell / replicas;
        const int rep = cell % replicas;
        SimOptions so;
        so.horizon = opts.horizon;
        so.burn_in = burn_in;
        so.batches = opts.batches;
        so.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(ri) * 1000003ULL + rep);
        auto t0 = std::chrono::steady_clock::now();
        try {
            results[cell] = simulate_stationary(spec, pa, eq, r_sorted[ri], so);
        } catch (const std::exception& e) {
            failures[cell] = e.what();
        }
        runtimes[cell] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    const int num_edges = spec.num_edges();
    for (size_t ri = 0; ri < r_sorted.size(); ++ri) {
        SweepRow row;
        row.r = r_sorted[ri];

        std::vector<const StationaryStats*> ok;
        for (int rep = 0; rep < replicas; ++rep) {
            const int cell = static_cast<int>(ri) * replicas + rep;
            if (!failures[cell].empty()) {
                report.partial = true;
                report.replica_errors.push_back("r=" + std::to_string(row.r) + " replica " +
                                                std::to_string(rep) + ": " + failures[cell]);
                continue;
            }
            ok.push_back(&results[cell]);
            row.seeds.push_back(results[cell].seed);
            row.events += results[cell].events;
            row.runtime_sec += runtimes[cell];
        }
        if (ok.empty()) continue;

        // Pooled covariance: duration-weighted moments over all batches of
        // all surviving replicas.
        double total = 0.0;
        std::vector<double> mean(num_edges, 0.0);
        std::vector<std::vector<double>> second(num_edges, std::vector<double>(num_edges, 0.0));
        std::vector<double> q_acc(spec.num_classes, 0.0), q_raw_acc(spec.num_classes, 0.0);
        std::vector<double> z_acc(spec.num_pools, 0.0), z_raw_acc(spec.num_pools, 0.0);
        for (const auto* st : ok) {
            for (const auto& b : st->batch) {
                total += b.duration;
                for (int e = 0; e < num_edges; ++e) {
                    mean[e] += b.mean_psi_hat[e] * b.duration;
                    for (int f = 0; f < num_edges; ++f) {
                        second[e][f] += b.second_psi[e][f] * b.duration;
                    }
                }
                for (int i = 0; i < spec.num_classes; ++i) {
                    q_acc[i] += b.mean_abs_q_hat[i] * b.duration;
                    q_raw_acc[i] += b.mean_abs_q_raw[i] * b.duration;
                }
                for (int j = 0; j < spec.num_pools; ++j) {
                    z_acc[j] += b.mean_abs_z_hat[j] * b.duration;
                    z_raw_acc[j] += b.mean_abs_z_raw[j] * b.duration;
                }
            }
        }
        const double inv = total > 0.0 ? 1.0 / total : 0.0;
        for (auto& v : mean) v *= inv;
        row.cov_psi.assign(num_edges, std::vector<double>(num_edges, 0.0));
        for (int e = 0; e < num_edges; ++e) {
            for (int f = 0; f < num_edges; ++f) {
                row.cov_psi[e][f] = second[e][f] * inv - mean[e] * mean[f];
            }
        }
        row.rel_frob_err = rel_frob_error(row.cov_psi, report.sigma_psi);

        std::vector<double> per_rep;
        for (const auto* st : ok) per_rep.push_back(rel_frob_error(st->cov_psi, report.sigma_psi));
        row.se_rel_frob_err = sample_se(per_rep);

        row.var_psi.resize(num_edges);
        row.se_var_psi.assign(num_edges, 0.0);
        for (int e = 0; e < num_edges; ++e) {
            row.var_psi[e] = row.cov_psi[e][e];
            per_rep.clear();
            for (const auto* st : ok) per_rep.push_back(st->cov_psi[e][e]);
            row.se_var_psi[e] = sample_se(per_rep);
        }

        const double nu_scale = std::pow(static_cast<double>(row.r), -opts.nu);
        for (int i = 0; i < spec.num_classes; ++i) {
            row.mean_abs_q_hat.push_back(q_acc[i] * inv);
            row.mean_q_nu.push_back(q_raw_acc[i] * inv * nu_scale);
            per_rep.clear();
            for (const auto* st : ok) per_rep.push_back(st->mean_abs_q_hat[i]);
            row.se_mean_abs_q_hat.push_back(sample_se(per_rep));
            per_rep.clear();
            for (const auto* st : ok) per_rep.push_back(st->mean_abs_q_raw[i] * nu_scale);
            row.se_mean_q_nu.push_back(sample_se(per_rep));
        }
        for (int j : report.report_pools) {
            row.mean_abs_z_hat.push_back(z_acc[j] * inv);
            row.mean_z_nu.push_back(z_raw_acc[j] * inv * nu_scale);
            per_rep.clear();
            for (const auto* st : ok) per_rep.push_back(st->mean_abs_z_hat[j]);
            row.se_mean_abs_z_hat.push_back(sample_se(per_rep));
            per_rep.clear();
            for (const auto* st : ok) per_rep.push_back(st->mean_abs_z_raw[j] * nu_scale);
            row.se_mean_z_nu.push_back(sample_se(per_rep));
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

MetricTrend make_trend(std::string name, std::vector<double> values, std::vector<double> ses) {
    MetricTrend t;
    t.metric = std::move(name);
    t.values = std::move(values);
    t.std_errors = std::move(ses);
    t.final_value = t.values.empty() ? 0.0 : t.values.back();
    if (t.values.size() < 2) {
        t.verdict = "single-point";
        return t;
    }
    bool significant_increase = false, significant_decrease = false;
    for (size_t k = 0; k + 1 < t.values.size(); ++k) {
        double delta = t.values[k + 1] - t.values[k];
        double sig = 2.0 * std::sqrt(t.std_errors[k] * t.std_errors[k] +
                                     t.std_errors[k + 1] * t.std_errors[k + 1]);
        if (delta > sig) significant_increase = true;
        if (delta < -sig) significant_decrease = true;
    }
    if (significant_increase) {
        t.verdict = "non-monotone";
    } else if (significant_decrease || t.final_value <= 1e-12) {
        t.verdict = "converging";
    } else {
        t.verdict = "inconclusive";
    }
    return t;
}

} // namespace

ConvergenceSummary convergence_metrics(const SweepReport& report) {
    if (report.rows.empty()) throw Error(Errc::EmptyReport, "sweep report has no rows");

    ConvergenceSummary summary;
    auto collect = [&](const std::string& name, auto getter, auto se_getter) {
        std::vector<double> values, ses;
        for (const auto& row : report.rows) {
            values.push_back(getter(row));
            ses.push_back(se_getter(row));
        }
        summary.trends.push_back(make_trend(name, std::move(values), std::move(ses)));
    };

    collect(
        "rel_frob_err", [](const SweepRow& r) { return r.rel_frob_err; },
        [](const SweepRow& r) { return r.se_rel_frob_err; });
    const size_t num_cls = report.rows.front().mean_abs_q_hat.size();
    for (size_t i = 0; i < num_cls; ++i) {
        collect(
            "mean_abs_q_hat_" + std::to_string(i + 1),
            [i](const SweepRow& r) { return r.mean_abs_q_hat[i]; },
            [i](const SweepRow& r) { return r.se_mean_abs_q_hat[i]; });
        collect(
            "mean_q_nu_" + std::to_string(i + 1),
            [i](const SweepRow& r) { return r.mean_q_nu[i]; },
            [i](const SweepRow& r) { return r.se_mean_q_nu[i]; });
    }
    for (size_t k = 0; k < report.report_pools.size(); ++k) {
        const std::string j = std::to_string(report.report_pools[k] + 1);
        collect(
            "mean_abs_z_hat_" + j, [k](const SweepRow& r) { return r.mean_abs_z_hat[k]; },
            [k](const SweepRow& r) { return r.se_mean_abs_z_hat[k]; });
    }
    for (const auto& t : summary.trends) {
        if (t.verdict == "non-monotone") summary.any_non_monotone = true;
    }
    return summary;
}

DescentReport descent_experiment(const SystemSpec& spec, const DescentOptions& opts) {
    if (!(opts.epsilon > 0.0 && opts.epsilon < 0.5)) {
        throw Error(Errc::InvalidArgument, "epsilon must lie in (0, 1/2)");
    }
    SppSolution spp = solve_spp(spec);
    if (!(spp.rho < 1.0)) {
        throw Error(Errc::AssumptionViolated, "system is not subcritical (rho >= 1)");
    }
    PriorityAssignment pa = assign_priorities(spec);
    EquilibriumPoint eq = compute_equilibrium(spec, pa);
    Assumption3Report a3 = check_assumption3(spec, pa, eq);
    if (!a3.pass) {
        throw Error(Errc::AssumptionViolated, "equilibrium does not use every activity");
    }

    const double r = static_cast<double>(opts.r);
    const double log_r = std::log(r);
    DescentReport rep;
    rep.r = opts.r;
    rep.displacement = static_cast<long long>(
        std::ceil(opts.displacement_scale * std::pow(r, 0.5 + opts.epsilon)));
    rep.hit_threshold = opts.hit_c * std::sqrt(r);
    rep.stay_threshold = std::pow(r, 0.5 + opts.epsilon);
    rep.window = opts.window_c * log_r;
    rep.replicas = opts.replicas;
    rep.hit_times.assign(opts.replicas, std::numeric_limits<double>::quiet_NaN());

    const int low_cls = pa.lowest_class();
    std::vector<char> stayed_flags(opts.replicas, 0);

    parallel_for(opts.replicas, resolve_threads(opts.threads), [&](int rep_idx) {
        SimState st = initial_state(spec, eq, opts.r, /*empty_start=*/false);
        Rng rng(derive_seed(opts.seed, rep_idx));
        // Displace: inject extra lowest-priority customers one at a time,
        // LAP-consistently (take idle servers first, then queue).
        for (long long k = 0; k < rep.displacement; ++k) {
            int j = route_arrival(st, spec, low_cls, pa);
            if (j >= 0) {
                ++st.busy[spec.edge_index(low_cls, j)];
                ++st.pool_busy[j];
            } else {
                ++st.queue[low_cls];
            }
        }

        double hit_time = std::numeric_limits<double>::quiet_NaN();
        while (st.clock <= rep.window) {
            if (deviation_norm(st, spec, eq, opts.r) <= rep.hit_threshold) {
                hit_time = st.clock;
                break;
            }
            step(st, spec, pa, rng);
        }
        rep.hit_times[rep_idx] = hit_time;
        if (std::isnan(hit_time)) return;

        bool stayed = true;
        const double window_end = hit_time + rep.window;
        while (st.clock < window_end) {
            if (deviation_norm(st, spec, eq, opts.r) > rep.stay_threshold) {
                stayed = false;
                break;
            }
            step(st, spec, pa, rng);
        }
        stayed_flags[rep_idx] = stayed ? 1 : 0;
    });

    std::vector<double> hits;
    for (int k = 0; k < opts.replicas; ++k) {
        if (!std::isnan(rep.hit_times[k])) {
            hits.push_back(rep.hit_times[k]);
            if (stayed_flags[k]) ++rep.stayed;
        }
    }
    rep.hits = static_cast<int>(hits.size());
    rep.hit_frequency = opts.replicas > 0 ? static_cast<double>(rep.hits) / opts.replicas : 0.0;
    rep.stay_frequency = rep.hits > 0 ? static_cast<double>(rep.stayed) / rep.hits : 0.0;
    if (!hits.empty()) {
        double mean = 0.0;
        for (double h : hits) mean += h;
        mean /= static_cast<double>(hits.size());
        rep.mean_hit_time = mean;
        rep.se_hit_time = sample_se(hits);
        rep.mean_hit_time_over_log_r = mean / log_r;
        rep.se_hit_time_over_log_r = rep.se_hit_time / log_r;
    }
    return rep;
}

std::vector<std::string> emit_report(const SweepReport& report, const std::string& dir,
                                     ReportFormat format) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoError, dir + ": " + ec.message());

    std::vector<std::string> written;
    auto emit_csv = [&]() {
        const fs::path path = fs::path(dir) / "sweep.csv";
        std::ofstream out(path);
        if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
        out << std::setprecision(17);
        out << "r,metric,value,std_error\n";
        for (const auto& row : report.rows) {
            auto line = [&](const std::string& metric, double value, double se) {
                out << row.r << ',' << metric << ',' << value << ',' << se << '\n';
            };
            line("rel_frob_err", row.rel_frob_err, row.se_rel_frob_err);
            for (size_t e = 0; e < row.var_psi.size(); ++e) {
                const auto& lbl = report.edge_labels[e];
                line("var_psi_" + std::to_string(lbl.first) + "_" + std::to_string(lbl.second),
                     row.var_psi[e], row.se_var_psi[e]);
            }
            for (size_t i = 0; i < row.mean_abs_q_hat.size(); ++i) {
                line("mean_abs_q_hat_" + std::to_string(i + 1), row.mean_abs_q_hat[i],
                     row.se_mean_abs_q_hat[i]);
                line("mean_q_nu_" + std::to_string(i + 1), row.mean_q_nu[i],
                     row.se_mean_q_nu[i]);
            }
            for (size_t k = 0; k < row.mean_abs_z_hat.size(); ++k) {
                const std::string j = std::to_string(report.report_pools[k] + 1);
                line("mean_abs_z_hat_" + j, row.mean_abs_z_hat[k], row.se_mean_abs_z_hat[k]);
                line("mean_z_nu_" + j, row.mean_z_nu[k], row.se_mean_z_nu[k]);
            }
        }
        if (!out.good()) throw Error(Errc::IoError, "write failed for " + path.string());
        written.push_back(path.string());
    };
    auto emit_json = [&]() {
        const fs::path path = fs::path(dir) / "sweep.json";
        std::ofstream out(path);
        if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
        out << sweep_report_json(report).dump(2) << '\n';
        if (!out.good()) throw Error(Errc::IoError, "write failed for " + path.string());
        written.push_back(path.string());
    };

    if (format == ReportFormat::Csv || format == ReportFormat::Both) emit_csv();
    if (format == ReportFormat::Json || format == ReportFormat::Both) emit_json();
    return written;
}

} // namespace lapsim
