#ifndef MUMBO_HARNESS_HPP
#define MUMBO_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mumbo/acquisition.hpp"
#include "mumbo/benchmarks.hpp"
#include "mumbo/config.hpp"
#include "mumbo/direct.hpp"
#include "mumbo/error.hpp"
#include "mumbo/gp.hpp"
#include "mumbo/gp_fit.hpp"
#include "mumbo/maxval.hpp"
#include "mumbo/trace.hpp"

namespace mumbo {

/// Believed optimum: the observed x with the highest posterior mean at the target fidelity.
/// Ties go to the earliest observation.
inline Vector incumbent(const GpModel& model, const std::vector<Vector>& observed_xs)
{
    if (observed_xs.empty()) throw Error(ErrorCode::InvalidArgument, "incumbent needs at least one observation");
    const double z0 = model.target_fidelity();
    std::size_t best = 0;
    double best_mu = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < observed_xs.size(); ++i) {
        const double mu = model.predict(observed_xs[i], z0).mean;
        if (mu > best_mu) {
            best_mu = mu;
            best = i;
        }
    }
    return observed_xs[best];
}

namespace detail {

// seed streams split off the run's root seed
enum SeedStream : std::uint64_t { kDesignStream = 1, kMaxValueStream = 2, kNoiseStream = 3, kFitStream = 4 };

inline std::vector<Vector> distinct_xs(const Dataset& data)
{
    std::vector<Vector> xs;
    for (const auto& r : data.records) {
        if (std::none_of(xs.begin(), xs.end(), [&](const Vector& v) { return v == r.x; })) xs.push_back(r.x);
    }
    return xs;
}

} // namespace detail

/// The BO loop: initial design, then refit / sample g* / maximize acquisition per unit cost /
/// evaluate until the spent cost reaches the budget. Module errors end the run early; the trace
/// then carries the iterations completed so far plus the error. If config.output is set the
/// trace is written there.
inline RunTrace run_bo(const RunConfig& config)
{
    config.validate();
    RunTrace trace;
    trace.config = config;
    const Benchmark bench = make_benchmark(config.benchmark);
    const SearchSpace& space = bench.space;
    const double sign = bench.sign();
    const double z0 = space.target_fidelity();
    const KernelVariant variant = config.kernel.value_or(bench.default_kernel);
    if (variant == KernelVariant::MaternIcm && !space.is_discrete()) {
        throw Error(ErrorCode::ConfigError, "the icm kernel needs a discrete fidelity space");
    }
    if (variant == KernelVariant::FabolasProduct && space.is_discrete()) {
        throw Error(ErrorCode::ConfigError, "the fabolas kernel needs a continuous fidelity space");
    }

    const std::uint64_t noise_seed = derive_seed(config.seed, detail::kNoiseStream);
    const std::uint64_t gstar_seed = derive_seed(config.seed, detail::kMaxValueStream);
    const std::uint64_t fit_seed = derive_seed(config.seed, detail::kFitStream);

    auto persist = [&] {
        if (!config.output.empty()) save_trace(trace, config.output);
    };

    try {
        const Dataset raw = initial_design(bench, derive_seed(config.seed, detail::kDesignStream), noise_seed);
        std::uint64_t evaluations = raw.size();
        Dataset data; // utility scale: larger is better
        for (const auto& r : raw.records) {
            const double c = space.cost(r.x, r.z);
            data.add({r.x, r.z, sign * r.y}, c);
            trace.design.push_back({r.x, r.z, r.y, c, data.spent});
        }

        FitOptions fit;
        fit.restarts = config.fit_restarts;
        fit.local.max_evaluations = config.fit_max_evaluations;
        fit.input_ranges = space.ranges();
        fit.fixed_noise = bench.noiseless();
        const double initial_noise = bench.noiseless() ? 1e-8 : 1e-3;
        GpModel model = fit_posterior(default_hyperparameters(variant, space, initial_noise), data, z0);

        double best_regret = std::numeric_limits<double>::infinity();
        Vector best_x;
        auto record_state = [&](IterationRecord& r) {
            const Vector inc = incumbent(model, detail::distinct_xs(data));
            const double regret = simple_regret(bench, inc);
            // report the best believed optimum seen so far, judged by its noiseless value
            if (regret < best_regret) {
                best_regret = regret;
                best_x = inc;
            }
            r.incumbent_x = best_x;
            r.incumbent_value = bench.evaluate(best_x, z0);
            r.regret = best_regret;
        };

        {
            IterationRecord init;
            init.spent = data.spent;
            record_state(init);
            trace.initial = init;
        }

        const CostModel cost = CostModel::known([&](const Vector& x, double z) { return space.cost(x, z); });
        int n = 0;
        while (data.spent < config.budget) {
            ++n;
            const auto t0 = std::chrono::steady_clock::now();
            const bool refit = (n - 1) % config.refit_interval == 0 && data.size() >= 2;
            if (refit) {
                fit.seed = derive_seed(fit_seed, static_cast<std::uint64_t>(n));
                model = fit_hyperparameters(model, fit);
            }

            Vector x;
            double z = z0;
            double value = 0.0;
            switch (config.acquisition) {
            case AcquisitionKind::Mumbo: {
                AcquisitionContext ctx(model,
                                       sample_max_values(model, space, config.samples, derive_seed(gstar_seed, static_cast<std::uint64_t>(n)),
                                                         config.grid_points_per_dim),
                                       cost, config.quadrature);
                const auto best = maximize_over_space([&](const Vector& xx, double zz) { return cost_weighted(ctx, xx, zz); }, space,
                                                      config.direct_config(space.dims(), !space.is_discrete()));
                x = best.x;
                z = best.z;
                value = best.value;
                break;
            }
            case AcquisitionKind::Mes: {
                AcquisitionContext ctx(model,
                                       sample_max_values(model, space, config.samples, derive_seed(gstar_seed, static_cast<std::uint64_t>(n)),
                                                         config.grid_points_per_dim),
                                       cost, config.quadrature);
                const auto r = direct_maximize([&](const Vector& xx) { return mes(ctx, xx); }, space.lower(), space.upper(),
                                               config.direct_config(space.dims(), false));
                x = r.x;
                value = r.value / space.cost(x, z0);
                break;
            }
            case AcquisitionKind::Ei: {
                double best_mu = -std::numeric_limits<double>::infinity();
                for (const auto& v : detail::distinct_xs(data)) best_mu = std::max(best_mu, model.predict(v, z0).mean);
                const auto r = direct_maximize([&](const Vector& xx) { return expected_improvement(model, xx, best_mu); },
                                               space.lower(), space.upper(), config.direct_config(space.dims(), false));
                x = r.x;
                value = r.value / space.cost(x, z0);
                break;
            }
            }
            const double overhead = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            if (!space.contains(x, z)) throw Error(ErrorCode::OutOfBounds, "acquisition maximizer left the search space");
            const Observation obs = eval_benchmark(bench, x, z, derive_seed(noise_seed, evaluations++));
            const double c = space.cost(x, z);
            data.add({x, z, sign * obs.y}, c);
            model = refit_posterior(model, data);

            IterationRecord r;
            r.n = n;
            r.x = x;
            r.z = z;
            r.y = obs.y;
            r.cost = c;
            r.spent = data.spent;
            r.acquisition_value = value;
            r.refit = refit;
            r.overhead_s = overhead;
            record_state(r);
            trace.iterations.push_back(std::move(r));
        }
    } catch (const Error& e) {
        trace.ok = false;
        trace.error_code = to_string(e.code());
        trace.error_message = e.what();
    }
    persist();
    return trace;
}

struct AggregateRow {
    std::string config_id;
    double checkpoint_cost = 0.0;
    double median_regret = 0.0;
    double mean_regret = 0.0;
    double stderr_regret = 0.0;
    double mean_overhead_s = 0.0;
};

struct BatchFailure {
    std::string config_id;
    std::uint64_t seed = 0;
    std::string message;
};

struct BatchReport {
    std::vector<std::string> trace_paths;
    std::string aggregate_path;
    std::vector<AggregateRow> rows;
    std::vector<BatchFailure> failures;
};

/// Regret at a spent-cost checkpoint: the state after the last iteration that started below the
/// checkpoint (so a checkpoint at the budget gives the terminal state), or the post-design state
/// if the design alone reaches it.
inline double regret_at(const RunTrace& t, double checkpoint)
{
    if (!t.initial) throw Error(ErrorCode::InvalidArgument, "trace has no post-design state");
    double r = t.initial->regret;
    double before = t.initial->spent;
    for (const auto& it : t.iterations) {
        if (before >= checkpoint) break;
        r = it.regret;
        before = it.spent;
    }
    return r;
}

inline double median(std::vector<double> v)
{
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline std::vector<AggregateRow> aggregate(const std::string& config_id, const std::vector<RunTrace>& runs,
                                           const std::vector<double>& checkpoints)
{
    std::vector<AggregateRow> rows;
    for (double cp : checkpoints) {
        std::vector<double> regrets;
        double overhead = 0.0;
        std::size_t count = 0;
        for (const auto& t : runs) {
            if (!t.initial) continue;
            regrets.push_back(regret_at(t, cp));
            double before = t.initial->spent;
            for (const auto& it : t.iterations) {
                if (before >= cp) break;
                overhead += it.overhead_s;
                before = it.spent;
                ++count;
            }
        }
        AggregateRow row;
        row.config_id = config_id;
        row.checkpoint_cost = cp;
        if (!regrets.empty()) {
            row.median_regret = median(regrets);
            double mean = 0.0;
            for (double r : regrets) mean += r;
            mean /= static_cast<double>(regrets.size());
            double ss = 0.0;
            for (double r : regrets) ss += (r - mean) * (r - mean);
            row.mean_regret = mean;
            row.stderr_regret = regrets.size() > 1 ? std::sqrt(ss / static_cast<double>(regrets.size() - 1)) /
                                                         std::sqrt(static_cast<double>(regrets.size()))
                                                   : 0.0;
        }
        row.mean_overhead_s = count ? overhead / static_cast<double>(count) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

inline std::string write_aggregate_csv(const std::vector<AggregateRow>& rows)
{
    std::ostringstream out;
    out.precision(17);
    out << "config_id,checkpoint_cost,median_regret,mean_regret,stderr_regret,mean_overhead_s\n";
    for (const auto& r : rows) {
        out << r.config_id << ',' << r.checkpoint_cost << ',' << r.median_regret << ',' << r.mean_regret << ','
            << r.stderr_regret << ',' << r.mean_overhead_s << '\n';
    }
    return out.str();
}

struct BatchOptions {
    std::string output_dir = ".";
    /// Checkpoints as fractions of each config's budget.
    std::vector<double> checkpoint_fractions{0.25, 0.5, 1.0};
    unsigned jobs = 1;
};

/// Every config under every seed. Runs execute on up to `jobs` threads, each writing its own
/// trace file; a failed run is reported and excluded from the aggregate.
inline BatchReport run_batch(const std::vector<RunConfig>& configs, const std::vector<std::uint64_t>& seeds,
                             const BatchOptions& opts = {})
{
    if (configs.empty()) throw Error(ErrorCode::ConfigError, "batch needs at least one config");
    if (seeds.empty()) throw Error(ErrorCode::ConfigError, "batch needs at least one seed");
    for (double f : opts.checkpoint_fractions) {
        if (!(f > 0.0)) throw Error(ErrorCode::ConfigError, "checkpoint fractions must be positive");
    }
    for (std::size_t i = 0; i < configs.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (configs[i].id == configs[j].id) throw Error(ErrorCode::ConfigError, "duplicate config id '" + configs[i].id + "'");
        }
    }
    std::filesystem::create_directories(opts.output_dir);

    struct Job {
        std::size_t config;
        RunConfig run;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        for (auto s : seeds) {
            RunConfig rc = configs[c];
            rc.seed = s;
            rc.output = (std::filesystem::path(opts.output_dir) / (rc.id + "_seed" + std::to_string(s) + ".jsonl")).string();
            jobs.push_back({c, rc});
        }
    }

    std::vector<RunTrace> traces(jobs.size());
    std::vector<std::string> crash(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                traces[i] = run_bo(jobs[i].run);
            } catch (const std::exception& e) {
                crash[i] = e.what();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    BatchReport report;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        std::vector<RunTrace> good;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (jobs[i].config != c) continue;
            if (!crash[i].empty()) {
                report.failures.push_back({configs[c].id, jobs[i].run.seed, crash[i]});
                continue;
            }
            report.trace_paths.push_back(jobs[i].run.output);
            if (!traces[i].ok) {
                report.failures.push_back({configs[c].id, jobs[i].run.seed, traces[i].error_message});
                continue;
            }
            good.push_back(std::move(traces[i]));
        }
        std::vector<double> cps;
        for (double f : opts.checkpoint_fractions) cps.push_back(f * configs[c].budget);
        for (auto& row : aggregate(configs[c].id, good, cps)) report.rows.push_back(row);
    }
    report.aggregate_path = (std::filesystem::path(opts.output_dir) / "aggregate.csv").string();
    std::ofstream out(report.aggregate_path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + report.aggregate_path + "'");
    out << write_aggregate_csv(report.rows);
    return report;
}

} // namespace mumbo

#endif
