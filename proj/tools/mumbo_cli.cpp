#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mumbo/mumbo.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw mumbo::Error(mumbo::ErrorCode::ConfigError, "not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

int cmd_run(const std::string& config_path, const std::string& output)
{
    mumbo::RunConfig cfg = mumbo::load_config(config_path);
    if (!output.empty()) cfg.output = output;
    if (cfg.output.empty()) cfg.output = cfg.id + ".jsonl";
    const auto trace = mumbo::run_bo(cfg);
    const auto* last = trace.last_state();
    std::cout << "trace: " << cfg.output << "\n"
              << "iterations: " << trace.iterations.size() << "\n"
              << "spent: " << trace.spent() << "\n";
    if (last) std::cout << "regret: " << last->regret << "\n";
    if (!trace.ok) {
        std::cerr << "run failed (" << trace.error_code << "): " << trace.error_message << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_batch(const std::vector<std::string>& config_paths, const std::string& seeds_arg, int repetitions,
              std::uint64_t first_seed, const std::string& out_dir, const std::string& checkpoints, unsigned jobs)
{
    std::vector<mumbo::RunConfig> configs;
    for (const auto& p : config_paths) configs.push_back(mumbo::load_config(p));
    std::vector<std::uint64_t> seeds;
    if (!seeds_arg.empty()) {
        for (double s : parse_list(seeds_arg)) {
            if (s < 0 || s != static_cast<double>(static_cast<std::uint64_t>(s))) {
                throw mumbo::Error(mumbo::ErrorCode::ConfigError, "seeds must be non-negative integers");
            }
            seeds.push_back(static_cast<std::uint64_t>(s));
        }
    } else {
        if (repetitions < 1) throw mumbo::Error(mumbo::ErrorCode::ConfigError, "repetitions must be at least 1");
        for (int r = 0; r < repetitions; ++r) seeds.push_back(first_seed + static_cast<std::uint64_t>(r));
    }
    mumbo::BatchOptions opts;
    opts.output_dir = out_dir;
    opts.jobs = jobs;
    if (!checkpoints.empty()) opts.checkpoint_fractions = parse_list(checkpoints);
    const auto report = mumbo::run_batch(configs, seeds, opts);
    std::cout << "traces: " << report.trace_paths.size() << "\n"
              << "aggregate: " << report.aggregate_path << "\n";
    for (const auto& f : report.failures) {
        std::cerr << "run failed: " << f.config_id << " seed " << f.seed << ": " << f.message << "\n";
    }
    return report.failures.empty() ? kExitOk : kExitRuntime;
}

int cmd_bench_eval(const std::string& name, const std::string& x_arg, double z, std::uint64_t seed, bool noisy)
{
    const auto b = mumbo::make_benchmark(name);
    const auto xs = parse_list(x_arg);
    mumbo::Vector x(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) x(static_cast<Eigen::Index>(i)) = xs[i];
    if (static_cast<std::size_t>(x.size()) != b.space.dims()) {
        throw mumbo::Error(mumbo::ErrorCode::ConfigError, name + " expects " + std::to_string(b.space.dims()) + " coordinates");
    }
    if (!b.space.contains(x, z)) throw mumbo::Error(mumbo::ErrorCode::ConfigError, "point outside the benchmark space");
    nlohmann::json out;
    out["benchmark"] = name;
    out["x"] = xs;
    out["z"] = z;
    out["value"] = b.evaluate(x, z);
    out["cost"] = b.space.cost(x, z);
    if (noisy) out["observed"] = mumbo::eval_benchmark(b, x, z, seed).y;
    if (b.optimum_value && z == b.space.target_fidelity()) out["regret"] = mumbo::simple_regret(b, x);
    std::cout << out.dump() << "\n";
    return kExitOk;
}

int cmd_list()
{
    for (const auto& n : mumbo::benchmark_names()) {
        const auto b = mumbo::make_benchmark(n);
        std::cout << n << "\t" << b.space.dims() << "d\t" << b.description << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-fidelity Bayesian optimization with the MUMBO acquisition"};
    app.require_subcommand(1);

    std::string config_path, output;
    auto* run = app.add_subcommand("run", "run one BO experiment from a config file and write its trace");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("-o,--output", output, "trace path (overrides the config)");

    std::vector<std::string> batch_configs;
    std::string seeds, out_dir = "batch_out", checkpoints;
    int repetitions = 20;
    std::uint64_t first_seed = 0;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* batch = app.add_subcommand("batch", "run configs over several seeds and aggregate the regret");
    batch->add_option("configs", batch_configs, "config files")->required();
    batch->add_option("--seeds", seeds, "comma separated seeds");
    batch->add_option("--repetitions", repetitions, "number of seeds when --seeds is absent");
    batch->add_option("--first-seed", first_seed, "first seed when --seeds is absent");
    batch->add_option("--out", out_dir, "output directory");
    batch->add_option("--checkpoints", checkpoints, "budget fractions, e.g. 0.25,0.5,1");
    batch->add_option("--jobs", jobs, "parallel runs");

    std::string bench_name, x_arg;
    double z = 0.0;
    std::uint64_t seed = 0;
    bool noisy = false;
    auto* eval = app.add_subcommand("bench-eval", "evaluate a benchmark at one point");
    eval->add_option("benchmark", bench_name, "benchmark name")->required();
    eval->add_option("--x", x_arg, "comma separated coordinates")->required();
    eval->add_option("--z", z, "fidelity");
    eval->add_option("--seed", seed, "noise seed");
    eval->add_flag("--noisy", noisy, "also report a noisy observation");

    auto* list = app.add_subcommand("list-benchmarks", "list the available benchmarks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config_path, output);
        if (*batch) return cmd_batch(batch_configs, seeds, repetitions, first_seed, out_dir, checkpoints, jobs);
        if (*eval) return cmd_bench_eval(bench_name, x_arg, z, seed, noisy);
        if (*list) return cmd_list();
    } catch (const mumbo::Error& e) {
        std::cerr << "error (" << mumbo::to_string(e.code()) << "): " << e.what() << "\n";
        return e.code() == mumbo::ErrorCode::ConfigError ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
