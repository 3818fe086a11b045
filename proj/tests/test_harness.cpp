#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mumbo/mumbo.hpp"

using namespace mumbo;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("mumbo_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

RunConfig light(const std::string& benchmark, AcquisitionKind acq, double budget, std::uint64_t seed)
{
    RunConfig c;
    c.id = benchmark + "-" + to_string(acq);
    c.benchmark = benchmark;
    c.acquisition = acq;
    c.budget = budget;
    c.seed = seed;
    c.grid_points_per_dim = 300;
    c.fit_restarts = 2;
    c.fit_max_evaluations = 150;
    return c;
}

void check_invariants(const RunTrace& t)
{
    const Benchmark b = make_benchmark(t.config.benchmark);
    double spent = 0.0, max_cost = 0.0;
    for (const auto& d : t.design) {
        spent += d.cost;
        max_cost = std::max(max_cost, d.cost);
        EXPECT_DOUBLE_EQ(d.spent, spent);
    }
    double prev_spent = spent;
    double prev_regret = t.initial ? t.initial->regret : 1e300;
    for (const auto& it : t.iterations) {
        EXPECT_TRUE(b.space.contains(it.x, it.z));
        EXPECT_GT(it.spent, prev_spent);
        EXPECT_EQ(it.cost, b.space.cost(it.x, it.z));
        spent += it.cost;
        max_cost = std::max(max_cost, it.cost);
        EXPECT_EQ(it.spent, spent);
        EXPECT_LE(it.regret, prev_regret);
        EXPECT_GE(it.regret, 0.0);
        EXPECT_EQ(simple_regret(b, it.incumbent_x), it.regret);
        prev_spent = it.spent;
        prev_regret = it.regret;
    }
    if (!t.iterations.empty()) {
        EXPECT_LE(t.spent(), t.config.budget + max_cost);
        EXPECT_LT(t.iterations.back().spent - t.iterations.back().cost, t.config.budget);
    }
}

int run_cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string(MUMBO_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Config, ParsesAndRoundTrips)
{
    const auto c = parse_config(R"({
        // comments are allowed
        "id": "x", "benchmark": "currin", "acquisition": "mes", "samples": 7, "budget": 150, "seed": 3,
        "refit_interval": 2, "kernel": "icm", "quadrature": {"points": 51, "half_width_sd": 5},
        "direct": {"max_evaluations": 90, "epsilon": 0.001}, "fit": {"restarts": 3}, "grid_points_per_dim": 500,
        "output": "out.jsonl"})");
    EXPECT_EQ(c.id, "x");
    EXPECT_EQ(c.acquisition, AcquisitionKind::Mes);
    EXPECT_EQ(c.samples, 7u);
    EXPECT_EQ(c.budget, 150.0);
    EXPECT_EQ(c.refit_interval, 2);
    EXPECT_EQ(c.kernel, KernelVariant::MaternIcm);
    EXPECT_EQ(c.quadrature.points, 51);
    EXPECT_EQ(c.direct_max_evaluations, 90);
    EXPECT_EQ(c.direct_epsilon, 0.001);
    EXPECT_EQ(c.fit_restarts, 3);
    EXPECT_EQ(config_from_json(config_to_json(c)), c);
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
    auto code = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code(R"({"benchmark": "currin", "budget": 10, "colour": 1})"), ErrorCode::ConfigError);
    EXPECT_EQ(code(R"({"benchmark": "currin", "budget": 10, "direct": {"evals": 1}})"), ErrorCode::ConfigError);
    EXPECT_EQ(code(R"({"benchmark": "currin"})"), ErrorCode::ConfigError);
    EXPECT_EQ(code(R"({"benchmark": "currin", "budget": -1})"), ErrorCode::ConfigError);
    EXPECT_EQ(code(R"({"benchmark": "currin", "budget": 10, "samples": 0})"), ErrorCode::ConfigError);
    EXPECT_EQ(code(R"({"benchmark": "currin", "budget": 10, "acquisition": "ucb"})"), ErrorCode::ConfigError);
    EXPECT_EQ(code(R"({"benchmark": "currin", "budget": "ten"})"), ErrorCode::ConfigError);
    EXPECT_EQ(code("not json"), ErrorCode::ConfigError);
}

TEST(Incumbent, Rules)
{
    Dataset one;
    one.add({Vector::Constant(1, 0.4), 0.0, 2.0}, 1.0);
    const GpModel m1 = fit_posterior({KernelSpec::single_task(Vector::Constant(1, 0.3), 1.0), 1e-8}, one, 0.0);
    EXPECT_EQ(incumbent(m1, {Vector::Constant(1, 0.4)}), Vector::Constant(1, 0.4));
    EXPECT_THROW(incumbent(m1, {}), Error);

    // noiseless single fidelity: the interpolating mean picks the best y
    Dataset d;
    std::vector<Vector> xs;
    const double ys[] = {1.0, 3.0, 2.5, -1.0};
    for (int i = 0; i < 4; ++i) {
        xs.push_back(Vector::Constant(1, 0.1 + 0.25 * i));
        d.add({xs.back(), 0.0, ys[i]}, 1.0);
    }
    const GpModel m2 = fit_posterior({KernelSpec::single_task(Vector::Constant(1, 0.2), 1.0), 1e-8}, d, 0.0);
    EXPECT_EQ(incumbent(m2, xs), xs[1]);

    // only low-fidelity data, anti-correlated with the target: raw y points the wrong way
    Dataset low;
    low.add({Vector::Constant(1, 0.2), 1.0, 5.0}, 1.0);
    low.add({Vector::Constant(1, 0.8), 1.0, 1.0}, 1.0);
    Matrix w(2, 1);
    w << 1.0, -0.9;
    const GpModel m3 = fit_posterior({KernelSpec::matern_icm(Vector::Constant(1, 0.2), w, Vector::Constant(2, 0.05)), 1e-6}, low, 0.0);
    const std::vector<Vector> lx = {Vector::Constant(1, 0.2), Vector::Constant(1, 0.8)};
    EXPECT_GT(m3.predict(lx[1], 0.0).mean, m3.predict(lx[0], 0.0).mean);
    EXPECT_EQ(incumbent(m3, lx), lx[1]);
}

TEST(RunBo, BudgetBelowDesignCostRunsNoIterations)
{
    const auto t = run_bo(light("currin", AcquisitionKind::Mumbo, 10.0, 1));
    EXPECT_TRUE(t.ok);
    EXPECT_EQ(t.design.size(), 8u);
    EXPECT_TRUE(t.iterations.empty());
    ASSERT_TRUE(t.initial.has_value());
    EXPECT_EQ(t.spent(), 44.0);
}

TEST(RunBo, SingleFidelityMesStaysAtTarget)
{
    const auto t = run_bo(light("forrester-single", AcquisitionKind::Mes, 100.0, 2));
    ASSERT_TRUE(t.ok) << t.error_message;
    EXPECT_EQ(t.iterations.size(), 8u);
    for (const auto& it : t.iterations) EXPECT_EQ(it.z, 0.0);
    check_invariants(t);
}

TEST(RunBo, MumboCurrinInvariantsAndDeterminism)
{
    RunConfig c = light("currin", AcquisitionKind::Mumbo, 100.0, 5);
    const auto a = run_bo(c);
    const auto b = run_bo(c);
    ASSERT_TRUE(a.ok) << a.error_message;
    EXPECT_FALSE(a.iterations.empty());
    check_invariants(a);
    EXPECT_EQ(write_trace(a), write_trace(b));
}

TEST(RunBo, DefaultSettingsAreDeterministic)
{
    RunConfig c;
    c.benchmark = "currin";
    c.budget = 100.0;
    c.seed = 11;
    EXPECT_EQ(write_trace(run_bo(c)), write_trace(run_bo(c)));
}

TEST(RunBo, OtherAcquisitionsAndBenchmarks)
{
    for (auto [name, acq, budget] : {std::tuple{"forrester", AcquisitionKind::Ei, 60.0}, std::tuple{"currin", AcquisitionKind::Mes, 100.0},
                                     std::tuple{"currin-continuous", AcquisitionKind::Mumbo, 12.0},
                                     std::tuple{"rosenbrock", AcquisitionKind::Mumbo, 4020.0},
                                     std::tuple{"hartmann3", AcquisitionKind::Mumbo, 700.0}}) {
        const auto t = run_bo(light(name, acq, budget, 3));
        ASSERT_TRUE(t.ok) << name << ": " << t.error_message;
        EXPECT_FALSE(t.iterations.empty()) << name;
        check_invariants(t);
        if (acq != AcquisitionKind::Mumbo) {
            for (const auto& it : t.iterations) EXPECT_EQ(it.z, make_benchmark(name).space.target_fidelity());
        }
    }
}

TEST(RunBo, RefitFollowsInterval)
{
    RunConfig c = light("forrester", AcquisitionKind::Mumbo, 60.0, 4);
    c.refit_interval = 3;
    const auto t = run_bo(c);
    ASSERT_TRUE(t.ok) << t.error_message;
    ASSERT_GE(t.iterations.size(), 4u);
    for (const auto& it : t.iterations) EXPECT_EQ(it.refit, (it.n - 1) % 3 == 0) << it.n;
}

TEST(RunBo, ModuleErrorKeepsPartialTrace)
{
    const fs::path dir = scratch_dir("partial");
    RunConfig c = light("currin", AcquisitionKind::Mumbo, 100.0, 1);
    c.direct_max_evaluations = 3; // below 2d + 1
    c.output = (dir / "t.jsonl").string();
    const auto t = run_bo(c);
    EXPECT_FALSE(t.ok);
    EXPECT_EQ(t.error_code, to_string(ErrorCode::InvalidArgument));
    EXPECT_EQ(t.design.size(), 8u);
    const auto back = load_trace(c.output);
    EXPECT_FALSE(back.ok);
    EXPECT_EQ(back.design.size(), 8u);
    EXPECT_TRUE(slurp(c.output).find("\"error\"") != std::string::npos);
    fs::remove_all(dir);
}

TEST(Trace, RoundTripsThroughFiles)
{
    const fs::path dir = scratch_dir("trace");
    RunConfig c = light("forrester", AcquisitionKind::Mumbo, 50.0, 8);
    c.output = (dir / "t.jsonl").string();
    const auto t = run_bo(c);
    ASSERT_TRUE(t.ok);
    EXPECT_EQ(read_trace(write_trace(t), write_timing(t)), t);
    EXPECT_EQ(load_trace(c.output), t);
    // one keyed record per line
    std::istringstream lines(slurp(c.output));
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line)) {
        EXPECT_EQ(nlohmann::json::parse(line).count("record"), 1u) << line;
        ++count;
    }
    EXPECT_EQ(count, 1 + t.design.size() + 1 + t.iterations.size() + 1);
    EXPECT_THROW(read_trace("{\"record\":\"iteration\"}\n"), Error);
    fs::remove_all(dir);
}

TEST(Aggregate, MedianAndCheckpoints)
{
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
    RunTrace t;
    IterationRecord init;
    init.regret = 5.0;
    init.spent = 44.0;
    t.initial = init;
    for (int i = 1; i <= 3; ++i) {
        IterationRecord r;
        r.n = i;
        r.spent = 44.0 + 10.0 * i;
        r.regret = 5.0 - i;
        r.overhead_s = 0.5 * i;
        t.iterations.push_back(r);
    }
    EXPECT_EQ(regret_at(t, 40.0), 5.0);
    EXPECT_EQ(regret_at(t, 64.0), 3.0);
    EXPECT_EQ(regret_at(t, 66.0), 2.0);
    EXPECT_EQ(regret_at(t, 1000.0), 2.0);
    const auto rows = aggregate("a", {t, t}, {64.0, 100.0});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].median_regret, 3.0);
    EXPECT_EQ(rows[0].stderr_regret, 0.0);
    EXPECT_DOUBLE_EQ(rows[0].mean_overhead_s, 0.75);
    const auto csv = write_aggregate_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "config_id,checkpoint_cost,median_regret,mean_regret,stderr_regret,mean_overhead_s");
}

TEST(Batch, ThreeSeedsGiveThreeTracesAndOneAggregate)
{
    const fs::path dir = scratch_dir("batch");
    BatchOptions opts;
    opts.output_dir = dir.string();
    opts.jobs = 2;
    const RunConfig c = light("forrester", AcquisitionKind::Mumbo, 50.0, 0);
    const auto report = run_batch({c}, {1, 2, 3}, opts);
    EXPECT_TRUE(report.failures.empty());
    ASSERT_EQ(report.trace_paths.size(), 3u);
    std::size_t jsonl = 0, csv = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        jsonl += e.path().extension() == ".jsonl";
        csv += e.path().extension() == ".csv";
    }
    EXPECT_EQ(jsonl, 3u);
    EXPECT_EQ(csv, 1u);
    ASSERT_EQ(report.rows.size(), 3u);
    std::vector<double> terminal;
    for (const auto& p : report.trace_paths) terminal.push_back(load_trace(p).last_state()->regret);
    EXPECT_EQ(report.rows[2].checkpoint_cost, 50.0);
    EXPECT_EQ(report.rows[2].median_regret, median(terminal));
    std::istringstream lines(slurp(report.aggregate_path));
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) ++n;
    EXPECT_EQ(n, 4);
    // a parallel batch writes the same traces as sequential runs
    RunConfig seq = c;
    seq.seed = 2;
    seq.output = report.trace_paths[1];
    const std::string from_batch = slurp(seq.output);
    EXPECT_EQ(from_batch, write_trace(run_bo(seq)));
    fs::remove_all(dir);
}

TEST(Batch, FailedRunIsReportedAndBatchContinues)
{
    const fs::path dir = scratch_dir("batchfail");
    BatchOptions opts;
    opts.output_dir = dir.string();
    RunConfig good = light("forrester", AcquisitionKind::Mes, 40.0, 0);
    RunConfig bad = light("currin", AcquisitionKind::Mumbo, 60.0, 0);
    bad.id = "bad";
    bad.direct_max_evaluations = 3;
    const auto report = run_batch({good, bad}, {1, 2}, opts);
    EXPECT_EQ(report.failures.size(), 2u);
    EXPECT_EQ(report.rows.size(), 6u);
    EXPECT_EQ(report.trace_paths.size(), 4u);
    EXPECT_THROW(run_batch({good, good}, {1}, opts), Error);
    fs::remove_all(dir);
}

TEST(Cli, ExitCodesAndOutputs)
{
    const fs::path dir = scratch_dir("cli");
    const fs::path log = dir / "log.txt";
    EXPECT_EQ(run_cli("list-benchmarks", log), 0);
    EXPECT_NE(slurp(log).find("hartmann6"), std::string::npos);

    EXPECT_EQ(run_cli("bench-eval forrester --x 0 --z 0", log), 0);
    EXPECT_NEAR(nlohmann::json::parse(slurp(log)).at("value").get<double>(), 3.027209981231713, 1e-12);
    EXPECT_EQ(run_cli("bench-eval forrester --x 2 --z 0", log), 2);
    EXPECT_EQ(run_cli("bench-eval nope --x 0", log), 2);
    EXPECT_EQ(run_cli("frobnicate", log), 2);

    spit(dir / "unknown.json", R"({"benchmark": "currin", "budget": 10, "typo": 1})");
    EXPECT_EQ(run_cli("run " + (dir / "unknown.json").string(), log), 2);
    EXPECT_EQ(run_cli("run " + (dir / "missing.json").string(), log), 2);

    spit(dir / "small.json", R"({"id": "s", "benchmark": "currin", "budget": 10, "seed": 1})");
    EXPECT_EQ(run_cli("run " + (dir / "small.json").string() + " -o " + (dir / "s.jsonl").string(), log), 0);
    EXPECT_TRUE(fs::exists(dir / "s.jsonl"));
    EXPECT_TRUE(fs::exists(dir / "s.jsonl.timing"));

    spit(dir / "broken.json",
         R"({"id": "b", "benchmark": "currin", "budget": 60, "seed": 1, "grid_points_per_dim": 100, "direct": {"max_evaluations": 3}})");
    EXPECT_EQ(run_cli("run " + (dir / "broken.json").string() + " -o " + (dir / "b.jsonl").string(), log), 3);
    EXPECT_FALSE(load_trace((dir / "b.jsonl").string()).ok);

    EXPECT_EQ(run_cli("batch " + (dir / "small.json").string() + " --seeds 1,2 --out " + (dir / "batch").string(), log), 0);
    EXPECT_TRUE(fs::exists(dir / "batch" / "aggregate.csv"));
    EXPECT_TRUE(fs::exists(dir / "batch" / "s_seed2.jsonl"));
    EXPECT_EQ(run_cli("batch " + (dir / "small.json").string() + " --seeds 1,x", log), 2);
    fs::remove_all(dir);
}
