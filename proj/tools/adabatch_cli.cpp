// Command-line front end: run replicated experiments, verify the library
// against its statistical contracts, and print optimal splits / rate tables.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adabatch/experiment.hpp"
#include "adabatch/verify.hpp"

namespace {

using namespace adabatch;

struct RunArgs {
    std::string objective = "quad3";
    double kappa = 100.0;
    std::vector<int> cases;
    std::string controllers = "norm,innerOrth";
    long long reps = 1000;
    std::uint64_t seed = 0;
    long long budget = 1'000'000;
    long long b0 = 32;
    int grid = 200;
    std::string mode = "oracle";
    std::vector<double> xi0;
    std::string outCsv;
    std::string outSvg;
    std::string configPath;
    int threads = 0;
    bool strict = false;
};

std::vector<std::string> splitNames(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

int doRun(const RunArgs& args, const CLI::App& cmd) {
    const bool haveConfig = !args.configPath.empty();
    ExperimentSpec spec;
    if (haveConfig) spec = loadExperimentConfig(args.configPath);

    // flags override the config file; without one, flag defaults apply
    if (!haveConfig || cmd.count("--objective")) spec.objective = parseObjective(args.objective);
    if (cmd.count("--kappa")) spec.kappa = args.kappa;
    if (!args.cases.empty()) {
        const auto table = table1Cases(args.strict);
        spec.cases.clear();
        for (int i : args.cases) {
            if (i < 1 || i > 4) throw ConfigError("case index out of range 1..4");
            spec.cases.push_back(table[i - 1]);
        }
    } else if (!haveConfig && args.strict) {
        spec.cases = table1Cases(true);
    }
    if (!haveConfig || cmd.count("--controllers")) {
        spec.controllers.clear();
        for (const auto& name : splitNames(args.controllers))
            spec.controllers.push_back(parseController(name));
    }
    if (!haveConfig || cmd.count("--reps")) spec.replications = args.reps;
    if (cmd.count("--seed")) spec.baseSeed = args.seed;
    if (cmd.count("--budget")) spec.budget = args.budget;
    if (cmd.count("--b0")) spec.b0 = args.b0;
    if (cmd.count("--grid")) spec.gridPoints = args.grid;
    if (cmd.count("--threads")) spec.threads = args.threads;
    if (cmd.count("--mode"))
        spec.mode = args.mode == "plugin" ? DecisionMode::Plugin : DecisionMode::Oracle;
    if (!args.xi0.empty()) spec.xi0 = Vector::fromStd(args.xi0);

    const CurveMap curves = runExperiment(spec);
    if (!args.outCsv.empty()) {
        emitCsv(curves, args.outCsv);
        std::printf("wrote %s\n", args.outCsv.c_str());
    }
    if (!args.outSvg.empty()) {
        emitSvg(curves, args.outSvg);
        std::printf("wrote %s\n", args.outSvg.c_str());
    }
    if (args.outCsv.empty() && args.outSvg.empty()) {
        std::fputs(curvesToCsv(curves).c_str(), stdout);
    }
    return 0;
}

int doVerify(std::uint64_t seed, long long reps, const std::string& outDir, int threads) {
    VerifyOptions opts;
    opts.baseSeed = seed;
    opts.replications = reps;
    opts.outDir = outDir;
    opts.threads = threads;
    const bool ok = reportResults(runVerificationSuite(opts));
    return ok ? 0 : 2;
}

int doSplit(const std::string& objective, double kappa, const std::vector<double>& point,
            double epsilon) {
    ExperimentSpec spec;
    spec.objective = parseObjective(objective);
    spec.kappa = kappa;
    const auto obj = makeObjective(spec);
    const Vector xi = Vector::fromStd(point);
    const Split s = optimalSplit(obj->exactCovariance(xi), obj->exactGradient(xi), epsilon);
    std::printf("epsilon %.17g\ntheta   %.17g\nnu      %.17g\n", epsilon, s.theta, s.nu);
    return 0;
}

int doRate(double kappa, double epsilon, long long k) {
    const double rho = convergenceRate(kappa, epsilon * epsilon);
    std::printf("kappa %.17g epsilon %.17g rho %.17g\n", kappa, epsilon, rho);
    std::printf("k,bound\n");
    for (long long i = 0; i <= k; ++i) std::printf("%lld,%.17g\n", i, rateBound(kappa, epsilon * epsilon, i));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive-batch SGD: norm and inner-product/orthogonality batch controllers"};
    app.require_subcommand(1);

    RunArgs runArgs;
    CLI::App* run = app.add_subcommand("run", "run a replicated gap-vs-cost experiment");
    run->add_option("--objective", runArgs.objective, "quad3 | quad2")->default_str("quad3");
    run->add_option("--kappa", runArgs.kappa, "quad2 condition parameter");
    run->add_option("--case,--cases", runArgs.cases, "tolerance case indices 1..4");
    run->add_option("--controllers", runArgs.controllers,
                    "comma list of norm,innerOrth,innerOrthOptimalSplit");
    run->add_option("--reps", runArgs.reps, "replications per cell");
    run->add_option("--seed", runArgs.seed, "base seed; run i uses seed base+i");
    run->add_option("--budget", runArgs.budget, "gradient evaluations per run");
    run->add_option("--b0", runArgs.b0, "batch size of iteration 0");
    run->add_option("--grid", runArgs.grid, "points on the shared log cost grid");
    run->add_option("--mode", runArgs.mode, "oracle | plugin");
    run->add_option("--xi0", runArgs.xi0, "initial point components");
    run->add_option("--out", runArgs.outCsv, "CSV output path");
    run->add_option("--svg", runArgs.outSvg, "SVG output path");
    run->add_option("--config", runArgs.configPath, "key = value config file");
    run->add_option("--threads", runArgs.threads, "worker cap (0 = ADABATCH_THREADS/auto)");
    run->add_flag("--strict", runArgs.strict, "recompute nu from (epsilon, theta) exactly");

    std::uint64_t verifySeed = 20240817;
    long long verifyReps = 100;
    std::string verifyOut = "verify_out";
    int verifyThreads = 0;
    CLI::App* verify = app.add_subcommand("verify", "run the verification suite (pass/fail)");
    verify->add_option("--seed", verifySeed, "base seed");
    verify->add_option("--reps", verifyReps, "replications for the experiment checks");
    verify->add_option("--out", verifyOut, "fixture directory (empty to skip fixtures)");
    verify->add_option("--threads", verifyThreads, "worker cap (0 = ADABATCH_THREADS/auto)");

    std::string splitObjective = "quad3";
    double splitKappa = 100.0;
    std::vector<double> splitPoint;
    double splitEpsilon = 1.0;
    CLI::App* split = app.add_subcommand("split", "print the optimal (theta, nu) at a point");
    split->add_option("--objective", splitObjective, "quad3 | quad2");
    split->add_option("--kappa", splitKappa, "quad2 condition parameter");
    split->add_option("--point", splitPoint, "design point components")->required();
    split->add_option("--epsilon", splitEpsilon, "norm-test tolerance")->required();

    double rateKappa = 0.0, rateEpsilon = 0.0;
    long long rateK = 0;
    CLI::App* rate = app.add_subcommand("rate", "print the linear-rate bound table");
    rate->add_option("--kappa", rateKappa, "condition number L/mu")->required();
    rate->add_option("--epsilon", rateEpsilon, "relative tolerance")->required();
    rate->add_option("--k", rateK, "iterations")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return doRun(runArgs, *run);
        if (verify->parsed()) return doVerify(verifySeed, verifyReps, verifyOut, verifyThreads);
        if (split->parsed()) return doSplit(splitObjective, splitKappa, splitPoint, splitEpsilon);
        if (rate->parsed()) return doRate(rateKappa, rateEpsilon, rateK);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
