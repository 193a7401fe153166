#include <batchomp/batchomp.hpp>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

struct SolveArgs {
    std::string dict, y, out, alg = "naive";
    std::size_t sparsity = 0;
    std::optional<double> tol;
    bool no_normalize = false, precompute_gram = false, strict = false;
};

struct BenchArgs {
    std::vector<std::size_t> m;
    std::size_t batch = 100, reps = 3;
    std::vector<std::string> algs{"reference", "naive", "v0"};
    std::string csv;
    bool single_thread = false;
    std::uint64_t seed = 0;
};

struct ClassifyArgs {
    std::string train, labels, test, out;
    std::size_t sparsity = 0;
};

struct GenArgs {
    std::size_t m = 0, n = 0, s = 0, b = 100;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::string prefix;
};

int run_solve(const SolveArgs& a) {
    using namespace batchomp;
    const DenseMatrix dict = io::load_matrix(a.dict);
    MeasurementBatch batch(io::load_matrix(a.y));
    SolverOptions opts;
    opts.sparsity = a.sparsity;
    opts.tolerance = a.tol;
    opts.normalize = !a.no_normalize;
    opts.precompute_gram = a.precompute_gram;

    std::vector<RecoveryResult> results;
    const Algorithm alg = parse_algorithm(a.alg);
    switch (alg) {
    case Algorithm::reference:
        validate_problem(dict, batch, opts);
        results = run_reference_batch(dict, batch, opts);
        break;
    case Algorithm::naive:
    case Algorithm::naive_update:
        opts.factor_strategy = alg == Algorithm::naive ? FactorStrategy::refactor : FactorStrategy::update;
        results = run_naive(dict, batch, opts);
        break;
    case Algorithm::v0:
        results = run_v0(dict, batch, opts);
        break;
    }

    DenseMatrix coefs(results.size(), dict.cols());
    bool degenerate = false;
    std::cout << "element,flag,iterations,residual_norm,support\n";
    for (std::size_t b = 0; b < results.size(); ++b) {
        const auto& r = results[b];
        std::copy(r.coefficients.begin(), r.coefficients.end(), coefs.data() + b * dict.cols());
        degenerate |= r.flag == StopFlag::degenerate;
        std::cout << b << ',' << to_string(r.flag) << ',' << r.iterations << ',' << r.residual_norm << ',';
        for (std::size_t i = 0; i < r.support.size(); ++i)
            std::cout << (i ? " " : "") << r.support[i];
        std::cout << '\n';
    }
    io::save_matrix(a.out, coefs);
    if (degenerate && a.strict) {
        std::cerr << "error: at least one element stopped on a degenerate atom\n";
        return kExitDegenerate;
    }
    return 0;
}

int run_bench(const BenchArgs& a) {
    using namespace batchomp;
    if (a.single_thread) {
#ifdef _OPENMP
        omp_set_num_threads(1);
#endif
    }
    std::vector<Algorithm> algs;
    for (const auto& s : a.algs)
        algs.push_back(parse_algorithm(s));
    std::vector<ProblemSpec> specs;
    for (std::size_t m : a.m) {
        ProblemSpec p;
        p.m = m;
        p.b = a.batch;
        p.seed = a.seed;
        specs.push_back(p);
    }
    BenchOptions bo;
    bo.repetitions = a.reps;
    bo.warnings = &std::cerr;
    const auto rows = run_benchmark(specs, algs, bo);
    const std::string csv = bench_csv(rows);
    io::write_file(a.csv, csv.data(), csv.size());
    std::cout << csv;
    return 0;
}

int run_classify(const ClassifyArgs& a) {
    using namespace batchomp;
    const DenseMatrix train = io::load_matrix(a.train);
    const DenseMatrix label_matrix = io::load_matrix(a.labels);
    const DenseMatrix test = io::load_matrix(a.test);
    std::vector<int> labels;
    for (double v : label_matrix.values()) {
        if (v != std::round(v))
            throw InputError("labels must be integers");
        labels.push_back(static_cast<int>(v));
    }
    const auto predicted = classify_by_residual(train, labels, test, a.sparsity);
    DenseMatrix out(predicted.size(), 1);
    for (std::size_t t = 0; t < predicted.size(); ++t)
        out(t, 0) = predicted[t];
    io::save_matrix(a.out, out);
    return 0;
}

int run_gen(const GenArgs& a) {
    using namespace batchomp;
    ProblemSpec spec;
    spec.m = a.m;
    spec.n = a.n;
    spec.s = a.s;
    spec.b = a.b;
    spec.noise_sigma = a.noise;
    spec.seed = a.seed;
    const Problem p = generate_problem(spec);
    io::save_matrix(a.prefix + "_dict.bin", p.dict);
    io::save_matrix(a.prefix + "_y.bin", p.y);
    io::save_matrix(a.prefix + "_x.bin", p.x);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batched orthogonal matching pursuit"};
    app.require_subcommand(1);

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "Sparse recovery for every row of a measurement matrix");
    solve->add_option("--dict", sa.dict, "M x N dictionary")->required();
    solve->add_option("--y", sa.y, "B x M measurements, one per row")->required();
    solve->add_option("--sparsity", sa.sparsity, "Maximum support size")->required();
    solve->add_option("--tol", sa.tol, "Residual norm stopping tolerance");
    solve->add_option("--alg", sa.alg, "naive, naive-update, v0 or reference");
    solve->add_flag("--no-normalize", sa.no_normalize, "Dictionary columns are already unit norm");
    solve->add_flag("--precompute-gram", sa.precompute_gram, "Use a precomputed Gram table");
    solve->add_flag("--strict", sa.strict, "Exit with status 3 if any element hits a degenerate atom");
    solve->add_option("--out", sa.out, "B x N coefficient output")->required();

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Time the cores on generated problems");
    bench->add_option("--m", ba.m, "Comma-separated measurement counts")->required()->delimiter(',');
    bench->add_option("--batch", ba.batch, "Batch size");
    bench->add_option("--reps", ba.reps, "Timed repetitions per point");
    bench->add_option("--algs", ba.algs, "Comma-separated algorithms")->delimiter(',');
    bench->add_option("--seed", ba.seed, "Problem generator seed");
    bench->add_option("--csv", ba.csv, "CSV output")->required();
    bench->add_flag("--single-thread", ba.single_thread, "Run on one thread");

    ClassifyArgs ca;
    auto* classify = app.add_subcommand("classify", "Residual-based classification");
    classify->add_option("--train", ca.train, "M x N labelled dictionary")->required();
    classify->add_option("--labels", ca.labels, "One integer label per dictionary column")->required();
    classify->add_option("--test", ca.test, "T x M test vectors")->required();
    classify->add_option("--sparsity", ca.sparsity, "Maximum support size")->required();
    classify->add_option("--out", ca.out, "T x 1 predicted labels")->required();

    GenArgs ga;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic recovery problem");
    gen->add_option("--m", ga.m, "Measurement count")->required();
    gen->add_option("--n", ga.n, "Atom count (default 8M)");
    gen->add_option("--s", ga.s, "Sparsity (default M/4)");
    gen->add_option("--b", ga.b, "Batch size");
    gen->add_option("--noise", ga.noise, "Gaussian noise sigma");
    gen->add_option("--seed", ga.seed, "Generator seed")->required();
    gen->add_option("--out-prefix", ga.prefix, "Writes PREFIX_dict.bin, PREFIX_y.bin, PREFIX_x.bin")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (*solve)
            return run_solve(sa);
        if (*bench)
            return run_bench(ba);
        if (*classify)
            return run_classify(ca);
        return run_gen(ga);
    } catch (const batchomp::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const batchomp::FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitInput;
    } catch (const batchomp::SizingError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
