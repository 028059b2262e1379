#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kio/dataset.hpp"
#include "kio/dualcore.hpp"
#include "kio/inference.hpp"
#include "kio/kernels.hpp"
#include "kio/serialize.hpp"
#include "kio/sso.hpp"

using json = nlohmann::json;
using namespace kio;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitSolverFailure = 4;

json vec_to_json(const Vector& v) {
    json j = json::array();
    for (int i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

json mat_to_json(const Matrix& m) {
    json j = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        j.push_back(row);
    }
    return j;
}

Vector vec_from_json(const json& j) {
    Vector v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

Matrix mat_from_json(const json& j) {
    const int rows = static_cast<int>(j.size());
    const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    return m;
}

// JSON config support: values become defaults, explicit flags win. The file
// is a flat object keyed by long option names of the invoked subcommand.
std::vector<std::string> apply_config(const std::vector<std::string>& args) {
    std::string config_path;
    for (size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") config_path = args[i + 1];
    }
    if (config_path.empty()) return args;
    std::ifstream in(config_path);
    if (!in) throw ParseError("cannot open config file: " + config_path);
    json cfg = json::parse(in, nullptr, true);
    std::vector<std::string> out = args;
    for (auto& [key, val] : cfg.items()) {
        std::string flag = "--" + key;
        bool present = false;
        for (const auto& a : args) {
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        }
        if (present) continue;
        out.push_back(flag);
        if (val.is_boolean()) {
            out.back() = flag + "=" + (val.get<bool>() ? "true" : "false");
        } else if (val.is_string()) {
            out.push_back(val.get<std::string>());
        } else {
            out.push_back(val.dump());
        }
    }
    return out;
}

struct GenerateArgs {
    int n = 3;
    int d_s = 4;
    int N = 0;
    std::string feature = "rff";
    int rff_count = 32;
    double rff_bandwidth = 1.0;
    int degree = 2;
    double su_scale = 0.5;
    double noise = 0.0;
    double box_bound = 1.0;
    std::uint64_t seed = 0;
    std::string out = "dataset.jsonl";
    std::string truth;
};

int cmd_generate(const GenerateArgs& a) {
    SyntheticExpertSpec spec;
    spec.n = a.n;
    spec.d_s = a.d_s;
    spec.theta_uu_true = Matrix::Identity(a.n, a.n);
    if (a.feature == "linear") {
        spec.feature_map.kind = FeatureKind::Linear;
    } else if (a.feature == "rff") {
        spec.feature_map.kind = FeatureKind::RandomFourier;
        spec.feature_map.count = a.rff_count;
        spec.feature_map.bandwidth = a.rff_bandwidth;
        spec.feature_map.seed = a.seed + 1;
    } else if (a.feature == "poly") {
        spec.feature_map.kind = FeatureKind::Polynomial;
        spec.feature_map.degree = a.degree;
    } else {
        throw ParseError("unknown feature map: " + a.feature);
    }
    spec.box_bound = a.box_bound;
    spec.noise_std = a.noise;
    spec.seed = a.seed;

    FeatureMap fm(spec.feature_map, spec.d_s);
    std::mt19937_64 rng(a.seed + 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    spec.theta_su_true.resize(fm.dim(), a.n);
    for (int i = 0; i < fm.dim(); ++i)
        for (int j = 0; j < a.n; ++j)
            spec.theta_su_true(i, j) = a.su_scale * normal(rng);

    Dataset ds = generate_synthetic(spec, a.N);
    save_dataset(ds, a.out);
    std::string truth = a.truth.empty() ? a.out + ".truth.json" : a.truth;
    save_expert_spec(spec, truth);
    std::cerr << "wrote " << a.N << " records to " << a.out << " (truth: "
              << truth << ")\n";
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string kernel = "rbf";
    double gamma = 0.0;  // 0 = scale heuristic
    double k = 1e-4;
    double scalar = 0.0;  // 0 = 50N
    int p = 0;            // 0 = N/2
    int T = 50;
    double rho = 0.1;
    int warmup = 2;
    double stop_tol = 1e-8;
    std::uint64_t seed = 0;
    bool full = false;
    bool literal_warmup = false;
    std::string mode = "simplified";
    std::string model_out = "model.json";
    std::string log_out;
    std::string state_out;
};

int cmd_train(const TrainArgs& a) {
    Dataset ds = load_dataset(a.data);
    NormalizationStats norm = fit_normalizer(ds);
    Dataset nds = apply_normalizer(ds, norm);

    KernelSpec kernel;
    kernel.kind = kernel_kind_from_name(a.kernel);
    if (kernel.kind != KernelKind::Linear) {
        if (a.gamma > 0) {
            kernel.gamma = a.gamma;
        } else {
            std::vector<Vector> sigs;
            for (const auto& r : nds.records) sigs.push_back(r.s);
            kernel.gamma = default_gamma(sigs);
        }
    }
    const int N = ds.size();
    double scalar = a.scalar > 0 ? a.scalar : 50.0 * N;
    DualMode mode = a.mode == "general" ? DualMode::General : DualMode::Simplified;
    ProblemData pd = make_problem(nds, kernel, a.k, scalar, mode);

    DualState state = DualState::zero(N, ds.n(), mode);
    ConvergenceLog log;
    bool converged = true;
    if (mode == DualMode::General) {
        state = solve_general(pd, state);
    } else if (a.full) {
        std::vector<int> S(N);
        std::iota(S.begin(), S.end(), 0);
        state = solve_subproblem_simplified(pd, state, S);
        log.rows.push_back({1, eval_dual_objective(pd, state), 0.0, 0.0, N, 0});
        log.converged = true;
    } else {
        SsoConfig cfg;
        cfg.p = a.p;
        cfg.T = a.T;
        cfg.random_fraction = a.rho;
        cfg.warmup_partitions = a.warmup;
        cfg.stop_tol = a.stop_tol;
        cfg.seed = a.seed;
        cfg.paper_literal_warmup = a.literal_warmup;
        SsoResult res = sso_train(pd, cfg);
        state = std::move(res.state);
        log = std::move(res.log);
        converged = log.converged;
    }

    TrainedModel model = recover_model(pd, state, norm);
    model.meta["k"] = std::to_string(a.k);
    model.meta["scalar"] = std::to_string(scalar);
    model.meta["seed"] = std::to_string(a.seed);
    model.meta["mode"] = a.mode;
    model.meta["N"] = std::to_string(N);
    model.meta["data"] = a.data;
    if (ds.shared_constraints) {
        model.meta["shared_M"] = mat_to_json(ds.records.front().M).dump();
        model.meta["shared_W"] = vec_to_json(ds.records.front().W).dump();
    }
    model.save(a.model_out);

    std::string log_path = a.log_out.empty() ? a.model_out + ".log.csv" : a.log_out;
    {
        std::ofstream out(log_path);
        out << log.to_csv();
    }
    std::string state_path =
        a.state_out.empty() ? a.model_out + ".state.json" : a.state_out;
    save_dual_state(state_path, state, a.k, scalar, mode);

    std::cerr << "model: " << a.model_out << "  log: " << log_path
              << "  state: " << state_path << "\n";
    if (!log.rows.empty()) {
        std::cerr << "final objective: " << log.rows.back().objective << "\n";
    }
    return converged ? 0 : kExitNoConvergence;
}

std::pair<Matrix, Vector> model_default_constraints(const TrainedModel& model) {
    auto it_m = model.meta.find("shared_M");
    auto it_w = model.meta.find("shared_W");
    if (it_m == model.meta.end() || it_w == model.meta.end()) {
        throw ParseError(
            "model carries no shared constraints; supply M and W explicitly");
    }
    return {mat_from_json(json::parse(it_m->second)),
            vec_from_json(json::parse(it_w->second))};
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::string truth;
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    TrainedModel model = TrainedModel::load(a.model);
    Dataset ds = load_dataset(a.data);
    json rep;
    rep["subopt_loss"] = suboptimality_loss(model, ds);
    if (!a.truth.empty()) {
        SyntheticExpertSpec spec = load_expert_spec(a.truth);
        ImitationReport ir = evaluate_imitation(model, spec, ds);
        rep["decision_error"] = ir.decision_error;
        rep["regret"] = ir.regret;
        rep["expert_objective_magnitude"] = ir.expert_objective_magnitude;
    } else {
        double err = 0.0;
        for (const auto& rec : ds.records) {
            err += (predict(model, rec.s, rec.M, rec.W) - rec.u).norm();
        }
        rep["decision_error"] = err / ds.size();
    }
    if (a.out.empty()) {
        std::cout << rep.dump() << "\n";
    } else {
        std::ofstream out(a.out);
        out << rep.dump() << "\n";
    }
    return 0;
}

struct KktArgs {
    std::string model;
    std::string state;
    std::string data;
    std::string out;
};

int cmd_kkt(const KktArgs& a) {
    TrainedModel model = TrainedModel::load(a.model);
    DualCheckpoint cp = load_dual_state(a.state);
    Dataset ds = load_dataset(a.data);
    Dataset nds = apply_normalizer(ds, model.norm);
    ProblemData pd =
        make_problem(nds, model.kernel, cp.k, cp.scalar, DualMode::Simplified);
    if (static_cast<int>(cp.state.gamma.size()) != pd.N()) {
        throw DimensionError("dual state and dataset sizes differ");
    }
    KktReport rep = kkt_report(pd, cp.state);
    Vector viol = kkt_violators(pd, cp.state);
    auto mask = eligible_mask(pd, cp.state);

    std::ostringstream csv;
    csv.precision(17);
    csv << "index,stationarity_su,stationarity_lambda,comp_slack_lambda,"
           "comp_slack_block,primal_feas,violator,eligible\n";
    for (int i = 0; i < pd.N(); ++i) {
        csv << i << ',' << rep.stationarity_su(i) << ','
            << rep.stationarity_lambda(i) << ',' << rep.comp_slack_lambda(i)
            << ',' << rep.comp_slack_block(i) << ',' << rep.primal_feas(i)
            << ',' << viol(i) << ',' << (mask[i] ? 1 : 0) << '\n';
    }
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(a.out);
        out << csv.str();
    }
    return 0;
}

struct InferArgs {
    std::string model;
};

int cmd_infer(const InferArgs& a) {
    TrainedModel model = TrainedModel::load(a.model);
    json req = json::parse(std::cin, nullptr, true);
    Vector s = vec_from_json(req.at("s"));
    Matrix M;
    Vector W;
    if (req.contains("M") && req.contains("W")) {
        M = mat_from_json(req.at("M"));
        W = vec_from_json(req.at("W"));
    } else {
        std::tie(M, W) = model_default_constraints(model);
    }
    Vector u = predict(model, s, M, W);
    json out;
    out["u"] = vec_to_json(u);
    std::cout << out.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel inverse optimization: learn a quadratic decision "
                 "objective from signal-decision data and imitate it"};
    app.require_subcommand(1);

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate",
                                   "Generate a synthetic expert dataset");
    gen->add_option("--n", ga.n, "Decision dimension")->capture_default_str();
    gen->add_option("--ds", ga.d_s, "Signal dimension")->capture_default_str();
    gen->add_option("--N", ga.N, "Number of records")->required();
    gen->add_option("--feature", ga.feature, "Expert feature map: linear|rff|poly")
        ->capture_default_str();
    gen->add_option("--rff-count", ga.rff_count, "Random Fourier feature count")
        ->capture_default_str();
    gen->add_option("--rff-bandwidth", ga.rff_bandwidth,
                    "Random Fourier bandwidth")
        ->capture_default_str();
    gen->add_option("--degree", ga.degree, "Polynomial degree")
        ->capture_default_str();
    gen->add_option("--su-scale", ga.su_scale, "Signal-coupling magnitude")
        ->capture_default_str();
    gen->add_option("--noise", ga.noise, "Decision noise std")
        ->capture_default_str();
    gen->add_option("--box-bound", ga.box_bound, "Action box half-width")
        ->capture_default_str();
    gen->add_option("--seed", ga.seed, "RNG seed")->capture_default_str();
    gen->add_option("--out", ga.out, "Output dataset path (JSON Lines)")
        ->capture_default_str();
    gen->add_option("--truth", ga.truth,
                    "Ground-truth sidecar path (default: <out>.truth.json)");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train a model on a dataset");
    train->add_option("--data", ta.data, "Training dataset path")->required();
    train->add_option("--kernel", ta.kernel, "Kernel: rbf|laplace|linear")
        ->capture_default_str();
    train->add_option("--gamma", ta.gamma, "Kernel width (0 = scale heuristic)")
        ->capture_default_str();
    train->add_option("--k", ta.k, "Regularization weight")->capture_default_str();
    train->add_option("--scalar", ta.scalar,
                      "Inner-solver objective multiplier (0 = 50N)")
        ->capture_default_str();
    train->add_option("--p", ta.p, "Coordinates per iteration (0 = N/2)")
        ->capture_default_str();
    train->add_option("--T", ta.T, "Max iterations")->capture_default_str();
    train->add_option("--rho", ta.rho, "Random share of each batch")
        ->capture_default_str();
    train->add_option("--warmup", ta.warmup, "Warm-up partitions (0 = none)")
        ->capture_default_str();
    train->add_option("--stop-tol", ta.stop_tol, "Relative stopping tolerance")
        ->capture_default_str();
    train->add_option("--seed", ta.seed, "RNG seed")->capture_default_str();
    train->add_flag("--full", ta.full, "Single full-batch solve instead of SSO");
    train->add_flag("--literal-warmup", ta.literal_warmup,
                    "Per-partition scalings in warm-up subproblems");
    train->add_option("--mode", ta.mode, "simplified|general")
        ->capture_default_str();
    train->add_option("--model", ta.model_out, "Output model path")
        ->capture_default_str();
    train->add_option("--log", ta.log_out,
                      "Convergence CSV path (default: <model>.log.csv)");
    train->add_option("--state", ta.state_out,
                      "Dual-state checkpoint path (default: <model>.state.json)");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset");
    eval->add_option("--model", ea.model, "Model path")->required();
    eval->add_option("--data", ea.data, "Dataset path")->required();
    eval->add_option("--truth", ea.truth, "Ground-truth sidecar for regret");
    eval->add_option("--out", ea.out, "Report path (default: stdout)");

    KktArgs ka;
    auto* kkt = app.add_subcommand("kkt", "Per-index optimality residual table");
    kkt->add_option("--model", ka.model, "Model path")->required();
    kkt->add_option("--state", ka.state, "Dual-state checkpoint path")->required();
    kkt->add_option("--data", ka.data, "Training dataset path")->required();
    kkt->add_option("--out", ka.out, "CSV path (default: stdout)");

    InferArgs ia;
    auto* infer = app.add_subcommand(
        "infer", "Read one signal from stdin JSON and print the decision");
    infer->add_option("--model", ia.model, "Model path")->required();

    std::string config_path;
    for (auto* sub : {gen, train, eval, kkt, infer}) {
        sub->add_option("--config", config_path,
                        "JSON config; explicit flags override");
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = apply_config(args);
        std::vector<const char*> cargs = {argv[0]};
        for (const auto& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()),
                  const_cast<char**>(cargs.data()));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(ga);
        if (train->parsed()) return cmd_train(ta);
        if (eval->parsed()) return cmd_eval(ea);
        if (kkt->parsed()) return cmd_kkt(ka);
        if (infer->parsed()) return cmd_infer(ia);
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolverFailure;
    } catch (const Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitSolverFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
