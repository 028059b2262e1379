#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numeric>

#include "kio/dataset.hpp"
#include "kio/dualcore.hpp"
#include "kio/inference.hpp"
#include "kio/kernels.hpp"
#include "kio/qp.hpp"
#include "kio/sso.hpp"

namespace py = pybind11;
using namespace kio;

namespace {

std::vector<Vector> rows_of(const Matrix& m) {
    std::vector<Vector> out;
    out.reserve(m.rows());
    for (int i = 0; i < m.rows(); ++i) out.push_back(m.row(i).transpose());
    return out;
}

Dataset make_dataset(const Matrix& signals, const Matrix& decisions,
                     const Matrix& M, const Vector& W) {
    if (signals.rows() != decisions.rows()) {
        throw DimensionError("signals and decisions must have the same row count");
    }
    Dataset ds;
    ds.shared_constraints = true;
    for (int i = 0; i < signals.rows(); ++i) {
        ds.records.push_back({signals.row(i).transpose(),
                              decisions.row(i).transpose(), M, W});
    }
    validate_dataset(ds);
    return ds;
}

KernelSpec make_kernel(const std::string& name, double gamma,
                       const std::vector<Vector>& signals) {
    KernelSpec spec;
    spec.kind = kernel_kind_from_name(name);
    if (spec.kind != KernelKind::Linear) {
        spec.gamma = gamma > 0 ? gamma : default_gamma(signals);
    }
    return spec;
}

struct TrainOutput {
    TrainedModel model;
    std::vector<double> objectives;
    bool converged = true;
};

TrainOutput train_impl(const Matrix& signals, const Matrix& decisions,
                       const Matrix& M, const Vector& W,
                       const std::string& kernel, double gamma, double k,
                       double scalar, int p, int T, double rho, int warmup,
                       double stop_tol, std::uint64_t seed, bool full) {
    Dataset ds = make_dataset(signals, decisions, M, W);
    NormalizationStats norm = fit_normalizer(ds);
    Dataset nds = apply_normalizer(ds, norm);
    std::vector<Vector> sigs;
    for (const auto& r : nds.records) sigs.push_back(r.s);
    KernelSpec spec = make_kernel(kernel, gamma, sigs);
    const int N = ds.size();
    ProblemData pd = make_problem(std::move(nds), spec, k,
                                  scalar > 0 ? scalar : 50.0 * N,
                                  DualMode::Simplified);
    TrainOutput out;
    if (full) {
        std::vector<int> S(N);
        std::iota(S.begin(), S.end(), 0);
        DualState x = solve_subproblem_simplified(
            pd, DualState::zero(N, ds.n(), DualMode::Simplified), S);
        out.objectives.push_back(eval_dual_objective(pd, x));
        out.model = recover_model(pd, x, norm);
    } else {
        SsoConfig cfg;
        cfg.p = p;
        cfg.T = T;
        cfg.random_fraction = rho;
        cfg.warmup_partitions = warmup;
        cfg.stop_tol = stop_tol;
        cfg.seed = seed;
        SsoResult res = sso_train(pd, cfg);
        for (const auto& r : res.log.rows) out.objectives.push_back(r.objective);
        out.converged = res.log.converged;
        out.model = recover_model(pd, res.state, norm);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Kernel inverse optimization core";

    py::register_exception<Infeasible>(m, "InfeasibleError");
    py::register_exception<SolverFailure>(m, "SolverFailureError");

    py::class_<TrainedModel>(m, "Model")
        .def_property_readonly("size", &TrainedModel::size)
        .def_property_readonly("n", &TrainedModel::n)
        .def_property_readonly("k", [](const TrainedModel& t) { return t.k; })
        .def_property_readonly(
            "theta_uu", [](const TrainedModel& t) { return t.theta_uu; })
        .def_property_readonly(
            "alpha",
            [](const TrainedModel& t) {
                Matrix a(t.size(), t.n());
                for (int i = 0; i < t.size(); ++i)
                    a.row(i) = t.alpha[i].transpose();
                return a;
            })
        .def("predict",
             [](const TrainedModel& t, const Vector& s, const Matrix& M,
                const Vector& W) { return predict(t, s, M, W); },
             py::arg("s"), py::arg("M"), py::arg("W"))
        .def("to_json", &TrainedModel::to_json)
        .def_static("from_json", &TrainedModel::from_json)
        .def("save", &TrainedModel::save)
        .def_static("load", &TrainedModel::load);

    py::class_<TrainOutput>(m, "TrainResult")
        .def_readonly("model", &TrainOutput::model)
        .def_readonly("objectives", &TrainOutput::objectives)
        .def_readonly("converged", &TrainOutput::converged);

    m.def("train", &train_impl, py::arg("signals"), py::arg("decisions"),
          py::arg("M"), py::arg("W"), py::arg("kernel") = "rbf",
          py::arg("gamma") = 0.0, py::arg("k") = 1e-4, py::arg("scalar") = 0.0,
          py::arg("p") = 0, py::arg("T") = 50, py::arg("rho") = 0.1,
          py::arg("warmup") = 2, py::arg("stop_tol") = 1e-8,
          py::arg("seed") = 0, py::arg("full") = false,
          "Fit a model to rows of signals/decisions under shared constraints "
          "M u <= W");

    m.def("suboptimality_loss",
          [](const TrainedModel& model, const Matrix& signals,
             const Matrix& decisions, const Matrix& M, const Vector& W) {
              return suboptimality_loss(model, make_dataset(signals, decisions,
                                                            M, W));
          },
          py::arg("model"), py::arg("signals"), py::arg("decisions"),
          py::arg("M"), py::arg("W"));

    m.def("gram",
          [](const std::string& kernel, double gamma, const Matrix& signals) {
              auto sigs = rows_of(signals);
              return gram(make_kernel(kernel, gamma, sigs), sigs).K;
          },
          py::arg("kernel"), py::arg("gamma"), py::arg("signals"));

    m.def("kernel_eval",
          [](const std::string& kernel, double gamma, const Vector& s,
             const Vector& t) {
              KernelSpec spec;
              spec.kind = kernel_kind_from_name(kernel);
              spec.gamma = gamma;
              return kernel_eval(spec, s, t);
          },
          py::arg("kernel"), py::arg("gamma"), py::arg("s"), py::arg("t"));

    m.def("solve_qp",
          [](const Matrix& H, const Vector& g, const Matrix& A, const Vector& b) {
              Vector x0 = find_feasible_point(A, b);
              QpResult res = solve_qp(H, g, A, b, x0);
              if (!res.converged) throw SolverFailure("QP did not converge");
              return res.x;
          },
          py::arg("H"), py::arg("g"), py::arg("A"), py::arg("b"),
          "Minimize 0.5 x'Hx + g'x subject to Ax <= b");

    m.def("generate",
          [](int n, int d_s, int N, double noise, std::uint64_t seed) {
              SyntheticExpertSpec spec;
              spec.n = n;
              spec.d_s = d_s;
              spec.theta_uu_true = Matrix::Identity(n, n);
              spec.feature_map.kind = FeatureKind::RandomFourier;
              spec.feature_map.seed = seed + 1;
              FeatureMap fm(spec.feature_map, d_s);
              std::mt19937_64 rng(seed + 2);
              std::normal_distribution<double> normal(0.0, 0.5);
              spec.theta_su_true.resize(fm.dim(), n);
              for (int i = 0; i < fm.dim(); ++i)
                  for (int j = 0; j < n; ++j)
                      spec.theta_su_true(i, j) = normal(rng);
              spec.noise_std = noise;
              spec.seed = seed;
              Dataset ds = generate_synthetic(spec, N);
              Matrix S(N, d_s), U(N, n);
              for (int i = 0; i < N; ++i) {
                  S.row(i) = ds.records[i].s.transpose();
                  U.row(i) = ds.records[i].u.transpose();
              }
              return py::make_tuple(S, U, ds.records.front().M,
                                    ds.records.front().W);
          },
          py::arg("n"), py::arg("d_s"), py::arg("N"), py::arg("noise") = 0.0,
          py::arg("seed") = 0,
          "Synthetic expert dataset; returns (signals, decisions, M, W)");
}
