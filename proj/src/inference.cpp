#include "kio/inference.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kio/qp.hpp"

namespace kio {

using nlohmann::json;

namespace {

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
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

}  // namespace

TrainedModel recover_model(const ProblemData& pd, const DualState& x,
                           const NormalizationStats& norm) {
    const int N = pd.N();
    const int n = pd.n();
    if ((pd.mode == DualMode::General) != x.P.has_value()) {
        throw ModeMismatch("recover_model: P present iff mode is general");
    }
    TrainedModel model;
    model.kernel = pd.gram.kernel;
    model.norm = norm;
    model.k = pd.k;
    model.train_signals.reserve(N);
    model.alpha.reserve(N);
    for (int i = 0; i < N; ++i) {
        const auto& rec = pd.dataset.records[i];
        model.train_signals.push_back(rec.s);
        model.alpha.push_back((2.0 / pd.k) * (2.0 * x.gamma[i] - rec.u / N));
    }
    if (pd.mode == DualMode::Simplified) {
        model.theta_uu = Matrix::Identity(n, n);
    } else {
        Matrix C = Matrix::Zero(n, n);
        for (int i = 0; i < N; ++i) {
            const Vector& u = pd.dataset.records[i].u;
            C += u * u.transpose() / N;
            C -= x.lambda[i];
        }
        model.theta_uu = (*x.P - C) / (2.0 * pd.k);
        model.theta_uu = 0.5 * (model.theta_uu + model.theta_uu.transpose());
    }
    return model;
}

FopInstance build_fop(const TrainedModel& model, const Vector& s_new,
                      const Matrix& M, const Vector& W) {
    if (s_new.size() != model.norm.mean.size()) {
        throw DimensionError("build_fop: signal dimension mismatch");
    }
    Vector z = model.norm.normalize(s_new);
    Vector kx = kernel_cross(model.kernel, z, model.train_signals);
    Vector c = Vector::Zero(model.n());
    for (int i = 0; i < model.size(); ++i) c += kx(i) * model.alpha[i];
    return {model.theta_uu, c, M, W};
}

Vector solve_fop(const FopInstance& f) {
    const int n = static_cast<int>(f.Q.rows());
    Vector u0;
    if (f.M.rows() == 0 || (f.M * Vector::Zero(n) - f.W).maxCoeff() <= 0.0) {
        u0 = Vector::Zero(n);
    } else {
        u0 = find_feasible_point(f.M, f.W);
    }
    QpOptions opts;
    opts.tol = kFopTol;
    QpResult r = solve_qp(2.0 * f.Q, f.c, f.M, f.W, u0, opts);
    if (!r.converged) throw SolverFailure("solve_fop: QP did not converge");
    return r.x;
}

Vector predict(const TrainedModel& model, const Vector& s_new, const Matrix& M,
               const Vector& W) {
    return solve_fop(build_fop(model, s_new, M, W));
}

double suboptimality_loss(const TrainedModel& model, const Dataset& ds) {
    double total = 0.0;
    for (const auto& rec : ds.records) {
        FopInstance f = build_fop(model, rec.s, rec.M, rec.W);
        Vector u_star = solve_fop(f);
        double at_expert = rec.u.dot(f.Q * rec.u) + f.c.dot(rec.u);
        double at_opt = u_star.dot(f.Q * u_star) + f.c.dot(u_star);
        total += at_expert - at_opt;
    }
    return total / ds.size();
}

ImitationReport evaluate_imitation(const TrainedModel& model,
                                   const SyntheticExpertSpec& spec,
                                   const Dataset& ds_test) {
    FeatureMap fm(spec.feature_map, spec.d_s);
    const Matrix Mc = spec.constraint_M();
    const Vector Wc = spec.constraint_W();
    const Matrix H = 2.0 * spec.theta_uu_true;
    ImitationReport rep;
    for (const auto& rec : ds_test.records) {
        Vector u_pred = predict(model, rec.s, rec.M, rec.W);
        Vector c_true = 2.0 * spec.theta_su_true.transpose() * fm(rec.s);
        Vector u0 = find_feasible_point(Mc, Wc);
        QpResult r = solve_qp(H, c_true, Mc, Wc, u0);
        if (!r.converged) throw SolverFailure("evaluate_imitation: true FOP failed");
        const Vector& u_opt = r.x;
        double f_pred = true_objective(spec, fm, rec.s, u_pred);
        double f_opt = true_objective(spec, fm, rec.s, u_opt);
        rep.decision_error += (u_pred - rec.u).norm();
        rep.regret += f_pred - f_opt;
        rep.expert_objective_magnitude += std::abs(f_opt);
    }
    const int N = ds_test.size();
    rep.decision_error /= N;
    rep.regret /= N;
    rep.expert_objective_magnitude /= N;
    return rep;
}

std::string TrainedModel::to_json() const {
    json j;
    j["kernel"]["kind"] = kernel_kind_name(kernel.kind);
    if (kernel.kind != KernelKind::Linear) j["kernel"]["gamma"] = kernel.gamma;
    j["k"] = k;
    j["theta_uu"] = mat_to_json(theta_uu);
    json sigs = json::array();
    for (const auto& s : train_signals) sigs.push_back(vec_to_json(s));
    j["signals"] = sigs;
    json al = json::array();
    for (const auto& a : alpha) al.push_back(vec_to_json(a));
    j["alpha"] = al;
    j["norm"]["mean"] = vec_to_json(norm.mean);
    j["norm"]["std"] = vec_to_json(norm.std);
    j["meta"] = meta;
    return j.dump();
}

TrainedModel TrainedModel::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
    TrainedModel m;
    m.kernel.kind = kernel_kind_from_name(j.at("kernel").at("kind").get<std::string>());
    if (m.kernel.kind != KernelKind::Linear) {
        m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
    }
    m.k = j.at("k").get<double>();
    m.theta_uu = mat_from_json(j.at("theta_uu"));
    for (const auto& s : j.at("signals")) m.train_signals.push_back(vec_from_json(s));
    for (const auto& a : j.at("alpha")) m.alpha.push_back(vec_from_json(a));
    m.norm.mean = vec_from_json(j.at("norm").at("mean"));
    m.norm.std = vec_from_json(j.at("norm").at("std"));
    if (j.contains("meta")) {
        for (auto& [key, val] : j.at("meta").items()) {
            m.meta[key] = val.get<std::string>();
        }
    }
    return m;
}

void TrainedModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    out << to_json() << "\n";
}

TrainedModel TrainedModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace kio
