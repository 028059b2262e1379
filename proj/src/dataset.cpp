#include "kio/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "kio/qp.hpp"

namespace kio {

using nlohmann::json;

namespace {

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
        if (static_cast<int>(j[r].size()) != cols) {
            throw ParseError("ragged matrix in dataset file");
        }
        for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

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

void check_finite(const SignalDecisionRecord& rec, int idx) {
    if (!rec.s.allFinite() || !rec.u.allFinite() || !rec.M.allFinite() ||
        !rec.W.allFinite()) {
        throw ParseError("non-finite entry in record " + std::to_string(idx));
    }
}

}  // namespace

Vector NormalizationStats::normalize(const Vector& s) const {
    return (s - mean).cwiseQuotient(std);
}

Vector NormalizationStats::denormalize(const Vector& z) const {
    return z.cwiseProduct(std) + mean;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset file: " + path);
    Dataset ds;
    ds.name = path;
    std::string line;
    bool have_header = false;
    Matrix shared_M;
    Vector shared_W;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (j.contains("header")) {
            const json& h = j["header"];
            ds.shared_constraints = h.value("shared_constraints", false);
            if (ds.shared_constraints) {
                if (!h.contains("M") || !h.contains("W")) {
                    throw ParseError("shared_constraints header lacks M/W");
                }
                shared_M = mat_from_json(h["M"]);
                shared_W = vec_from_json(h["W"]);
            }
            have_header = true;
            continue;
        }
        SignalDecisionRecord rec;
        try {
            rec.s = vec_from_json(j.at("s"));
            rec.u = vec_from_json(j.at("u"));
            if (ds.shared_constraints) {
                rec.M = shared_M;
                rec.W = shared_W;
            } else {
                rec.M = mat_from_json(j.at("M"));
                rec.W = vec_from_json(j.at("W"));
            }
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        ds.records.push_back(std::move(rec));
    }
    (void)have_header;
    if (ds.records.empty()) throw ParseError("dataset is empty: " + path);
    validate_dataset(ds);
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write dataset file: " + path);
    if (ds.shared_constraints) {
        json h;
        h["header"]["n"] = ds.n();
        h["header"]["d_s"] = ds.d_s();
        h["header"]["m"] = ds.m();
        h["header"]["shared_constraints"] = true;
        h["header"]["M"] = mat_to_json(ds.records.front().M);
        h["header"]["W"] = vec_to_json(ds.records.front().W);
        out << h.dump() << "\n";
    }
    for (const auto& rec : ds.records) {
        json j;
        j["s"] = vec_to_json(rec.s);
        j["u"] = vec_to_json(rec.u);
        if (!ds.shared_constraints) {
            j["M"] = mat_to_json(rec.M);
            j["W"] = vec_to_json(rec.W);
        }
        out << j.dump() << "\n";
    }
}

void validate_dataset(const Dataset& ds) {
    if (ds.records.empty()) throw ParseError("dataset has no records");
    const auto& first = ds.records.front();
    const int n = static_cast<int>(first.u.size());
    const int d_s = static_cast<int>(first.s.size());
    const int m = static_cast<int>(first.W.size());
    for (int i = 0; i < ds.size(); ++i) {
        const auto& rec = ds.records[i];
        check_finite(rec, i);
        if (rec.u.size() != n || rec.s.size() != d_s || rec.W.size() != m ||
            rec.M.rows() != m || rec.M.cols() != n) {
            throw DimensionError("record " + std::to_string(i) +
                                 " has inconsistent dimensions");
        }
        double viol = (rec.M * rec.u - rec.W).maxCoeff();
        if (viol > kFeasTol) {
            throw InfeasibleRecord(i, "record " + std::to_string(i) +
                                          " violates its constraints by " +
                                          std::to_string(viol));
        }
    }
}

NormalizationStats fit_normalizer(const Dataset& ds) {
    const int d = ds.d_s();
    const int N = ds.size();
    Vector mean = Vector::Zero(d);
    for (const auto& rec : ds.records) mean += rec.s;
    mean /= N;
    Vector var = Vector::Zero(d);
    for (const auto& rec : ds.records) {
        var += (rec.s - mean).cwiseAbs2();
    }
    var /= N;
    Vector std = var.cwiseSqrt();
    for (int i = 0; i < d; ++i) {
        if (std(i) < 1e-8) std(i) = 1.0;
    }
    return {mean, std};
}

Dataset apply_normalizer(const Dataset& ds, const NormalizationStats& stats) {
    Dataset out = ds;
    for (auto& rec : out.records) rec.s = stats.normalize(rec.s);
    return out;
}

FeatureMap::FeatureMap(FeatureMapSpec spec, int d_s) : spec_(spec), d_s_(d_s) {
    switch (spec_.kind) {
        case FeatureKind::Linear:
            dim_ = d_s;
            break;
        case FeatureKind::RandomFourier: {
            dim_ = spec_.count;
            std::mt19937_64 rng(spec_.seed);
            std::normal_distribution<double> normal(0.0, 1.0);
            std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
            omega_.resize(dim_, d_s);
            phase_.resize(dim_);
            for (int i = 0; i < dim_; ++i) {
                for (int j = 0; j < d_s; ++j) {
                    omega_(i, j) = normal(rng) * spec_.bandwidth;
                }
                phase_(i) = uni(rng);
            }
            break;
        }
        case FeatureKind::Polynomial:
            dim_ = d_s * spec_.degree;
            break;
    }
}

Vector FeatureMap::operator()(const Vector& s) const {
    if (s.size() != d_s_) throw DimensionError("FeatureMap: wrong signal dimension");
    switch (spec_.kind) {
        case FeatureKind::Linear:
            return s;
        case FeatureKind::RandomFourier: {
            Vector z = omega_ * s + phase_;
            return std::sqrt(2.0 / dim_) * z.array().cos().matrix();
        }
        case FeatureKind::Polynomial: {
            // Elementwise powers s, s^2, ..., s^degree.
            Vector out(dim_);
            Vector pow = Vector::Ones(d_s_);
            for (int d = 0; d < spec_.degree; ++d) {
                pow = pow.cwiseProduct(s);
                out.segment(d * d_s_, d_s_) = pow;
            }
            return out;
        }
    }
    throw Error("FeatureMap: unknown kind");
}

int SyntheticExpertSpec::m() const {
    return constraint_kind == ConstraintKind::Box ? 2 * n
                                                  : static_cast<int>(W.size());
}

Matrix SyntheticExpertSpec::constraint_M() const {
    if (constraint_kind == ConstraintKind::General) return M;
    Matrix Mb(2 * n, n);
    Mb.topRows(n) = Matrix::Identity(n, n);
    Mb.bottomRows(n) = -Matrix::Identity(n, n);
    return Mb;
}

Vector SyntheticExpertSpec::constraint_W() const {
    if (constraint_kind == ConstraintKind::General) return W;
    return Vector::Constant(2 * n, box_bound);
}

double true_objective(const SyntheticExpertSpec& spec, const FeatureMap& fm,
                      const Vector& s, const Vector& u) {
    return u.dot(spec.theta_uu_true * u) +
           2.0 * (spec.theta_su_true.transpose() * fm(s)).dot(u);
}

Dataset generate_synthetic(const SyntheticExpertSpec& spec, int N) {
    if (spec.theta_uu_true.rows() != spec.n || spec.theta_uu_true.cols() != spec.n) {
        throw DimensionError("theta_uu_true must be n x n");
    }
    FeatureMap fm(spec.feature_map, spec.d_s);
    if (spec.theta_su_true.rows() != fm.dim() || spec.theta_su_true.cols() != spec.n) {
        throw DimensionError("theta_su_true must be feature_dim x n");
    }

    const Matrix Mc = spec.constraint_M();
    const Vector Wc = spec.constraint_W();
    const Matrix H = 2.0 * spec.theta_uu_true;
    const Vector u_start = find_feasible_point(Mc, Wc);

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Dataset ds;
    ds.shared_constraints = true;
    ds.name = "synthetic";
    ds.records.reserve(N);
    for (int i = 0; i < N; ++i) {
        SignalDecisionRecord rec;
        rec.s.resize(spec.d_s);
        for (int j = 0; j < spec.d_s; ++j) rec.s(j) = uni(rng);
        Vector c = 2.0 * spec.theta_su_true.transpose() * fm(rec.s);
        QpResult r = solve_qp(H, c, Mc, Wc, u_start);
        if (!r.converged) throw SolverFailure("generate_synthetic: FOP solve failed");
        rec.u = r.x;
        if (spec.noise_std > 0.0) {
            Vector noise(spec.n);
            for (int j = 0; j < spec.n; ++j) noise(j) = normal(rng) * spec.noise_std;
            Vector noisy = rec.u + noise;
            if ((Mc * noisy - Wc).maxCoeff() > 0.0) {
                // Project back to the feasible set.
                QpResult proj = solve_qp(2.0 * Matrix::Identity(spec.n, spec.n),
                                         -2.0 * noisy, Mc, Wc, rec.u);
                noisy = proj.x;
            }
            rec.u = noisy;
        }
        rec.M = Mc;
        rec.W = Wc;
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

}  // namespace kio
