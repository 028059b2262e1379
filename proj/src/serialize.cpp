#include "kio/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

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

std::string dual_state_to_json(const DualState& x, double k, double scalar,
                               DualMode mode) {
    json j;
    j["mode"] = mode == DualMode::Simplified ? "simplified" : "general";
    j["k"] = k;
    j["scalar"] = scalar;
    json gs = json::array();
    for (const auto& g : x.gamma) gs.push_back(vec_to_json(g));
    j["gamma"] = gs;
    json ls = json::array();
    for (const auto& l : x.lambda) ls.push_back(mat_to_json(l));
    j["lambda"] = ls;
    if (x.P) j["P"] = mat_to_json(*x.P);
    return j.dump();
}

DualCheckpoint dual_state_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("dual-state file: ") + e.what());
    }
    DualCheckpoint cp;
    cp.mode = j.at("mode").get<std::string>() == "general" ? DualMode::General
                                                           : DualMode::Simplified;
    cp.k = j.at("k").get<double>();
    cp.scalar = j.value("scalar", 1.0);
    for (const auto& g : j.at("gamma")) cp.state.gamma.push_back(vec_from_json(g));
    for (const auto& l : j.at("lambda")) cp.state.lambda.push_back(mat_from_json(l));
    if (j.contains("P")) cp.state.P = mat_from_json(j.at("P"));
    return cp;
}

void save_dual_state(const std::string& path, const DualState& x, double k,
                     double scalar, DualMode mode) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write dual-state file: " + path);
    out << dual_state_to_json(x, k, scalar, mode) << "\n";
}

DualCheckpoint load_dual_state(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dual-state file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return dual_state_from_json(ss.str());
}

std::string expert_spec_to_json(const SyntheticExpertSpec& spec) {
    json j;
    j["n"] = spec.n;
    j["d_s"] = spec.d_s;
    j["theta_uu_true"] = mat_to_json(spec.theta_uu_true);
    j["theta_su_true"] = mat_to_json(spec.theta_su_true);
    switch (spec.feature_map.kind) {
        case FeatureKind::Linear:
            j["feature_map"]["kind"] = "linear";
            break;
        case FeatureKind::RandomFourier:
            j["feature_map"]["kind"] = "rff";
            j["feature_map"]["count"] = spec.feature_map.count;
            j["feature_map"]["bandwidth"] = spec.feature_map.bandwidth;
            j["feature_map"]["seed"] = spec.feature_map.seed;
            break;
        case FeatureKind::Polynomial:
            j["feature_map"]["kind"] = "poly";
            j["feature_map"]["degree"] = spec.feature_map.degree;
            break;
    }
    if (spec.constraint_kind == ConstraintKind::Box) {
        j["constraints"]["kind"] = "box";
        j["constraints"]["bound"] = spec.box_bound;
    } else {
        j["constraints"]["kind"] = "general";
        j["constraints"]["M"] = mat_to_json(spec.M);
        j["constraints"]["W"] = vec_to_json(spec.W);
    }
    j["noise_std"] = spec.noise_std;
    j["seed"] = spec.seed;
    return j.dump();
}

SyntheticExpertSpec expert_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("expert-spec file: ") + e.what());
    }
    SyntheticExpertSpec spec;
    spec.n = j.at("n").get<int>();
    spec.d_s = j.at("d_s").get<int>();
    spec.theta_uu_true = mat_from_json(j.at("theta_uu_true"));
    spec.theta_su_true = mat_from_json(j.at("theta_su_true"));
    const auto& fmap = j.at("feature_map");
    std::string kind = fmap.at("kind").get<std::string>();
    if (kind == "linear") {
        spec.feature_map.kind = FeatureKind::Linear;
    } else if (kind == "rff") {
        spec.feature_map.kind = FeatureKind::RandomFourier;
        spec.feature_map.count = fmap.at("count").get<int>();
        spec.feature_map.bandwidth = fmap.at("bandwidth").get<double>();
        spec.feature_map.seed = fmap.at("seed").get<std::uint64_t>();
    } else if (kind == "poly") {
        spec.feature_map.kind = FeatureKind::Polynomial;
        spec.feature_map.degree = fmap.at("degree").get<int>();
    } else {
        throw ParseError("unknown feature map kind: " + kind);
    }
    const auto& cons = j.at("constraints");
    if (cons.at("kind").get<std::string>() == "box") {
        spec.constraint_kind = ConstraintKind::Box;
        spec.box_bound = cons.at("bound").get<double>();
    } else {
        spec.constraint_kind = ConstraintKind::General;
        spec.M = mat_from_json(cons.at("M"));
        spec.W = vec_from_json(cons.at("W"));
    }
    spec.noise_std = j.at("noise_std").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

void save_expert_spec(const SyntheticExpertSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write expert-spec file: " + path);
    out << expert_spec_to_json(spec) << "\n";
}

SyntheticExpertSpec load_expert_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open expert-spec file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return expert_spec_from_json(ss.str());
}

}  // namespace kio
