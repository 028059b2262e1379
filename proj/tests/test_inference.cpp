#include <doctest.h>

#include <cstdio>
#include <numeric>
#include <random>

#include "kio/inference.hpp"
#include "kio/sso.hpp"

using namespace kio;

namespace {

Dataset random_box_dataset(int N, int n, int d_s, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Dataset ds;
    Matrix M(2 * n, n);
    M.topRows(n) = Matrix::Identity(n, n);
    M.bottomRows(n) = -Matrix::Identity(n, n);
    Vector W = Vector::Constant(2 * n, 1.0);
    for (int i = 0; i < N; ++i) {
        SignalDecisionRecord rec;
        rec.s.resize(d_s);
        for (int j = 0; j < d_s; ++j) rec.s(j) = uni(rng);
        rec.u.resize(n);
        for (int j = 0; j < n; ++j) rec.u(j) = 0.9 * uni(rng);
        rec.M = M;
        rec.W = W;
        ds.records.push_back(rec);
    }
    return ds;
}

NormalizationStats identity_norm(int d_s) {
    return {Vector::Zero(d_s), Vector::Ones(d_s)};
}

TrainedModel train_full(const ProblemData& pd, const NormalizationStats& norm) {
    std::vector<int> S(pd.N());
    std::iota(S.begin(), S.end(), 0);
    DualState x = solve_subproblem_simplified(
        pd, DualState::zero(pd.N(), pd.n(), DualMode::Simplified), S);
    return recover_model(pd, x, norm);
}

}  // namespace

TEST_CASE("alpha recovery arithmetic") {
    Dataset ds = random_box_dataset(4, 2, 2, 1);
    ProblemData pd = make_problem(ds, KernelSpec::rbf(1.0), 0.5, 1.0,
                                  DualMode::Simplified);
    DualState x = DualState::zero(4, 2, DualMode::Simplified);

    SUBCASE("cancellation at Gamma = u/(2N)") {
        for (int i = 0; i < 4; ++i) x.gamma[i] = ds.records[i].u / 8.0;
        TrainedModel m = recover_model(pd, x, identity_norm(2));
        for (const auto& a : m.alpha) CHECK(a.lpNorm<Eigen::Infinity>() < 1e-14);
    }

    SUBCASE("N=1 style arithmetic") {
        Dataset one;
        one.records.push_back(ds.records[0]);
        one.records[0].u = Vector::Constant(2, 1.0);
        ProblemData p1 = make_problem(one, KernelSpec::linear(), 1.0, 1.0,
                                      DualMode::Simplified);
        DualState y = DualState::zero(1, 2, DualMode::Simplified);
        y.gamma[0] = Vector::Constant(2, 0.25);
        TrainedModel m = recover_model(p1, y, identity_norm(2));
        CHECK(m.alpha[0](0) == doctest::Approx(-1.0));  // 2*(0.5 - 1)
        CHECK((m.theta_uu - Matrix::Identity(2, 2)).norm() == 0.0);
    }
}

TEST_CASE("build_fop assembles the kernel combination") {
    Dataset ds = random_box_dataset(5, 2, 3, 3);
    ProblemData pd = make_problem(ds, KernelSpec::rbf(1.0), 0.1, 1.0,
                                  DualMode::Simplified);
    DualState x = DualState::zero(5, 2, DualMode::Simplified);
    TrainedModel m = recover_model(pd, x, identity_norm(3));

    SUBCASE("all-zero alpha gives zero linear term") {
        for (auto& a : m.alpha) a.setZero();
        FopInstance f = build_fop(m, ds.records[0].s, ds.records[0].M,
                                  ds.records[0].W);
        CHECK(f.c.lpNorm<Eigen::Infinity>() == 0.0);
    }

    SUBCASE("stored-signal query with a single nonzero alpha") {
        for (auto& a : m.alpha) a.setZero();
        m.alpha[2] = Vector::Constant(2, 1.5);
        FopInstance f = build_fop(m, ds.records[2].s, ds.records[2].M,
                                  ds.records[2].W);
        Vector expect = m.alpha[2];
        for (int i = 0; i < 5; ++i) {
            if (i == 2) continue;
            // kernel weights multiply zero alphas
        }
        CHECK((f.c - expect).lpNorm<Eigen::Infinity>() < 1e-12);
    }

    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(build_fop(m, Vector::Zero(4), ds.records[0].M,
                                  ds.records[0].W),
                        DimensionError);
    }
}

TEST_CASE("linear-kernel implicit path equals the explicit-feature path") {
    Dataset ds = random_box_dataset(10, 2, 3, 5);
    ProblemData pd = make_problem(ds, KernelSpec::linear(), 0.05, 1.0,
                                  DualMode::Simplified);
    std::vector<int> S(10);
    std::iota(S.begin(), S.end(), 0);
    DualState x = solve_subproblem_simplified(
        pd, DualState::zero(10, 2, DualMode::Simplified), S);
    TrainedModel m = recover_model(pd, x, identity_norm(3));

    Matrix theta_su = Matrix::Zero(3, 2);
    for (int i = 0; i < 10; ++i) {
        theta_su += ds.records[i].s *
                    (2.0 * x.gamma[i] - ds.records[i].u / 10.0).transpose() /
                    pd.k;
    }
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int t = 0; t < 25; ++t) {
        Vector s(3);
        for (int j = 0; j < 3; ++j) s(j) = uni(rng);
        FopInstance f = build_fop(m, s, ds.records[0].M, ds.records[0].W);
        Vector explicit_c = 2.0 * theta_su.transpose() * s;
        CHECK((f.c - explicit_c).lpNorm<Eigen::Infinity>() < 1e-10);
        Vector u_implicit = solve_fop(f);
        FopInstance fe{f.Q, explicit_c, f.M, f.W};
        Vector u_explicit = solve_fop(fe);
        CHECK((u_implicit - u_explicit).lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("solve_fop closed forms") {
    SUBCASE("identity objective, wide box") {
        Vector c(2);
        c << -1.0, 0.4;
        Matrix M(4, 2);
        M.topRows(2) = Matrix::Identity(2, 2);
        M.bottomRows(2) = -Matrix::Identity(2, 2);
        FopInstance f{Matrix::Identity(2, 2), c, M, Vector::Constant(4, 10.0)};
        Vector u = solve_fop(f);
        CHECK((u + c / 2.0).lpNorm<Eigen::Infinity>() < 1e-9);
    }
    SUBCASE("componentwise clip on the unit box") {
        Vector c(3);
        c << -4.0, 1.0, 0.2;
        Matrix M(6, 3);
        M.topRows(3) = Matrix::Identity(3, 3);
        M.bottomRows(3) = -Matrix::Identity(3, 3);
        FopInstance f{Matrix::Identity(3, 3), c, M, Vector::Constant(6, 1.0)};
        Vector u = solve_fop(f);
        CHECK(u(0) == doctest::Approx(1.0));
        CHECK(u(1) == doctest::Approx(-0.5));
        CHECK(u(2) == doctest::Approx(-0.1));
    }
    SUBCASE("random Q against a grid oracle") {
        std::mt19937_64 rng(13);
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix R(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) R(i, j) = normal(rng);
        Matrix Q = R * R.transpose() + Matrix::Identity(2, 2);
        Vector c(2);
        c << 0.7, -1.3;
        Matrix M(4, 2);
        M.topRows(2) = Matrix::Identity(2, 2);
        M.bottomRows(2) = -Matrix::Identity(2, 2);
        FopInstance f{Q, c, M, Vector::Constant(4, 1.0)};
        Vector u = solve_fop(f);
        double val = u.dot(Q * u) + c.dot(u);
        double best = 1e100;
        for (double a = -1.0; a <= 1.0; a += 1e-3) {
            for (double b = -1.0; b <= 1.0; b += 1e-3) {
                Vector v(2);
                v << a, b;
                best = std::min(best, v.dot(Q * v) + c.dot(v));
            }
        }
        CHECK(std::abs(val - best) < 2e-3);
        CHECK(val <= best + 1e-9);
    }
    SUBCASE("infeasible region") {
        Matrix M(2, 1);
        M << 1.0, -1.0;
        Vector W(2);
        W << -1.0, -1.0;
        FopInstance f{Matrix::Identity(1, 1), Vector::Zero(1), M, W};
        CHECK_THROWS_AS(solve_fop(f), Infeasible);
    }
}

TEST_CASE("suboptimality loss") {
    Dataset ds = random_box_dataset(8, 2, 2, 21);
    ProblemData pd = make_problem(ds, KernelSpec::rbf(1.0), 0.05, 1.0,
                                  DualMode::Simplified);
    NormalizationStats norm = identity_norm(2);

    SUBCASE("zero model charges the decision norms") {
        DualState x = DualState::zero(8, 2, DualMode::Simplified);
        TrainedModel zero_model = recover_model(pd, x, norm);
        for (auto& a : zero_model.alpha) a.setZero();
        double loss = suboptimality_loss(zero_model, ds);
        double expect = 0.0;
        for (const auto& rec : ds.records) expect += rec.u.squaredNorm();
        CHECK(loss == doctest::Approx(expect / 8.0).epsilon(1e-9));
    }

    SUBCASE("replaying model-optimal decisions gives zero loss") {
        TrainedModel m = train_full(pd, norm);
        Dataset replay = ds;
        for (auto& rec : replay.records) {
            rec.u = predict(m, rec.s, rec.M, rec.W);
        }
        CHECK(suboptimality_loss(m, replay) <= 2 * kFopTol);
    }

    SUBCASE("training beats the zero model on the training set") {
        TrainedModel m = train_full(pd, norm);
        DualState x = DualState::zero(8, 2, DualMode::Simplified);
        TrainedModel zero_model = recover_model(pd, x, norm);
        for (auto& a : zero_model.alpha) a.setZero();
        CHECK(suboptimality_loss(m, ds) <=
              suboptimality_loss(zero_model, ds) + 1e-9);
    }

    SUBCASE("loss is never meaningfully negative") {
        TrainedModel m = train_full(pd, norm);
        Dataset other = random_box_dataset(6, 2, 2, 77);
        CHECK(suboptimality_loss(m, other) >= -2 * kFopTol);
    }
}

TEST_CASE("model JSON round trip preserves predictions") {
    Dataset ds = random_box_dataset(7, 2, 3, 31);
    NormalizationStats norm = fit_normalizer(ds);
    Dataset nds = apply_normalizer(ds, norm);
    ProblemData pd = make_problem(nds, KernelSpec::rbf(0.9), 0.02, 1.0,
                                  DualMode::Simplified);
    TrainedModel m = train_full(pd, norm);
    m.meta["note"] = "test";

    std::string path = "/tmp/kio_test_model.json";
    m.save(path);
    TrainedModel back = TrainedModel::load(path);
    std::remove(path.c_str());

    CHECK(back.meta.at("note") == "test");
    CHECK(back.k == m.k);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        Vector s(3);
        for (int j = 0; j < 3; ++j) s(j) = uni(rng);
        Vector a = predict(m, s, ds.records[0].M, ds.records[0].W);
        Vector b = predict(back, s, ds.records[0].M, ds.records[0].W);
        CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("imitation evaluation") {
    SyntheticExpertSpec spec;
    spec.n = 2;
    spec.d_s = 2;
    spec.theta_uu_true = Matrix::Identity(2, 2);
    spec.feature_map.kind = FeatureKind::Linear;
    spec.theta_su_true = Matrix(2, 2);
    spec.theta_su_true << 0.5, -0.2, 0.1, 0.4;
    spec.seed = 3;
    Dataset test = generate_synthetic(spec, 40);

    SUBCASE("oracle-constructed model has negligible regret") {
        // Linear kernel, alpha chosen so the kernel combination reproduces
        // 2 theta_su' s exactly: alpha_i from a least-squares fit is overkill;
        // instead store basis signals.
        TrainedModel m;
        m.kernel = KernelSpec::linear();
        m.norm = identity_norm(2);
        m.k = 1.0;
        m.theta_uu = Matrix::Identity(2, 2);
        m.train_signals = {Vector::Unit(2, 0), Vector::Unit(2, 1)};
        m.alpha = {2.0 * spec.theta_su_true.row(0).transpose(),
                   2.0 * spec.theta_su_true.row(1).transpose()};
        ImitationReport rep = evaluate_imitation(m, spec, test);
        CHECK(rep.regret <= 1e-6);
        CHECK(rep.decision_error <= 1e-6);
    }

    SUBCASE("zero model has strictly positive regret") {
        TrainedModel m;
        m.kernel = KernelSpec::linear();
        m.norm = identity_norm(2);
        m.k = 1.0;
        m.theta_uu = Matrix::Identity(2, 2);
        m.train_signals = {Vector::Zero(2)};
        m.alpha = {Vector::Zero(2)};
        ImitationReport rep = evaluate_imitation(m, spec, test);
        CHECK(rep.regret > 1e-3);
    }
}
