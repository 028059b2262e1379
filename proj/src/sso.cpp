#include "kio/sso.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace kio {

namespace {

constexpr double kStrictTol = 1e-9;  // strict-eligibility margin

double violator_from_g(const ProblemData& pd, const DualState& x, int i,
                       const Vector& g_i) {
    const int N = pd.N();
    return std::abs(x.lambda[i].trace() + 2.0 * x.gamma[i].dot(g_i) +
                    g_i.squaredNorm() / (4.0 * N));
}

}  // namespace

double kkt_violator(const ProblemData& pd, const DualState& x, int i) {
    const int N = pd.N();
    if (i < 0 || i >= N) throw IndexOutOfRange("kkt_violator: bad index");
    Vector g_i = Vector::Zero(pd.n());
    for (int j = 0; j < N; ++j) {
        g_i += pd.gram.K(j, i) *
               (2.0 * x.gamma[j] - pd.dataset.records[j].u / N);
    }
    g_i *= 2.0 / pd.k;
    return violator_from_g(pd, x, i, g_i);
}

Vector kkt_violators(const ProblemData& pd, const DualState& x) {
    const int N = pd.N();
    Matrix G = dual_linear_terms(pd, x);
    Vector v(N);
    for (int i = 0; i < N; ++i) v(i) = violator_from_g(pd, x, i, G.col(i));
    return v;
}

std::vector<bool> eligible_mask(const ProblemData& pd, const DualState& x) {
    const int N = pd.N();
    std::vector<bool> mask(N);
    for (int i = 0; i < N; ++i) {
        const auto& rec = pd.dataset.records[i];
        Vector slack = rec.W / N - 2.0 * rec.M * x.gamma[i];
        mask[i] = slack.minCoeff() > kStrictTol;
    }
    return mask;
}

Selection select_coordinates(const ProblemData& pd, const DualState& x,
                             const SsoConfig& cfg, std::mt19937_64& rng) {
    const int N = pd.N();
    const int p = cfg.p > 0 ? std::min(cfg.p, N) : std::max(1, N / 2);
    const double rho = cfg.random_fraction;
    const int want_heuristic = static_cast<int>(std::ceil((1.0 - rho) * p));

    Vector scores = kkt_violators(pd, x);
    std::vector<bool> mask = eligible_mask(pd, x);

    std::vector<int> eligible;
    for (int i = 0; i < N; ++i) {
        if (mask[i]) eligible.push_back(i);
    }
    // Rank by violator descending, ties by ascending index.
    std::stable_sort(eligible.begin(), eligible.end(), [&](int a, int b) {
        if (scores(a) != scores(b)) return scores(a) > scores(b);
        return a < b;
    });

    Selection sel;
    std::vector<bool> taken(N, false);
    for (int i : eligible) {
        if (sel.n_heuristic >= want_heuristic) break;
        sel.indices.push_back(i);
        taken[i] = true;
        ++sel.n_heuristic;
    }

    // Remaining picks (the random share plus any eligibility deficit) are
    // drawn uniformly without replacement from the complement.
    std::vector<int> pool;
    for (int i = 0; i < N; ++i) {
        if (!taken[i]) pool.push_back(i);
    }
    while (static_cast<int>(sel.indices.size()) < p && !pool.empty()) {
        std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
        size_t j = pick(rng);
        sel.indices.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<long>(j));
        ++sel.n_random;
    }
    // Heuristic picks occupy the first n_heuristic slots.
    return sel;
}

DualState warm_up(const ProblemData& pd, const SsoConfig& cfg) {
    const int N = pd.N();
    const int n_b = std::min(cfg.warmup_partitions, N);
    DualState x = DualState::zero(N, pd.n(), DualMode::Simplified);
    if (n_b < 1) return x;

    int start = 0;
    for (int b = 0; b < n_b; ++b) {
        int len = N / n_b + (b < N % n_b ? 1 : 0);
        std::vector<int> S(len);
        std::iota(S.begin(), S.end(), start);
        start += len;
        if (cfg.paper_literal_warmup) {
            // Literal variant: each partition is solved as if it were the
            // whole dataset (per-partition scalings). No feasibility
            // guarantee for the full problem.
            Dataset part;
            part.shared_constraints = pd.dataset.shared_constraints;
            for (int i : S) part.records.push_back(pd.dataset.records[i]);
            ProblemData sub =
                make_problem(std::move(part), pd.gram.kernel, pd.k, pd.scalar,
                             DualMode::Simplified);
            DualState xs = DualState::zero(len, pd.n(), DualMode::Simplified);
            std::vector<int> all(len);
            std::iota(all.begin(), all.end(), 0);
            xs = solve_subproblem_simplified(sub, xs, all);
            for (int i = 0; i < len; ++i) {
                x.gamma[S[i]] = xs.gamma[i];
                x.lambda[S[i]] = xs.lambda[i];
            }
        } else {
            x = solve_subproblem_simplified(pd, x, S);
        }
    }
    return x;
}

SsoResult sso_train(const ProblemData& pd, const SsoConfig& cfg) {
    if (cfg.T < 1) throw Error("sso_train: T must be >= 1");
    if (cfg.random_fraction < 0.0 || cfg.random_fraction > 1.0) {
        throw Error("sso_train: random_fraction must be in [0,1]");
    }
    const int N = pd.N();
    const int p = cfg.p > 0 ? std::min(cfg.p, N) : std::max(1, N / 2);

    std::mt19937_64 rng(cfg.seed);
    SsoResult res;
    res.state = cfg.warmup_partitions > 0
                    ? warm_up(pd, cfg)
                    : DualState::zero(N, pd.n(), DualMode::Simplified);

    const int sweep = std::max(1, (N + p - 1) / p);
    double best = eval_dual_objective(pd, res.state);
    int stagnant = 0;

    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    for (int t = 1; t <= cfg.T; ++t) {
        Selection sel = select_coordinates(pd, res.state, cfg, rng);
        res.state = solve_subproblem_simplified(pd, res.state, sel.indices);

        double obj = eval_dual_objective(pd, res.state);
        Vector scores = kkt_violators(pd, res.state);
        std::vector<bool> mask = eligible_mask(pd, res.state);
        double max_viol = 0.0;
        for (int i = 0; i < N; ++i) {
            if (mask[i]) max_viol = std::max(max_viol, scores(i));
        }
        double ms = std::chrono::duration<double, std::milli>(clock::now() - t0)
                        .count();
        res.log.rows.push_back(
            {t, obj, max_viol, ms, sel.n_heuristic, sel.n_random});

        if (best - obj < cfg.stop_tol * std::max(1.0, std::abs(best))) {
            if (++stagnant >= sweep) {
                res.log.converged = true;
                break;
            }
        } else {
            stagnant = 0;
        }
        best = std::min(best, obj);
    }
    return res;
}

std::string ConvergenceLog::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "iter,objective,max_violator,time_ms,n_heuristic,n_random\n";
    for (const auto& r : rows) {
        out << r.iteration << ',' << r.objective << ',' << r.max_violator << ','
            << r.time_ms << ',' << r.n_heuristic << ',' << r.n_random << '\n';
    }
    return out.str();
}

}  // namespace kio
