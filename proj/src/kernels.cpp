#include "kio/kernels.hpp"

#include <cmath>

namespace kio {

double kernel_eval(const KernelSpec& spec, const Vector& s, const Vector& t) {
    if (s.size() != t.size()) {
        throw DimensionError("kernel_eval: signal dimensions differ");
    }
    switch (spec.kind) {
        case KernelKind::Rbf:
            return std::exp(-spec.gamma * (s - t).squaredNorm());
        case KernelKind::Laplace:
            return std::exp(-spec.gamma * (s - t).lpNorm<1>());
        case KernelKind::Linear:
            return s.dot(t);
    }
    throw Error("kernel_eval: unknown kernel kind");
}

GramMatrix gram(const KernelSpec& spec, const std::vector<Vector>& signals) {
    const int N = static_cast<int>(signals.size());
    if (N < 1) throw DimensionError("gram: empty signal list");
    Matrix K(N, N);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j <= i; ++j) {
            double v = kernel_eval(spec, signals[i], signals[j]);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return {std::move(K), spec};
}

Vector kernel_cross(const KernelSpec& spec, const Vector& new_signal,
                    const std::vector<Vector>& signals) {
    Vector v(signals.size());
    for (int i = 0; i < static_cast<int>(signals.size()); ++i) {
        v(i) = kernel_eval(spec, new_signal, signals[i]);
    }
    return v;
}

double default_gamma(const std::vector<Vector>& signals) {
    const int N = static_cast<int>(signals.size());
    const int d = static_cast<int>(signals.front().size());
    Vector mean = Vector::Zero(d);
    for (const auto& s : signals) mean += s;
    mean /= N;
    double var = 0.0;
    for (const auto& s : signals) var += (s - mean).squaredNorm();
    var /= N * d;
    if (var < 1e-12) var = 1.0;
    return 1.0 / (d * var);
}

std::string kernel_kind_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::Rbf: return "rbf";
        case KernelKind::Laplace: return "laplace";
        case KernelKind::Linear: return "linear";
    }
    return "unknown";
}

KernelKind kernel_kind_from_name(const std::string& name) {
    if (name == "rbf") return KernelKind::Rbf;
    if (name == "laplace") return KernelKind::Laplace;
    if (name == "linear") return KernelKind::Linear;
    throw ParseError("unknown kernel kind: " + name);
}

}  // namespace kio
