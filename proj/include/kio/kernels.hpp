#pragma once

#include <string>
#include <vector>

#include "kio/types.hpp"

namespace kio {

enum class KernelKind { Rbf, Laplace, Linear };

struct KernelSpec {
    KernelKind kind = KernelKind::Rbf;
    double gamma = 1.0;  // ignored for the linear kernel

    static KernelSpec rbf(double gamma) { return {KernelKind::Rbf, gamma}; }
    static KernelSpec laplace(double gamma) { return {KernelKind::Laplace, gamma}; }
    static KernelSpec linear() { return {KernelKind::Linear, 0.0}; }
};

struct GramMatrix {
    Matrix K;
    KernelSpec kernel;
};

double kernel_eval(const KernelSpec& spec, const Vector& s, const Vector& t);

GramMatrix gram(const KernelSpec& spec, const std::vector<Vector>& signals);

Vector kernel_cross(const KernelSpec& spec, const Vector& new_signal,
                    const std::vector<Vector>& signals);

// Scale heuristic used when gamma is unspecified: 1 / (d_s * var(signals)).
double default_gamma(const std::vector<Vector>& signals);

std::string kernel_kind_name(KernelKind kind);
KernelKind kernel_kind_from_name(const std::string& name);

}  // namespace kio
