#pragma once

#include "gridse/common.hpp"

namespace gridse {

enum class RuleKind { gauss_hermite_tensor, cubature_spherical_radial };

/// Nodes and weights for expectations under the standard normal in d
/// dimensions; weights use the probabilists' normalization (sum to one).
struct QuadratureRule {
    std::vector<Vec> nodes;
    std::vector<double> weights;
    RuleKind kind = RuleKind::gauss_hermite_tensor;

    int size() const { return static_cast<int>(nodes.size()); }
    Eigen::Index dim() const { return nodes.empty() ? 0 : nodes.front().size(); }
};

/// Probabilists' Gauss-Hermite rule, exact for polynomials of degree
/// <= 2q-1 under N(0,1). Nodes via the symmetric Jacobi matrix.
inline QuadratureRule gauss_hermite_1d(int q) {
    if (q < 1 || q > 30) throw UnsupportedOrder("gauss_hermite_1d: q = " + std::to_string(q));
    QuadratureRule rule;
    rule.kind = RuleKind::gauss_hermite_tensor;
    if (q == 1) {
        rule.nodes.push_back(Vec::Zero(1));
        rule.weights.push_back(1.0);
        return rule;
    }
    Mat jacobi = Mat::Zero(q, q);
    for (int k = 1; k < q; ++k) {
        const double off = std::sqrt(static_cast<double>(k));
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
    std::vector<double> xs(static_cast<size_t>(q));
    std::vector<double> ws(static_cast<size_t>(q));
    for (int i = 0; i < q; ++i) {
        xs[static_cast<size_t>(i)] = es.eigenvalues()[i];  // already ascending
        const double v0 = es.eigenvectors()(0, i);
        ws[static_cast<size_t>(i)] = v0 * v0;
    }
    // enforce the exact +- symmetry of the rule so odd moments cancel
    for (int i = 0, j = q - 1; i < j; ++i, --j) {
        const double x = 0.5 * (xs[static_cast<size_t>(j)] - xs[static_cast<size_t>(i)]);
        const double w = 0.5 * (ws[static_cast<size_t>(i)] + ws[static_cast<size_t>(j)]);
        xs[static_cast<size_t>(i)] = -x;
        xs[static_cast<size_t>(j)] = x;
        ws[static_cast<size_t>(i)] = w;
        ws[static_cast<size_t>(j)] = w;
    }
    if (q % 2 == 1) xs[static_cast<size_t>(q / 2)] = 0.0;
    double sum = 0.0;
    for (double w : ws) sum += w;
    rule.nodes.reserve(static_cast<size_t>(q));
    rule.weights.reserve(static_cast<size_t>(q));
    for (int i = 0; i < q; ++i) {
        Vec node(1);
        node[0] = xs[static_cast<size_t>(i)];
        rule.nodes.push_back(node);
        rule.weights.push_back(ws[static_cast<size_t>(i)] / sum);
    }
    return rule;
}

/// d-fold tensor product of the 1-d Gauss-Hermite rule (q^d nodes).
inline QuadratureRule tensor_rule(int q, int d) {
    if (d < 1) throw UnsupportedOrder("tensor_rule: d must be >= 1");
    double count = 1.0;
    for (int k = 0; k < d; ++k) {
        count *= q;
        if (count > 1e6) throw RuleTooLarge("tensor rule q^d exceeds 1e6 nodes");
    }
    const QuadratureRule base = gauss_hermite_1d(q);
    QuadratureRule rule;
    rule.kind = RuleKind::gauss_hermite_tensor;
    rule.nodes.assign(1, Vec::Zero(d));
    rule.weights.assign(1, 1.0);
    for (int axis = 0; axis < d; ++axis) {
        std::vector<Vec> nodes;
        std::vector<double> weights;
        nodes.reserve(rule.nodes.size() * base.nodes.size());
        weights.reserve(nodes.capacity());
        for (size_t i = 0; i < rule.nodes.size(); ++i) {
            for (size_t j = 0; j < base.nodes.size(); ++j) {
                Vec n = rule.nodes[i];
                n[axis] = base.nodes[j][0];
                nodes.push_back(std::move(n));
                weights.push_back(rule.weights[i] * base.weights[j]);
            }
        }
        rule.nodes = std::move(nodes);
        rule.weights = std::move(weights);
    }
    return rule;
}

/// Degree-3 spherical-radial cubature: 2d nodes at +-sqrt(d) e_k with
/// uniform weights. Cost linear in d, exact for total degree <= 3.
inline QuadratureRule cubature_rule(int d) {
    if (d < 1) throw UnsupportedOrder("cubature_rule: d must be >= 1");
    QuadratureRule rule;
    rule.kind = RuleKind::cubature_spherical_radial;
    const double radius = std::sqrt(static_cast<double>(d));
    const double w = 1.0 / (2.0 * d);
    rule.nodes.reserve(static_cast<size_t>(2 * d));
    rule.weights.assign(static_cast<size_t>(2 * d), w);
    for (int k = 0; k < d; ++k) {
        Vec plus = Vec::Zero(d);
        plus[k] = radius;
        rule.nodes.push_back(plus);
        rule.nodes.push_back(-plus);
    }
    return rule;
}

/// Engine selection used by the mixture filter: tensor grids are affordable
/// only in low dimension.
inline QuadratureRule default_rule(int d, int q = 3) {
    return d > 4 ? cubature_rule(d) : tensor_rule(q, d);
}

/// Nodes of `rule` mapped through x = mean + L z for N(mean, cov).
inline std::vector<Vec> transformed_nodes(const QuadratureRule& rule, const Vec& mean,
                                          const Mat& cov) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw LengthMismatch("cov/mean dimension mismatch");
    Eigen::LLT<Mat> llt(cov);
    Mat L;
    if (llt.info() == Eigen::Success) {
        L = llt.matrixL();
    } else {
        L = robust_cholesky(cov);
    }
    std::vector<Vec> out;
    out.reserve(rule.nodes.size());
    for (const auto& z : rule.nodes) out.push_back(mean + L * z);
    return out;
}

/// Weighted sum of integrand values over the transformed nodes. The
/// integrand may return a scalar, vector, or matrix.
template <typename F>
auto gaussian_expectation(const QuadratureRule& rule, const Vec& mean, const Mat& cov,
                          F&& integrand) {
    const auto nodes = transformed_nodes(rule, mean, cov);
    auto acc = integrand(nodes[0]);
    acc = acc * rule.weights[0];
    for (size_t k = 1; k < nodes.size(); ++k) {
        auto val = integrand(nodes[k]);
        acc = acc + val * rule.weights[k];
    }
    return acc;
}

}  // namespace gridse
