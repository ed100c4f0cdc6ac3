#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cud/dataset.hpp"

namespace cud {

struct Coefficients {
    Eigen::VectorXd beta;
};

enum class BasisKind { RawAffine, Polynomial, PrincipalComponents };

// Feature map from raw features to the p-dimensional design row. Derived
// parameters (input width, principal directions) are frozen once against the
// training data and never refit afterwards.
//
//   RawAffine               (1, x_1, ..., x_q)
//   Polynomial(d)           (1, x_1, x_1^2, ..., x_1^d, x_2, ..., x_q^d)
//                           per-feature powers; additive across features
//   PrincipalComponents(k)  projections of the centered row onto the top-k
//                           principal directions of the training features
struct BasisSpec {
    BasisKind kind = BasisKind::RawAffine;
    int degree = 1;      // Polynomial
    int components = 1;  // PrincipalComponents

    bool frozen = false;
    int input_dim = 0;
    Eigen::VectorXd pca_mean;
    Eigen::MatrixXd pca_dirs;  // q x k, orthonormal columns

    static BasisSpec raw_affine() { return BasisSpec{}; }

    static BasisSpec polynomial(int degree) {
        if (degree < 1) throw std::invalid_argument("BasisSpec: polynomial degree must be >= 1");
        BasisSpec b;
        b.kind = BasisKind::Polynomial;
        b.degree = degree;
        return b;
    }

    static BasisSpec principal_components(int k) {
        if (k < 1) throw std::invalid_argument("BasisSpec: component count must be >= 1");
        BasisSpec b;
        b.kind = BasisKind::PrincipalComponents;
        b.components = k;
        return b;
    }

    // Computes and locks the derived parameters from the training data.
    void freeze(const Dataset& train) {
        input_dim = static_cast<int>(train.q());
        if (kind == BasisKind::PrincipalComponents) {
            if (components > input_dim)
                throw std::invalid_argument("BasisSpec: more components than raw features");
            pca_mean = train.features.colwise().mean();
            Eigen::MatrixXd centered = train.features.rowwise() - pca_mean.transpose();
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
            pca_dirs = svd.matrixV().leftCols(components);
            // Deterministic sign: largest-magnitude entry of each direction positive.
            for (Eigen::Index c = 0; c < pca_dirs.cols(); ++c) {
                Eigen::Index imax;
                pca_dirs.col(c).cwiseAbs().maxCoeff(&imax);
                if (pca_dirs(imax, c) < 0) pca_dirs.col(c) = -pca_dirs.col(c);
            }
        }
        frozen = true;
    }

    int expanded_dim() const {
        if (!frozen) throw std::logic_error("BasisSpec: not frozen");
        switch (kind) {
            case BasisKind::RawAffine: return input_dim + 1;
            case BasisKind::Polynomial: return 1 + input_dim * degree;
            case BasisKind::PrincipalComponents: return components;
        }
        return 0;
    }

    std::string describe() const {
        switch (kind) {
            case BasisKind::RawAffine: return "affine";
            case BasisKind::Polynomial: return "poly:" + std::to_string(degree);
            case BasisKind::PrincipalComponents: return "pca:" + std::to_string(components);
        }
        return "?";
    }
};

inline BasisSpec parse_basis(const std::string& s) {
    if (s == "affine") return BasisSpec::raw_affine();
    if (s.rfind("poly:", 0) == 0) return BasisSpec::polynomial(std::stoi(s.substr(5)));
    if (s.rfind("pca:", 0) == 0) return BasisSpec::principal_components(std::stoi(s.substr(4)));
    throw std::invalid_argument("unknown basis '" + s + "' (expected affine, poly:<deg>, pca:<k>)");
}

inline Eigen::MatrixXd expand(const BasisSpec& basis, const Eigen::MatrixXd& features) {
    if (!basis.frozen) throw std::logic_error("expand: basis not frozen");
    if (static_cast<int>(features.cols()) != basis.input_dim)
        throw std::invalid_argument("expand: feature width " + std::to_string(features.cols()) +
                                    " does not match basis input dim " +
                                    std::to_string(basis.input_dim));
    const Eigen::Index n = features.rows();
    switch (basis.kind) {
        case BasisKind::RawAffine: {
            Eigen::MatrixXd d(n, basis.input_dim + 1);
            d.col(0).setOnes();
            d.rightCols(basis.input_dim) = features;
            return d;
        }
        case BasisKind::Polynomial: {
            Eigen::MatrixXd d(n, 1 + basis.input_dim * basis.degree);
            d.col(0).setOnes();
            Eigen::Index col = 1;
            for (int f = 0; f < basis.input_dim; ++f) {
                Eigen::VectorXd pw = features.col(f);
                for (int deg = 1; deg <= basis.degree; ++deg) {
                    d.col(col++) = pw;
                    if (deg < basis.degree) pw = pw.cwiseProduct(features.col(f));
                }
            }
            return d;
        }
        case BasisKind::PrincipalComponents: {
            return (features.rowwise() - basis.pca_mean.transpose()) * basis.pca_dirs;
        }
    }
    throw std::logic_error("expand: unreachable");
}

inline Eigen::MatrixXd expand(const BasisSpec& basis, const Dataset& data) {
    return expand(basis, data.features);
}

// Weighted mean squared error: (1/n) sum_i w_i (row_i . beta - y_i)^2.
inline double surrogate_loss(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                             const Eigen::VectorXd& weights, const Coefficients& beta) {
    const Eigen::Index n = design.rows();
    if (labels.size() != n || weights.size() != n)
        throw std::invalid_argument("surrogate_loss: shape mismatch");
    const Eigen::VectorXd resid = design * beta.beta - labels;
    return resid.cwiseProduct(resid).dot(weights) / static_cast<double>(n);
}

// Global minimizer of the weighted squared loss; minimum-norm when the
// weighted normal equations are singular.
inline Coefficients fit_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                                      const Eigen::VectorXd& weights) {
    const Eigen::Index n = design.rows();
    if (labels.size() != n || weights.size() != n)
        throw std::invalid_argument("fit_least_squares: shape mismatch");
    const Eigen::VectorXd s = weights.cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd a = s.asDiagonal() * design;
    const Eigen::VectorXd b = s.cwiseProduct(labels);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    return Coefficients{cod.solve(b)};
}

inline Coefficients fit_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels) {
    return fit_least_squares(design, labels, Eigen::VectorXd::Ones(design.rows()));
}

// sign with sign(0) = +1; the closed branch of every decision boundary.
inline double sign_pos(double v) { return v >= 0.0 ? 1.0 : -1.0; }

// 0/1 misclassification flags of sign(row . beta) against the labels.
inline std::vector<int> misclassified(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                                      const Coefficients& beta) {
    const Eigen::VectorXd pred = design * beta.beta;
    std::vector<int> flags(static_cast<size_t>(design.rows()));
    for (Eigen::Index i = 0; i < design.rows(); ++i)
        flags[static_cast<size_t>(i)] = sign_pos(pred[i]) != labels[i] ? 1 : 0;
    return flags;
}

// Fraction of rows misclassified by sign(row . beta).
inline double empirical_error(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                              const Coefficients& beta) {
    const Eigen::VectorXd pred = design * beta.beta;
    Eigen::Index errs = 0;
    for (Eigen::Index i = 0; i < design.rows(); ++i)
        if (sign_pos(pred[i]) != labels[i]) ++errs;
    return static_cast<double>(errs) / static_cast<double>(design.rows());
}

}  // namespace cud
