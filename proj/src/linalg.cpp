#include "irsce/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace irsce::linalg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// JacobiSVD throughout: BDCSVD (Eigen 3.4) can mis-factor matrices whose
// blocks differ in scale by many orders of magnitude, which the estimator
// design matrices do.
Eigen::JacobiSVD<CMatrix> svd_of(const CMatrix& x) {
    return Eigen::JacobiSVD<CMatrix>(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

double default_tol(const CMatrix& x) {
    return static_cast<double>(std::max(x.rows(), x.cols())) *
           std::numeric_limits<double>::epsilon();
}

[[noreturn]] void throw_cond(const char* what, double cond_number) {
    std::ostringstream msg;
    msg << what << " (condition number " << cond_number << ")";
    throw std::runtime_error(msg.str());
}

}  // namespace

CMatrix dft_matrix(int size) {
    if (size < 1) throw std::invalid_argument("dft_matrix: size must be >= 1");
    CMatrix d(size, size);
    for (int row = 0; row < size; ++row) {
        for (int col = 0; col < size; ++col) {
            if (row == 0 || col == 0) {
                d(row, col) = 1.0;  // first row and column exactly one
                continue;
            }
            const double phase = -2.0 * kPi * row * col / size;
            d(row, col) = std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    return d;
}

CMatrix pinv(const CMatrix& x, double tol) {
    if (x.size() == 0) return CMatrix(x.cols(), x.rows());
    auto svd = svd_of(x);
    if (tol < 0.0) tol = default_tol(x);
    const auto& sv = svd.singularValues();
    const double cutoff = tol * (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) inv_sv(i) = 1.0 / sv(i);
    }
    return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().adjoint();
}

CMatrix solve_full_col_rank(const CMatrix& a, const CMatrix& b, const char* what) {
    auto svd = svd_of(a);
    const auto& sv = svd.singularValues();
    const Eigen::Index rank_needed = std::min(a.rows(), a.cols());
    const double cutoff = default_tol(a) * (sv.size() > 0 ? sv(0) : 0.0);
    if (a.rows() < a.cols() || sv(rank_needed - 1) <= cutoff) {
        const double c = sv(rank_needed - 1) > 0.0 ? sv(0) / sv(rank_needed - 1)
                                                   : std::numeric_limits<double>::infinity();
        throw_cond(what, c);
    }
    Eigen::VectorXd inv_sv(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) inv_sv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv_sv.asDiagonal() * (svd.matrixU().adjoint() * b);
}

double cond(const CMatrix& x) {
    auto svd = Eigen::JacobiSVD<CMatrix>(x);
    const auto& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smallest;
}

CMatrix hermitian_sqrt(const CMatrix& p) {
    if (p.rows() != p.cols()) throw std::invalid_argument("hermitian_sqrt: not square");
    const double residual = (p - p.adjoint()).cwiseAbs().maxCoeff();
    if (residual > 1e-8) {
        throw std::invalid_argument("hermitian_sqrt: input not Hermitian (residual " +
                                    std::to_string(residual) + ")");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(p);
    Eigen::VectorXd vals = eig.eigenvalues();
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) < -1e-10) {
            throw std::invalid_argument("hermitian_sqrt: eigenvalue " +
                                        std::to_string(vals(i)) + " below tolerance");
        }
        vals(i) = std::sqrt(std::max(vals(i), 0.0));
    }
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().adjoint();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

CMatrix BlockMatrix2x2::assemble() const {
    if (a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() ||
        b.cols() != d.cols()) {
        throw std::invalid_argument("BlockMatrix2x2: blocks not conformable");
    }
    CMatrix m(a.rows() + c.rows(), a.cols() + b.cols());
    m.topLeftCorner(a.rows(), a.cols()) = a;
    m.topRightCorner(b.rows(), b.cols()) = b;
    m.bottomLeftCorner(c.rows(), c.cols()) = c;
    m.bottomRightCorner(d.rows(), d.cols()) = d;
    return m;
}

CMatrix block_inverse(const BlockMatrix2x2& m) {
    if (m.a.rows() != m.a.cols() || m.d.rows() != m.d.cols()) {
        throw std::invalid_argument("block_inverse: a and d must be square");
    }
    constexpr double kCondLimit = 1e12;
    const double cond_a = cond(m.a);
    if (!(cond_a < kCondLimit)) throw_cond("block_inverse: singular a block", cond_a);
    const CMatrix a_inv = m.a.inverse();
    const CMatrix schur = m.d - m.c * a_inv * m.b;
    const double cond_s = cond(schur);
    if (!(cond_s < kCondLimit)) throw_cond("block_inverse: singular Schur complement", cond_s);
    const CMatrix schur_inv = schur.inverse();

    BlockMatrix2x2 out;
    out.a = a_inv + a_inv * m.b * schur_inv * m.c * a_inv;
    out.b = -a_inv * m.b * schur_inv;
    out.c = -schur_inv * m.c * a_inv;
    out.d = schur_inv;
    return out.assemble();
}

CMatrix block_pinv_structured(const BlockMatrix2x2& m, double check_tol) {
    const CMatrix a_pinv = pinv(m.a);
    const auto check = [&](const CMatrix& residual, double scale, const char* cond_name) {
        const double norm = residual.norm();
        if (norm > check_tol * (1.0 + scale)) {
            throw std::invalid_argument(std::string("block_pinv_structured: condition ") +
                                        cond_name + " violated (residual " +
                                        std::to_string(norm) + ")");
        }
    };
    const Eigen::Index ra = m.a.rows(), ca = m.a.cols();
    check(m.b - m.a * (a_pinv * m.b), m.b.norm(), "(I - a*a+)b = 0");
    check(m.c - (m.c * a_pinv) * m.a, m.c.norm(), "c(I - a+a) = 0");
    check(m.d - m.c * a_pinv * m.b, m.d.norm(), "d - c*a+*b = 0");

    const CMatrix kb = a_pinv * m.b;          // ca x cb
    const CMatrix kc = m.c * a_pinv;          // rc x ra
    const CMatrix ktb = CMatrix::Identity(kb.cols(), kb.cols()) + kb.adjoint() * kb;
    const CMatrix ktc = CMatrix::Identity(kc.rows(), kc.rows()) + kc * kc.adjoint();
    const CMatrix ktb_inv = ktb.inverse();
    const CMatrix ktc_inv = ktc.inverse();

    const CMatrix left = CMatrix::Identity(ca, ca) - kb * ktb_inv * kb.adjoint();
    const CMatrix right = CMatrix::Identity(ra, ra) - kc.adjoint() * ktc_inv * kc;

    BlockMatrix2x2 out;
    out.a = left * a_pinv * right;
    out.b = left * a_pinv * kc.adjoint() * ktc_inv;
    out.c = ktb_inv * kb.adjoint() * a_pinv * right;
    out.d = ktb_inv * kb.adjoint() * a_pinv * kc.adjoint() * ktc_inv;
    return out.assemble();
}

}  // namespace irsce::linalg
