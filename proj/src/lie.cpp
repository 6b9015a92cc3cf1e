#include "iiekf/lie.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "iiekf/errors.hpp"

namespace iiekf {

namespace {

constexpr double kSmallAngle = 1e-4;
constexpr double kPiMargin = 1e-6;

// Trigonometric coefficients with 4th-order Taylor fallbacks.
//   a = sin t / t,  b = (1 - cos t) / t^2,  c = (t - sin t) / t^3
double coeff_a(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

double coeff_b(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  const double h = std::sin(0.5 * t);
  return 2.0 * h * h / (t * t);
}

double coeff_c(double t) {
  if (t < 1e-2) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

// (t^2 + 2 cos t - 2) / (2 t^4)
double coeff_d(double t) {
  if (t < 5e-2) {
    const double t2 = t * t;
    return 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
  }
  const double t2 = t * t;
  return (t2 + 2.0 * std::cos(t) - 2.0) / (2.0 * t2 * t2);
}

// (2 t - 3 sin t + t cos t) / (2 t^5)
double coeff_e(double t) {
  if (t < 1e-1) {
    const double t2 = t * t;
    return 1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0;
  }
  const double t2 = t * t;
  return (2.0 * t - 3.0 * std::sin(t) + t * std::cos(t)) / (2.0 * t2 * t2 * t);
}

Eigen::MatrixXd flatten_basis(const std::vector<Eigen::MatrixXd>& basis) {
  const Eigen::Index n2 = basis.front().size();
  Eigen::MatrixXd cols(n2, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    cols.col(static_cast<Eigen::Index>(j)) = basis[j].reshaped();
  }
  return cols;
}

std::vector<Eigen::MatrixXd> standard_basis(GroupKind kind) {
  std::vector<Eigen::MatrixXd> out;
  const int n_ext = kind == GroupKind::SO3 ? 0 : (kind == GroupKind::SE3 ? 1 : 2);
  const int N = 3 + n_ext;
  for (int j = 0; j < 3; ++j) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(N, N);
    e.topLeftCorner<3, 3>() = so3::skew(Eigen::Vector3d::Unit(j));
    out.push_back(e);
  }
  for (int c = 0; c < n_ext; ++c) {
    for (int j = 0; j < 3; ++j) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(N, N);
      e(j, 3 + c) = 1.0;
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace

struct MatrixGroup::GenericData {
  std::vector<Eigen::MatrixXd> basis;
  Eigen::MatrixXd flat;       // N^2 x n, columns are vec(E_j)
  Eigen::MatrixXd flat_pinv;  // n x N^2
};

// ---------------------------------------------------------------- so3

namespace so3 {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Vector3d unskew(const Eigen::Matrix3d& m) {
  return {m(2, 1), m(0, 2), m(1, 0)};
}

Eigen::Matrix3d exp(const Eigen::Vector3d& phi) {
  const double t = phi.norm();
  const Eigen::Matrix3d K = skew(phi);
  return Eigen::Matrix3d::Identity() + coeff_a(t) * K + coeff_b(t) * K * K;
}

Eigen::Vector3d log(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d w = 0.5 * Eigen::Vector3d(R(2, 1) - R(1, 2),
                                                  R(0, 2) - R(2, 0),
                                                  R(1, 0) - R(0, 1));
  const double c = 0.5 * (R.trace() - 1.0);
  const double s = w.norm();
  const double t = std::atan2(s, c);
  if (std::numbers::pi - t < kPiMargin) {
    throw AngleNearPi("so3::log: rotation angle " + std::to_string(t) +
                      " too close to pi for the principal branch");
  }
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * w;
  }
  return (t / s) * w;
}

Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi) {
  const double t = phi.norm();
  const Eigen::Matrix3d K = skew(phi);
  return Eigen::Matrix3d::Identity() + coeff_b(t) * K + coeff_c(t) * K * K;
}

Eigen::Matrix3d right_jacobian(const Eigen::Vector3d& phi) {
  return left_jacobian(-phi);
}

Eigen::Matrix3d left_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double t = phi.norm();
  const Eigen::Matrix3d K = skew(phi);
  double f;
  if (t < 1e-2) {
    const double t2 = t * t;
    f = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    f = 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
  }
  return Eigen::Matrix3d::Identity() - 0.5 * K + f * K * K;
}

Eigen::Matrix3d left_jacobian_coupling(const Eigen::Vector3d& phi, const Eigen::Vector3d& rho) {
  const double t = phi.norm();
  const Eigen::Matrix3d P = skew(phi);
  const Eigen::Matrix3d Rh = skew(rho);
  const Eigen::Matrix3d PR = P * Rh;
  const Eigen::Matrix3d RP = Rh * P;
  const Eigen::Matrix3d PRP = PR * P;
  return 0.5 * Rh
       + coeff_c(t) * (PR + RP + PRP)
       + coeff_d(t) * (P * PR + RP * P - 3.0 * PRP)
       + coeff_e(t) * (PRP * P + P * PRP);
}

}  // namespace so3

// ---------------------------------------------------------------- series

namespace series {

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd term = result;
  for (int k = 1; k <= 30; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
    if (term.norm() < 1e-18 * result.norm()) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

namespace {

Eigen::MatrixXd sqrtm_denman_beavers(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd y = x;
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(x.rows(), x.cols());
  for (int it = 0; it < 100; ++it) {
    const Eigen::MatrixXd y_next = 0.5 * (y + z.inverse());
    const Eigen::MatrixXd z_next = 0.5 * (z + y.inverse());
    const double change = (y_next - y).norm();
    y = y_next;
    z = z_next;
    if (change <= 1e-15 * y.norm()) break;
  }
  return y;
}

}  // namespace

Eigen::MatrixXd logm(const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(g.rows(), g.cols());
  Eigen::MatrixXd x = g;
  int roots = 0;
  while ((x - id).norm() > 0.25 && roots < 40) {
    x = sqrtm_denman_beavers(x);
    ++roots;
  }
  const Eigen::MatrixXd a = x - id;
  Eigen::MatrixXd power = a;
  Eigen::MatrixXd result = a;
  for (int k = 2; k <= 60; ++k) {
    power = power * a;
    const Eigen::MatrixXd term = ((k % 2 == 0) ? -1.0 : 1.0) / k * power;
    result += term;
    if (term.norm() < 1e-18) break;
  }
  return std::ldexp(1.0, roots) * result;
}

std::vector<double> bernoulli_over_factorial(int count) {
  // sum_{k=0}^{m} b_k / (m+1-k)! = 0 for m >= 1, b_0 = 1.
  std::vector<double> b(static_cast<std::size_t>(count), 0.0);
  if (count == 0) return b;
  b[0] = 1.0;
  std::vector<double> inv_fact(static_cast<std::size_t>(count) + 2, 1.0);
  for (std::size_t k = 1; k < inv_fact.size(); ++k) {
    inv_fact[k] = inv_fact[k - 1] / static_cast<double>(k);
  }
  for (int m = 1; m < count; ++m) {
    if (m > 1 && m % 2 == 1) continue;  // odd Bernoulli numbers vanish past B_1
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += b[static_cast<std::size_t>(k)] * inv_fact[static_cast<std::size_t>(m + 1 - k)];
    b[static_cast<std::size_t>(m)] = -s;
  }
  return b;
}

Eigen::MatrixXd right_jacobian(const Eigen::MatrixXd& ad) {
  static const std::vector<double> coeffs = bernoulli_over_factorial(31);
  const Eigen::MatrixXd minus_ad = -ad;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(ad.rows(), ad.cols());
  Eigen::MatrixXd inv = power;
  for (int n = 1; n <= 30; ++n) {
    power = power * minus_ad;
    const double c = coeffs[static_cast<std::size_t>(n)];
    if (c == 0.0) continue;
    const Eigen::MatrixXd term = c * power;
    inv += term;
    if (n >= 2 && term.norm() < 1e-14) break;
  }
  return inv.inverse();
}

}  // namespace series

// ---------------------------------------------------------------- MatrixGroup

MatrixGroup::MatrixGroup(GroupKind kind, int matrix_size, int dim,
                         std::shared_ptr<const GenericData> data)
    : kind_(kind), matrix_size_(matrix_size), dim_(dim), data_(std::move(data)) {}

MatrixGroup MatrixGroup::so3() {
  static const MatrixGroup g = generic(standard_basis(GroupKind::SO3));
  return MatrixGroup(GroupKind::SO3, 3, 3, g.data_);
}

MatrixGroup MatrixGroup::se3() {
  static const MatrixGroup g = generic(standard_basis(GroupKind::SE3));
  return MatrixGroup(GroupKind::SE3, 4, 6, g.data_);
}

MatrixGroup MatrixGroup::se23() {
  static const MatrixGroup g = generic(standard_basis(GroupKind::SE23));
  return MatrixGroup(GroupKind::SE23, 5, 9, g.data_);
}

MatrixGroup MatrixGroup::generic(std::vector<Eigen::MatrixXd> basis) {
  if (basis.empty()) throw DimensionMismatch("generic group needs a non-empty basis");
  const Eigen::Index N = basis.front().rows();
  for (const auto& e : basis) {
    if (e.rows() != N || e.cols() != N) {
      throw DimensionMismatch("generic group basis matrices must all be square of the same size");
    }
  }
  auto data = std::make_shared<GenericData>();
  data->flat = flatten_basis(basis);
  data->flat_pinv = data->flat.completeOrthogonalDecomposition().pseudoInverse();
  data->basis = std::move(basis);
  const int n = static_cast<int>(data->basis.size());
  return MatrixGroup(GroupKind::Generic, static_cast<int>(N), n, std::move(data));
}

int MatrixGroup::informative_rows() const {
  return kind_ == GroupKind::Generic ? matrix_size_ : 3;
}

const std::vector<Eigen::MatrixXd>& MatrixGroup::basis() const { return data_->basis; }

bool MatrixGroup::operator==(const MatrixGroup& other) const {
  if (kind_ != other.kind_ || matrix_size_ != other.matrix_size_ || dim_ != other.dim_) return false;
  if (kind_ != GroupKind::Generic) return true;
  return data_ == other.data_ || data_->flat == other.data_->flat;
}

void MatrixGroup::check_dim(const Tangent& xi) const {
  if (xi.size() != dim_) {
    throw DimensionMismatch("tangent vector has dimension " + std::to_string(xi.size()) +
                            ", group expects " + std::to_string(dim_));
  }
}

Eigen::MatrixXd MatrixGroup::hat(const Tangent& xi) const {
  check_dim(xi);
  if (kind_ == GroupKind::Generic) {
    return (data_->flat * xi).reshaped(matrix_size_, matrix_size_);
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(matrix_size_, matrix_size_);
  m.topLeftCorner<3, 3>() = so3::skew(xi.head<3>());
  for (int c = 0; 3 + c < matrix_size_; ++c) {
    m.block<3, 1>(0, 3 + c) = xi.segment<3>(3 + 3 * c);
  }
  return m;
}

Tangent MatrixGroup::vee(const Eigen::MatrixXd& m) const {
  if (m.rows() != matrix_size_ || m.cols() != matrix_size_) {
    throw DimensionMismatch("vee: matrix has wrong shape");
  }
  Tangent xi;
  if (kind_ == GroupKind::Generic) {
    xi = data_->flat_pinv * m.reshaped();
  } else {
    xi.resize(dim_);
    xi.head<3>() = so3::unskew(m.topLeftCorner<3, 3>());
    for (int c = 0; 3 + c < matrix_size_; ++c) {
      xi.segment<3>(3 + 3 * c) = m.block<3, 1>(0, 3 + c);
    }
  }
  const double residual = (hat(xi) - m).norm();
  if (residual > 1e-9 * (1.0 + m.norm())) {
    throw NotInGroup("vee: matrix is not in the Lie algebra (residual " + std::to_string(residual) + ")");
  }
  return xi;
}

GroupElement MatrixGroup::identity() const {
  return GroupElement(*this, Eigen::MatrixXd::Identity(matrix_size_, matrix_size_));
}

GroupElement MatrixGroup::exp(const Tangent& xi) const {
  check_dim(xi);
  if (kind_ == GroupKind::Generic) return GroupElement(*this, series::expm(hat(xi)));
  const Eigen::Vector3d phi = xi.head<3>();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(matrix_size_, matrix_size_);
  m.topLeftCorner<3, 3>() = so3::exp(phi);
  if (matrix_size_ > 3) {
    const Eigen::Matrix3d J = so3::left_jacobian(phi);
    for (int c = 0; 3 + c < matrix_size_; ++c) {
      m.block<3, 1>(0, 3 + c) = J * xi.segment<3>(3 + 3 * c);
    }
  }
  return GroupElement(*this, std::move(m));
}

Tangent MatrixGroup::log(const GroupElement& g) const {
  if (g.group() != *this) throw DimensionMismatch("log: element belongs to another group");
  const Eigen::MatrixXd& m = g.matrix();
  if (kind_ == GroupKind::Generic) return vee(series::logm(m));
  Tangent xi(dim_);
  const Eigen::Vector3d phi = so3::log(m.topLeftCorner<3, 3>());
  xi.head<3>() = phi;
  if (matrix_size_ > 3) {
    const Eigen::Matrix3d Jinv = so3::left_jacobian_inverse(phi);
    for (int c = 0; 3 + c < matrix_size_; ++c) {
      xi.segment<3>(3 + 3 * c) = Jinv * m.block<3, 1>(0, 3 + c);
    }
  }
  return xi;
}

Eigen::MatrixXd MatrixGroup::left_jacobian(const Tangent& xi) const {
  check_dim(xi);
  if (kind_ == GroupKind::Generic) return series::right_jacobian(ad(-xi));
  const Eigen::Vector3d phi = xi.head<3>();
  const Eigen::Matrix3d J = so3::left_jacobian(phi);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim_, dim_);
  out.topLeftCorner<3, 3>() = J;
  for (int c = 0; 3 + c < matrix_size_; ++c) {
    const int o = 3 + 3 * c;
    out.block<3, 3>(o, o) = J;
    out.block<3, 3>(o, 0) = so3::left_jacobian_coupling(phi, xi.segment<3>(o));
  }
  return out;
}

Eigen::MatrixXd MatrixGroup::right_jacobian(const Tangent& xi) const {
  check_dim(xi);
  if (kind_ == GroupKind::Generic) return series::right_jacobian(ad(xi));
  return left_jacobian(-xi);
}

Eigen::MatrixXd MatrixGroup::ad(const Tangent& xi) const {
  const Eigen::MatrixXd X = hat(xi);
  Eigen::MatrixXd out(dim_, dim_);
  const auto& b = basis();
  for (int j = 0; j < dim_; ++j) {
    const Eigen::MatrixXd& E = b[static_cast<std::size_t>(j)];
    out.col(j) = data_->flat_pinv * (X * E - E * X).reshaped();
  }
  return out;
}

Eigen::MatrixXd MatrixGroup::adjoint(const GroupElement& g) const {
  const Eigen::MatrixXd& m = g.matrix();
  const Eigen::MatrixXd m_inv = g.inverse().matrix();
  Eigen::MatrixXd out(dim_, dim_);
  const auto& b = basis();
  for (int j = 0; j < dim_; ++j) {
    out.col(j) = data_->flat_pinv * (m * b[static_cast<std::size_t>(j)] * m_inv).reshaped();
  }
  return out;
}

// ---------------------------------------------------------------- GroupElement

GroupElement::GroupElement(MatrixGroup group, Eigen::MatrixXd matrix)
    : group_(std::move(group)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != group_.matrix_size() || matrix_.cols() != group_.matrix_size()) {
    throw DimensionMismatch("group element matrix has wrong shape");
  }
}

GroupElement GroupElement::from_matrix(const MatrixGroup& group, const Eigen::MatrixXd& m) {
  GroupElement g(group, m);
  validate(g);
  return g;
}

void validate(const GroupElement& g, double tol) {
  const Eigen::MatrixXd& m = g.matrix();
  if (!m.allFinite()) throw NotInGroup("group element has non-finite entries");
  const MatrixGroup& grp = g.group();
  if (grp.kind() == GroupKind::Generic) {
    if (std::abs(m.determinant()) < tol) throw NotInGroup("group element is not invertible");
    return;
  }
  const Eigen::Matrix3d R = m.topLeftCorner<3, 3>();
  if ((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() > tol ||
      std::abs(R.determinant() - 1.0) > tol) {
    throw NotInGroup("rotation block is not in SO(3)");
  }
  const int N = grp.matrix_size();
  for (int r = 3; r < N; ++r) {
    for (int c = 0; c < N; ++c) {
      const double expected = (r == c) ? 1.0 : 0.0;
      if (std::abs(m(r, c) - expected) > tol) {
        throw NotInGroup("group element lacks the [R v p; 0 1 0; 0 0 1] block structure");
      }
    }
  }
}

Eigen::Matrix3d GroupElement::rotation() const {
  if (group_.kind() == GroupKind::Generic) throw DimensionMismatch("generic element has no rotation block");
  return matrix_.topLeftCorner<3, 3>();
}

GroupElement GroupElement::operator*(const GroupElement& rhs) const {
  if (group_ != rhs.group_) throw DimensionMismatch("compose: elements belong to different groups");
  return GroupElement(group_, matrix_ * rhs.matrix_);
}

GroupElement GroupElement::inverse() const {
  if (group_.kind() == GroupKind::Generic) return GroupElement(group_, matrix_.inverse());
  const int N = group_.matrix_size();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(N, N);
  const Eigen::Matrix3d Rt = matrix_.topLeftCorner<3, 3>().transpose();
  inv.topLeftCorner<3, 3>() = Rt;
  for (int c = 3; c < N; ++c) inv.block<3, 1>(0, c) = -Rt * matrix_.block<3, 1>(0, c);
  return GroupElement(group_, std::move(inv));
}

Eigen::VectorXd GroupElement::act(const Eigen::VectorXd& d) const {
  if (d.size() != matrix_.cols()) {
    throw DimensionMismatch("act: vector has dimension " + std::to_string(d.size()) +
                            ", expected " + std::to_string(matrix_.cols()));
  }
  return matrix_ * d;
}

}  // namespace iiekf
