#pragma once

// Matrix Lie group machinery: hat/vee, exp/log, left and right Jacobians
// and the group action for SO(3), SE(3), SE_2(3), plus a generic fallback
// driven by an explicit Lie-algebra basis.
//
// Tangent ordering:
//   SO3  : (phi)                         n = 3, N = 3
//   SE3  : (phi, rho)                    n = 6, N = 4
//   SE23 : (phi, nu, rho)  rot/vel/pos   n = 9, N = 5

#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace iiekf {

using Tangent = Eigen::VectorXd;

enum class GroupKind { SO3, SE3, SE23, Generic };

class GroupElement;

/// Describes which matrix group an element lives in. Cheap to copy; the
/// generic basis is shared.
class MatrixGroup {
 public:
  static MatrixGroup so3();
  static MatrixGroup se3();
  static MatrixGroup se23();
  /// Generic group given by a basis E_1..E_n of its Lie algebra (N x N each).
  /// exp/log/Jacobians then go through series expansions.
  static MatrixGroup generic(std::vector<Eigen::MatrixXd> basis);

  GroupKind kind() const { return kind_; }
  int matrix_size() const { return matrix_size_; }
  int dim() const { return dim_; }
  /// Rows of y = chi d + n that carry information. The homogeneous rows of
  /// SE-type groups are identically zero in H and are dropped.
  int informative_rows() const;
  const std::vector<Eigen::MatrixXd>& basis() const;

  Eigen::MatrixXd hat(const Tangent& xi) const;
  Tangent vee(const Eigen::MatrixXd& m) const;

  GroupElement identity() const;
  GroupElement exp(const Tangent& xi) const;
  Tangent log(const GroupElement& g) const;

  Eigen::MatrixXd right_jacobian(const Tangent& xi) const;
  Eigen::MatrixXd left_jacobian(const Tangent& xi) const;

  /// Matrix of ad_xi acting on tangent coordinates.
  Eigen::MatrixXd ad(const Tangent& xi) const;
  /// Matrix of Ad_g acting on tangent coordinates.
  Eigen::MatrixXd adjoint(const GroupElement& g) const;

  bool operator==(const MatrixGroup& other) const;
  bool operator!=(const MatrixGroup& other) const { return !(*this == other); }

 private:
  struct GenericData;

  MatrixGroup(GroupKind kind, int matrix_size, int dim,
              std::shared_ptr<const GenericData> data);

  void check_dim(const Tangent& xi) const;

  GroupKind kind_;
  int matrix_size_;
  int dim_;
  std::shared_ptr<const GenericData> data_;
};

class GroupElement {
 public:
  /// Unchecked construction; use from_matrix() for untrusted input.
  GroupElement(MatrixGroup group, Eigen::MatrixXd matrix);

  /// Validates the group invariants (orthogonality to 1e-9, block shape).
  static GroupElement from_matrix(const MatrixGroup& group, const Eigen::MatrixXd& m);

  const MatrixGroup& group() const { return group_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  /// Upper-left 3x3 block (SO3, SE3, SE23 only).
  Eigen::Matrix3d rotation() const;

  GroupElement operator*(const GroupElement& rhs) const;
  GroupElement inverse() const;
  Eigen::VectorXd act(const Eigen::VectorXd& d) const;

 private:
  MatrixGroup group_;
  Eigen::MatrixXd matrix_;
};

inline GroupElement compose(const GroupElement& a, const GroupElement& b) { return a * b; }
inline GroupElement inverse(const GroupElement& a) { return a.inverse(); }
inline Eigen::VectorXd act(const GroupElement& g, const Eigen::VectorXd& d) { return g.act(d); }

/// Throws NotInGroup when g violates the invariants of its group.
void validate(const GroupElement& g, double tol = 1e-9);

namespace so3 {

Eigen::Matrix3d skew(const Eigen::Vector3d& v);
Eigen::Vector3d unskew(const Eigen::Matrix3d& m);
Eigen::Matrix3d exp(const Eigen::Vector3d& phi);
/// Principal log; throws AngleNearPi within 1e-6 of pi.
Eigen::Vector3d log(const Eigen::Matrix3d& R);
Eigen::Matrix3d right_jacobian(const Eigen::Vector3d& phi);
Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi);
Eigen::Matrix3d left_jacobian_inverse(const Eigen::Vector3d& phi);
/// Coupling block Q(phi, rho) of the SE(3)-type left Jacobian.
Eigen::Matrix3d left_jacobian_coupling(const Eigen::Vector3d& phi, const Eigen::Vector3d& rho);

}  // namespace so3

// Series-based routines used by the generic groups; also serve as oracles
// for the closed forms.
namespace series {

/// Matrix exponential by scaling and squaring with a Taylor core.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);
/// Principal matrix logarithm by inverse scaling and squaring.
Eigen::MatrixXd logm(const Eigen::MatrixXd& g);
/// B_n / n! for n = 0..count-1 (B_1 = -1/2).
std::vector<double> bernoulli_over_factorial(int count);
/// Right Jacobian from its inverse, sum_n B_n/n! (-ad)^n, truncated once a
/// nonzero term drops below 1e-14 (at most 30 terms).
Eigen::MatrixXd right_jacobian(const Eigen::MatrixXd& ad);

}  // namespace series

}  // namespace iiekf
