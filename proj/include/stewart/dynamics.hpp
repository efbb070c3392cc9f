#pragma once

// Lagrange-Euler dynamics of one actuator leg modelled as a serial two-link
// chain (servo horn + connecting rod) in Denavit-Hartenberg form.
//
// Units: kg, mm, s. Torques come out in kg*mm^2/s^2 (1e-3 N*mm); see
// torque_to_newton_mm().
//
// Indices follow the usual trace formulation and are one-based: U(i, j) is the
// partial derivative of the base-to-link-i transform 0A_i with respect to q_j.

#include "stewart/types.hpp"

#include <array>

namespace stewart {

constexpr int kChainLinks = 2;

template <typename Scalar>
struct DHLink {
  Scalar theta = 0;  // joint angle (generalized coordinate)
  Scalar length = 0;
  Scalar offset = 0;
  Scalar twist = 0;
  Scalar mass = 0;
  Vec3<Scalar> center_of_mass = Vec3<Scalar>::Zero();  // link frame
  // Moments and products about the link frame origin. Products are the plain
  // integrals (I_xy = int x*y dm), as they appear in the pseudo-inertia matrix.
  Scalar ixx = 0, iyy = 0, izz = 0;
  Scalar ixy = 0, ixz = 0, iyz = 0;

  void validate() const {
    if (!(mass > 0)) throw ContractViolation("link mass must be positive");
    if (ixx < 0 || iyy < 0 || izz < 0) throw ContractViolation("principal moments must be >= 0");
    // Small slack so uniform thin bodies (equality case) pass after rounding.
    const Scalar slack = Scalar(1e-12) * (ixx + iyy + izz);
    if (ixx + iyy + slack < izz || ixx + izz + slack < iyy || iyy + izz + slack < ixx)
      throw ContractViolation("principal moments violate the triangle inequality");
  }
};

template <typename Scalar>
using LegChain = std::array<DHLink<Scalar>, kChainLinks>;

template <typename Scalar>
struct LegChainState {
  Vec2<Scalar> q = Vec2<Scalar>::Zero();
  Vec2<Scalar> qd = Vec2<Scalar>::Zero();
  Vec2<Scalar> qdd = Vec2<Scalar>::Zero();
};

template <typename Scalar>
using GravityRow = Eigen::Matrix<Scalar, 1, 4>;

/// Standard DH transform Rz(theta) Tz(offset) Tx(length) Rx(twist).
template <typename Scalar>
HomMat<Scalar> dh_transform(const DHLink<Scalar>& link) {
  using std::cos;
  using std::sin;
  const Scalar ct = cos(link.theta), st = sin(link.theta);
  const Scalar ca = cos(link.twist), sa = sin(link.twist);
  HomMat<Scalar> a;
  a << ct, -st * ca, st * sa, link.length * ct,
       st, ct * ca, -ct * sa, link.length * st,
       Scalar(0), sa, ca, link.offset,
       Scalar(0), Scalar(0), Scalar(0), Scalar(1);
  return a;
}

/// Derivative operator of a revolute joint: dA/dtheta = Q * A.
template <typename Scalar>
HomMat<Scalar> q_matrix() {
  HomMat<Scalar> q = HomMat<Scalar>::Zero();
  q(0, 1) = Scalar(-1);
  q(1, 0) = Scalar(1);
  return q;
}

template <typename Scalar>
HomMat<Scalar> pseudo_inertia(const DHLink<Scalar>& link) {
  const Scalar m = link.mass;
  const Vec3<Scalar>& c = link.center_of_mass;
  HomMat<Scalar> j;
  j << (-link.ixx + link.iyy + link.izz) / 2, link.ixy, link.ixz, m * c.x(),
       link.ixy, (link.ixx - link.iyy + link.izz) / 2, link.iyz, m * c.y(),
       link.ixz, link.iyz, (link.ixx + link.iyy - link.izz) / 2, m * c.z(),
       m * c.x(), m * c.y(), m * c.z(), m;
  return j;
}

template <typename Scalar>
LegChain<Scalar> with_angles(LegChain<Scalar> chain, const Vec2<Scalar>& q) {
  for (int i = 0; i < kChainLinks; ++i) chain[i].theta = q[i];
  return chain;
}

namespace detail {

template <typename Scalar>
struct ChainTransforms {
  // local[i] = (i)A(i+1); from[a][b] = aA_b for a <= b (identity when a == b).
  std::array<HomMat<Scalar>, kChainLinks> local;
  std::array<std::array<HomMat<Scalar>, kChainLinks + 1>, kChainLinks + 1> from;

  explicit ChainTransforms(const LegChain<Scalar>& chain) {
    for (int i = 0; i < kChainLinks; ++i) local[i] = dh_transform(chain[i]);
    for (int a = 0; a <= kChainLinks; ++a) {
      from[a][a] = HomMat<Scalar>::Identity();
      for (int b = a + 1; b <= kChainLinks; ++b) from[a][b] = from[a][b - 1] * local[b - 1];
    }
  }
};

inline void check_index(int i) {
  if (i < 1 || i > kChainLinks)
    throw ContractViolation("chain index " + std::to_string(i) + " out of range [1, 2]");
}

template <typename Scalar>
HomMat<Scalar> u_first(const ChainTransforms<Scalar>& t, int i, int j) {
  if (j > i) return HomMat<Scalar>::Zero();
  return t.from[0][j - 1] * q_matrix<Scalar>() * t.from[j - 1][i];
}

template <typename Scalar>
HomMat<Scalar> u_second(const ChainTransforms<Scalar>& t, int i, int j, int k) {
  if (j > i || k > i) return HomMat<Scalar>::Zero();
  const int lo = std::min(j, k), hi = std::max(j, k);
  const HomMat<Scalar> q = q_matrix<Scalar>();
  return t.from[0][lo - 1] * q * t.from[lo - 1][hi - 1] * q * t.from[hi - 1][i];
}

}  // namespace detail

/// 0A_i for i in [0, 2]; 0A_0 is the identity.
template <typename Scalar>
HomMat<Scalar> base_transform(const LegChain<Scalar>& chain, int i) {
  if (i < 0 || i > kChainLinks) throw ContractViolation("link index out of range");
  return detail::ChainTransforms<Scalar>(chain).from[0][i];
}

/// U_ij = d(0A_i)/d(q_j) = 0A_(j-1) Q (j-1)A_i for j <= i, zero for j > i.
template <typename Scalar>
HomMat<Scalar> u_matrix(int i, int j, const LegChain<Scalar>& chain) {
  detail::check_index(i);
  detail::check_index(j);
  return detail::u_first(detail::ChainTransforms<Scalar>(chain), i, j);
}

/// U_ijk = d(U_ij)/d(q_k).
template <typename Scalar>
HomMat<Scalar> u_matrix(int i, int j, int k, const LegChain<Scalar>& chain) {
  detail::check_index(i);
  detail::check_index(j);
  detail::check_index(k);
  return detail::u_second(detail::ChainTransforms<Scalar>(chain), i, j, k);
}

/// D_ik = sum_{j >= max(i,k)} Tr(U_jk J_j U_ji^T).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> kinetic_matrix(const LegChain<Scalar>& chain,
                                           const LegChainState<Scalar>& state) {
  const LegChain<Scalar> posed = with_angles(chain, state.q);
  const detail::ChainTransforms<Scalar> t(posed);
  std::array<HomMat<Scalar>, kChainLinks> inertia;
  for (int j = 0; j < kChainLinks; ++j) inertia[j] = pseudo_inertia(posed[j]);

  Eigen::Matrix<Scalar, 2, 2> d = Eigen::Matrix<Scalar, 2, 2>::Zero();
  for (int i = 1; i <= kChainLinks; ++i) {
    for (int k = i; k <= kChainLinks; ++k) {
      Scalar sum = 0;
      for (int j = std::max(i, k); j <= kChainLinks; ++j) {
        sum += (detail::u_first(t, j, k) * inertia[j - 1] * detail::u_first(t, j, i).transpose())
                   .trace();
      }
      d(i - 1, k - 1) = sum;
      d(k - 1, i - 1) = sum;
    }
  }
  return d;
}

/// h_i = sum_k sum_m h_ikm qd_k qd_m with h_ikm = sum_{j >= max(i,k,m)} Tr(U_jkm J_j U_ji^T).
template <typename Scalar>
Vec2<Scalar> coriolis_vector(const LegChain<Scalar>& chain, const LegChainState<Scalar>& state) {
  const LegChain<Scalar> posed = with_angles(chain, state.q);
  const detail::ChainTransforms<Scalar> t(posed);
  Vec2<Scalar> h = Vec2<Scalar>::Zero();
  for (int i = 1; i <= kChainLinks; ++i) {
    for (int k = 1; k <= kChainLinks; ++k) {
      for (int m = 1; m <= kChainLinks; ++m) {
        Scalar hikm = 0;
        for (int j = std::max({i, k, m}); j <= kChainLinks; ++j) {
          hikm += (detail::u_second(t, j, k, m) * pseudo_inertia(posed[j - 1]) *
                   detail::u_first(t, j, i).transpose())
                      .trace();
        }
        h[i - 1] += hikm * state.qd[k - 1] * state.qd[m - 1];
      }
    }
  }
  return h;
}

/// C_i = -sum_{j >= i} m_j g U_ji r_j, with r_j the link-frame COM in homogeneous form.
template <typename Scalar>
Vec2<Scalar> gravity_vector(const LegChain<Scalar>& chain, const Vec2<Scalar>& q,
                            const GravityRow<Scalar>& gravity) {
  if (gravity(3) != Scalar(0)) throw ContractViolation("gravity row must end in 0");
  const LegChain<Scalar> posed = with_angles(chain, q);
  const detail::ChainTransforms<Scalar> t(posed);
  Vec2<Scalar> c = Vec2<Scalar>::Zero();
  for (int i = 1; i <= kChainLinks; ++i) {
    for (int j = i; j <= kChainLinks; ++j) {
      Vec4<Scalar> r;
      r << posed[j - 1].center_of_mass, Scalar(1);
      c[i - 1] -= posed[j - 1].mass * (gravity * detail::u_first(t, j, i) * r)(0);
    }
  }
  return c;
}

/// tau = D(q) qdd + h(q, qd) + C(q).
template <typename Scalar>
Vec2<Scalar> joint_torque(const LegChain<Scalar>& chain, const LegChainState<Scalar>& state,
                          const GravityRow<Scalar>& gravity) {
  return kinetic_matrix(chain, state) * state.qdd + coriolis_vector(chain, state) +
         gravity_vector(chain, state.q, gravity);
}

template <typename Scalar>
Scalar kinetic_energy(const LegChain<Scalar>& chain, const LegChainState<Scalar>& state) {
  return Scalar(0.5) * state.qd.dot(kinetic_matrix(chain, state) * state.qd);
}

/// P = -sum_j m_j g 0A_j r_j (zero at the base origin).
template <typename Scalar>
Scalar potential_energy(const LegChain<Scalar>& chain, const Vec2<Scalar>& q,
                        const GravityRow<Scalar>& gravity) {
  const LegChain<Scalar> posed = with_angles(chain, q);
  const detail::ChainTransforms<Scalar> t(posed);
  Scalar p = 0;
  for (int j = 1; j <= kChainLinks; ++j) {
    Vec4<Scalar> r;
    r << posed[j - 1].center_of_mass, Scalar(1);
    p -= posed[j - 1].mass * (gravity * t.from[0][j] * r)(0);
  }
  return p;
}

constexpr double torque_to_newton_mm(double kg_mm2_per_s2) { return kg_mm2_per_s2 * 1e-3; }
constexpr double torque_to_newton_m(double kg_mm2_per_s2) { return kg_mm2_per_s2 * 1e-6; }

/// Uniform thin rod of the given length along the link's -x axis, ending at the
/// link frame origin (the DH frame of link i sits at its distal joint).
template <typename Scalar>
DHLink<Scalar> uniform_rod_link(Scalar length, Scalar mass) {
  DHLink<Scalar> link;
  link.length = length;
  link.mass = mass;
  link.center_of_mass = Vec3<Scalar>(-length / 2, 0, 0);
  const Scalar ml2_3 = mass * length * length / 3;
  link.ixx = 0;
  link.iyy = ml2_3;
  link.izz = ml2_3;
  return link;
}

}  // namespace stewart
