#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the code under test's D, h or C.

#include "stewart/dynamics.hpp"

#include <random>
#include <vector>

namespace oracle {

using namespace stewart;

struct PointMass {
  double mass;
  Vec3d position;
};

inline std::vector<PointMass> random_cloud(std::mt19937& rng, int n, double length = 60) {
  std::uniform_real_distribution<double> m(0.001, 0.01), x(-length, 0.0), yz(-6, 6);
  std::vector<PointMass> cloud;
  for (int i = 0; i < n; ++i) cloud.push_back({m(rng), Vec3d(x(rng), yz(rng), yz(rng))});
  return cloud;
}

inline DHLink<double> link_from_cloud(const std::vector<PointMass>& cloud, double length,
                                      double offset, double twist) {
  DHLink<double> l;
  l.length = length;
  l.offset = offset;
  l.twist = twist;
  Vec3d first = Vec3d::Zero();
  for (const auto& p : cloud) {
    const Vec3d& r = p.position;
    l.mass += p.mass;
    first += p.mass * r;
    l.ixx += p.mass * (r.y() * r.y() + r.z() * r.z());
    l.iyy += p.mass * (r.x() * r.x() + r.z() * r.z());
    l.izz += p.mass * (r.x() * r.x() + r.y() * r.y());
    l.ixy += p.mass * r.x() * r.y();
    l.ixz += p.mass * r.x() * r.z();
    l.iyz += p.mass * r.y() * r.z();
  }
  l.center_of_mass = first / l.mass;
  return l;
}

inline LegChain<double> random_chain(std::mt19937& rng) {
  std::uniform_real_distribution<double> len(10, 150), off(-20, 20), tw(-1, 1), th(-kPi, kPi);
  LegChain<double> c;
  for (auto& l : c) {
    const double length = len(rng);
    l = link_from_cloud(random_cloud(rng, 5, length), length, off(rng), tw(rng));
    l.theta = th(rng);
  }
  return c;
}

inline LegChainState<double> random_state(std::mt19937& rng) {
  std::uniform_real_distribution<double> q(-kPi, kPi), qd(-5, 5), qdd(-50, 50);
  LegChainState<double> s;
  s.q = Vec2d(q(rng), q(rng));
  s.qd = Vec2d(qd(rng), qd(rng));
  s.qdd = Vec2d(qdd(rng), qdd(rng));
  return s;
}

inline GravityRow<double> gravity_row(std::mt19937& rng) {
  std::normal_distribution<double> n;
  Vec3d d(n(rng), n(rng), n(rng));
  d = d.normalized() * 9810.0;
  return GravityRow<double>(d.x(), d.y(), d.z(), 0);
}

namespace detail {

using LD = long double;

inline LegChain<LD> widen(const LegChain<double>& c) {
  LegChain<LD> out;
  for (int i = 0; i < kChainLinks; ++i) {
    const auto& s = c[i];
    auto& d = out[i];
    d.theta = s.theta;
    d.length = s.length;
    d.offset = s.offset;
    d.twist = s.twist;
    d.mass = s.mass;
    d.center_of_mass = s.center_of_mass.cast<LD>();
    d.ixx = s.ixx;
    d.iyy = s.iyy;
    d.izz = s.izz;
    d.ixy = s.ixy;
    d.ixz = s.ixz;
    d.iyz = s.iyz;
  }
  return out;
}

// Base-to-link-j transform built by multiplying DH matrices directly.
inline HomMat<LD> chain_transform(const LegChain<LD>& c, const Vec2<LD>& q, int j) {
  HomMat<LD> a = HomMat<LD>::Identity();
  for (int i = 0; i < j; ++i) {
    DHLink<LD> l = c[i];
    l.theta = q[i];
    a = a * dh_transform(l);
  }
  return a;
}

// Velocity of every link-frame point: dA/dt by central difference along q + qd t.
inline HomMat<LD> transform_rate(const LegChain<LD>& c, const Vec2<LD>& q, const Vec2<LD>& qd, int j) {
  const LD h = 1e-7L;
  return (chain_transform(c, q + qd * h, j) - chain_transform(c, q - qd * h, j)) / (2 * h);
}

inline LD kinetic(const LegChain<LD>& c, const Vec2<LD>& q, const Vec2<LD>& qd) {
  LD k = 0;
  for (int j = 1; j <= kChainLinks; ++j) {
    const HomMat<LD> ad = transform_rate(c, q, qd, j);
    k += 0.5L * (ad * pseudo_inertia(c[j - 1]) * ad.transpose()).trace();
  }
  return k;
}

inline LD potential(const LegChain<LD>& c, const Vec2<LD>& q, const GravityRow<LD>& g) {
  LD p = 0;
  for (int j = 1; j <= kChainLinks; ++j) {
    Vec4<LD> r;
    r << c[j - 1].center_of_mass, 1;
    p -= c[j - 1].mass * (g * chain_transform(c, q, j) * r)(0);
  }
  return p;
}

}  // namespace detail

/// tau_i = d/dt(dL/dqd_i) - dL/dq_i with L = K - P, every derivative by central differences.
inline Vec2d euler_lagrange_torque(const LegChain<double>& chain, const LegChainState<double>& s,
                                   const GravityRow<double>& gravity) {
  using detail::LD;
  const LegChain<LD> c = detail::widen(chain);
  const GravityRow<LD> g = gravity.cast<LD>();
  const Vec2<LD> q0 = s.q.cast<LD>(), qd0 = s.qd.cast<LD>(), qdd0 = s.qdd.cast<LD>();
  auto lagrangian = [&](const Vec2<LD>& q, const Vec2<LD>& qd) {
    return detail::kinetic(c, q, qd) - detail::potential(c, q, g);
  };
  auto momentum = [&](const Vec2<LD>& q, const Vec2<LD>& qd, int i) {
    const LD d = 0.5L;  // exact: K is quadratic in qd
    Vec2<LD> e = Vec2<LD>::Zero();
    e[i] = d;
    return (lagrangian(q, qd + e) - lagrangian(q, qd - e)) / (2 * d);
  };
  Vec2d tau;
  for (int i = 0; i < 2; ++i) {
    const LD eps = 1e-4L;
    auto p_at = [&](LD t) {
      return momentum(q0 + qd0 * t + qdd0 * (0.5L * t * t), qd0 + qdd0 * t, i);
    };
    const LD dpdt = (p_at(eps) - p_at(-eps)) / (2 * eps);
    const LD eta = 1e-5L;
    Vec2<LD> e = Vec2<LD>::Zero();
    e[i] = eta;
    const LD dldq = (lagrangian(q0 + e, qd0) - lagrangian(q0 - e, qd0)) / (2 * eta);
    tau[i] = static_cast<double>(dpdt - dldq);
  }
  return tau;
}

/// 1/2 sum v^2 dm over uniform rods lying along each link's -x axis, sampled.
inline double sampled_rod_kinetic_energy(const LegChain<double>& chain, const LegChainState<double>& s,
                                         std::mt19937& rng, int samples) {
  using detail::LD;
  const LegChain<LD> c = detail::widen(chain);
  std::uniform_real_distribution<double> u(0, 1);
  double k = 0;
  for (int j = 1; j <= kChainLinks; ++j) {
    const HomMat<LD> ad = detail::transform_rate(c, s.q.cast<LD>(), s.qd.cast<LD>(), j);
    const double len = chain[j - 1].length, dm = chain[j - 1].mass / samples;
    for (int n = 0; n < samples; ++n) {
      const Vec4<LD> r(-u(rng) * len, 0, 0, 1);
      k += 0.5 * dm * static_cast<double>((ad * r).template head<3>().squaredNorm());
    }
  }
  return k;
}

/// Integrates the unforced chain (tau = 0) with RK4 and returns max |E - E0| / (E0 - Pmin).
inline double energy_drift(const LegChain<double>& chain, LegChainState<double> s,
                           const GravityRow<double>& g, double dt, double duration) {
  auto accel = [&](const Vec2d& q, const Vec2d& qd) {
    LegChainState<double> st;
    st.q = q;
    st.qd = qd;
    const Eigen::Matrix2d d = kinetic_matrix(chain, st);
    return Vec2d(d.ldlt().solve(-coriolis_vector(chain, st) - gravity_vector(chain, q, g)));
  };
  auto energy = [&](const LegChainState<double>& st) {
    return kinetic_energy(chain, st) + potential_energy(chain, st.q, g);
  };
  double pmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 360; ++i)
    for (int j = 0; j < 360; ++j)
      pmin = std::min(pmin, potential_energy(chain, Vec2d(deg2rad(i), deg2rad(j)), g));
  const double e0 = energy(s);
  double worst = 0;
  const long steps = std::lround(duration / dt);
  for (long n = 0; n < steps; ++n) {
    const Vec2d q = s.q, v = s.qd;
    const Vec2d k1q = v, k1v = accel(q, v);
    const Vec2d k2q = v + 0.5 * dt * k1v, k2v = accel(q + 0.5 * dt * k1q, k2q);
    const Vec2d k3q = v + 0.5 * dt * k2v, k3v = accel(q + 0.5 * dt * k2q, k3q);
    const Vec2d k4q = v + dt * k3v, k4v = accel(q + dt * k3q, k4q);
    s.q = q + dt / 6 * (k1q + 2 * k2q + 2 * k3q + k4q);
    s.qd = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    worst = std::max(worst, std::abs(energy(s) - e0));
  }
  return worst / (e0 - pmin);
}

}  // namespace oracle
