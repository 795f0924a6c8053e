#pragma once

// Independent reference implementations used as test oracles. They use plain
// loops over std::vector and share no code with the library.

#include "mlms/filters.hpp"
#include "mlms/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec to_vec(const Eigen::VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd to_eigen(const Vec& v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

inline double max_abs_diff(const Vec& a, const Vec& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Heavy-ball normalized step; beta = 0 gives NLMS, L > 0 adds the box clamp.
struct Mlms {
    double mu, delta, beta, L = 0.0;
    Vec theta, prev;

    Mlms(std::size_t m, double mu_, double delta_, double beta_, double L_ = 0.0)
        : mu(mu_), delta(delta_), beta(beta_), L(L_), theta(m, 0.0), prev(m, 0.0)
    {
    }

    double step(const Vec& phi, double y)
    {
        const double a = mu / (delta + dot(phi, phi));
        const double e = y - dot(phi, theta);
        Vec next(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) {
            next[i] = theta[i] + a * e * phi[i] + beta * (theta[i] - prev[i]);
            if (L > 0.0) next[i] = std::min(L, std::max(-L, next[i]));
        }
        prev = theta;
        theta = next;
        return e;
    }
};

struct Sgd {
    double mu, beta;
    Vec theta, prev;

    Sgd(std::size_t m, double mu_, double beta_) : mu(mu_), beta(beta_), theta(m, 0.0), prev(m, 0.0) {}

    void step(const Vec& phi, double y)
    {
        const double e = y - dot(phi, theta);
        Vec next(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) next[i] = theta[i] + mu * e * phi[i] + beta * (theta[i] - prev[i]);
        prev = theta;
        theta = next;
    }
};

/// Generalized normalized gradient descent with the gradient-adapted regularizer.
struct Gngd {
    double mu, rho;
    double eps, eps_prev = 0.0, e_prev = 0.0;
    Vec theta, phi_prev;
    bool history = false;

    Gngd(std::size_t m, double mu_, double rho_, double eps0)
        : mu(mu_), rho(rho_), eps(eps0), theta(m, 0.0), phi_prev(m, 0.0)
    {
    }

    void step(const Vec& phi, double y)
    {
        const double n2 = dot(phi, phi);
        const double e = y - dot(phi, theta);
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += mu * e * phi[i] / (eps + n2);
        double next = eps;
        if (history) {
            const double d = dot(phi_prev, phi_prev) + eps_prev;
            next = eps - rho * mu * e * e_prev * dot(phi, phi_prev) / (d * d);
            if (next < 1e-12) next = 1e-12;
        }
        eps_prev = eps;
        eps = next;
        e_prev = e;
        phi_prev = phi;
        history = true;
    }
};

/// The four step-size terms, evaluated in long double.
inline long double mu_max(long double alpha, int h, int p, long double kappa, bool theorem23 = false)
{
    const long double s = std::min(kappa, 2.0L);
    const long double q = theorem23 ? 2.0L * p - 0.5L : p - 0.5L;
    const long double t1 = std::pow(9.0L * h * h, -1.0L / (4.0L - s));
    const long double t2 = std::pow(3.0L * q, -1.0L / s);
    const long double t3 = alpha / (2.0L * (alpha * alpha + 9.0L));
    const long double t4 = std::pow(alpha / (24.0L * q * (1.0L + 3.0L * q)), 1.0L / (s - 1.0L));
    return std::min(std::min(t1, t2), std::min(t3, t4));
}

inline long double lambda_p(long double alpha, long double mu, int p)
{
    return std::pow(1.0L - alpha * mu / 8.0L, 1.0L / p);
}

inline Vec gaussian(mlms::Rng& rng, std::size_t m, double scale = 1.0)
{
    Vec v(m);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

} // namespace oracle
