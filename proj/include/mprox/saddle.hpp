#pragma once

#include "mprox/mdp.hpp"

namespace mprox {

/// F is |X| x N with |entries| <= 1; W is M x |X||A| with rows on the simplex.
class FeatureMaps {
public:
    FeatureMaps(Mat f, Mat w);

    const Mat& f() const { return f_; }
    const Mat& w() const { return w_; }
    int n() const { return static_cast<int>(f_.cols()); }
    int m() const { return static_cast<int>(w_.rows()); }

    /// F = I_{|X|}, W = I_{|X||A|}.
    static FeatureMaps identity(const Mdp& mdp);

private:
    Mat f_;
    Mat w_;
};

struct Iterate {
    Vec u;
    Vec y;
};

struct Gradient {
    Vec gu;
    Vec gy;
};

/// Relaxed saddle problem with W Q F and W r computed once at construction.
class RelaxedProblem {
public:
    RelaxedProblem(Mdp mdp, FeatureMaps features);

    const Mdp& mdp() const { return mdp_; }
    const FeatureMaps& features() const { return features_; }
    const Mat& q() const { return q_; }
    const Mat& wqf() const { return wqf_; }
    const Vec& wr() const { return wr_; }
    double k_smooth() const { return k_; }
    double setup_seconds() const { return setup_seconds_; }
    int n() const { return features_.n(); }
    int m() const { return features_.m(); }

    /// Occupancy candidate W^T y.
    Vec occupancy(const Vec& y) const { return features_.w().transpose() * y; }

private:
    Mdp mdp_;
    FeatureMaps features_;
    Mat q_;
    Mat wqf_;
    Vec wr_;
    double k_ = 0.0;
    double setup_seconds_ = 0.0;
};

/// L(v, mu) = <mu, Q v> + <mu, r>.
double lagrangian(const Mdp& mdp, const Mat& q, const Vec& v, const Vec& mu);

/// y^T (WQF) u + y^T (W r).
double relaxed_lagrangian(const RelaxedProblem& prob, const Iterate& z);

/// g_u = (WQF)^T y, g_y = -W r - (WQF) u.
Gradient operator_g(const RelaxedProblem& prob, const Iterate& z);

/// 1/2 ||u - u0||^2 + KL(y || y0).
double bregman_divergence(const Iterate& z, const Iterate& z0);

/// Regularizer 1/2 ||u||^2 + sum y log y.
double regularizer(const Iterate& z);

/// sqrt(||du||_2^2 + ||dy||_1^2).
double primal_norm(const Vec& du, const Vec& dy);
double primal_norm(const Iterate& delta);

/// sqrt(||gu||_2^2 + ||gy||_inf^2).
double dual_norm(const Vec& gu, const Vec& gy);
double dual_norm(const Gradient& g);

/// K = max_x ||F_{x,.}||_1.
double smoothness_constant(const FeatureMaps& features);

/// L~(z_bar.u, z_ref.y) - L~(z_ref.u, z_bar.y).
double relaxed_duality_gap(const RelaxedProblem& prob, const Iterate& z_bar, const Iterate& z_ref);

/// L(v_bar, mu_ref) - L(v_ref, mu_bar).
double exact_duality_gap(const Mdp& mdp, const Mat& q, const Vec& v_bar, const Vec& mu_bar,
                         const Vec& v_ref, const Vec& mu_ref);

void validate_iterate(const Iterate& z, int n, int m);

} // namespace mprox
