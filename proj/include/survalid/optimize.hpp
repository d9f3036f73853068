#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

namespace survalid {

// Brent minimisation on [a, b] to absolute tolerance tol in x.
// Classic golden-section / successive-parabolic-interpolation hybrid.
inline double brent_minimize(const std::function<double(double)>& f, double a, double b,
                             double tol, int max_iter = 200) {
    const double gold = 0.5 * (3.0 - std::sqrt(5.0));
    double x = a + gold * (b - a), w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        const double m = 0.5 * (a + b);
        const double tol1 = tol + 1e-12 * std::abs(x);
        if (std::abs(x - m) <= 2.0 * tol1 - 0.5 * (b - a)) break;
        bool golden = true;
        if (std::abs(e) > tol1) {
            // parabolic step through (v, w, x)
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double e_old = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * e_old) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                golden = false;
                const double u_try = x + d;
                if (u_try - a < 2.0 * tol1 || b - u_try < 2.0 * tol1)
                    d = x < m ? tol1 : -tol1;
            }
        }
        if (golden) {
            e = (x < m ? b : a) - x;
            d = gold * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            if (u < x) b = x; else a = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return x;
}

}  // namespace survalid
