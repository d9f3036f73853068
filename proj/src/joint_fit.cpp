#include "survalid/joint_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "survalid/errors.hpp"
#include "survalid/marginal.hpp"
#include "survalid/optimize.hpp"
#include "survalid/plackett.hpp"

namespace survalid {

namespace {

constexpr double kClamp = 1e-300;
constexpr double kParamBound = 30.0;

inline double clamped_log(double x, int* clamps) {
    if (x > kClamp) return std::log(x);
    if (clamps) ++(*clamps);
    return std::log(kClamp);
}

}  // namespace

// The copula couples the responder latent (S = 0 <=> latent below u) with the
// survival coordinate exp(-rate t) of the event time, matching the direction
// of the pair generator: theta > 1 associates response with longer survival,
// and the fitted theta is the cross ratio of the observed (S, T) table.
double loglik_trial(const TrialParams& p, double theta, const TrialDataset& data, int* clamps) {
    if (!(theta > 0.0)) throw DomainError("loglik_trial: theta must be positive");
    if (!std::isfinite(p.gamma) || !std::isfinite(p.alpha) || !std::isfinite(p.log_lambda0) ||
        !std::isfinite(p.beta))
        throw DomainError("loglik_trial: parameters must be finite");

    double ll = 0.0;
    for (const auto& rec : data.patients) {
        const double z = rec.treatment;
        const double u = expit(p.gamma + p.alpha * z);
        const double rate = std::exp(p.log_lambda0 + p.beta * z);
        const double surv = std::exp(-rate * rec.time);
        if (rec.event) {
            const double f = rate * surv;
            const double d2 = plackett::conditional_cdf_given_v(u, surv, theta);
            const double piece = rec.surrogate == 0 ? d2 : 1.0 - d2;
            ll += clamped_log(f * piece, clamps);
        } else {
            // P(S = 0, T > t) = C(u, surv); P(S = 1, T > t) = surv - C(u, surv)
            const double C = plackett::cdf(u, surv, theta);
            const double piece = rec.surrogate == 0 ? C : surv - C;
            ll += clamped_log(piece, clamps);
        }
    }
    return ll;
}

void loglik_trial_grad(const TrialParams& p, double theta, const TrialDataset& data,
                       double grad[4], double* loglik_out, int* clamps) {
    double ll = 0.0;
    double g0 = 0, g1 = 0, g2 = 0, g3 = 0;
    for (const auto& rec : data.patients) {
        const double z = rec.treatment;
        const double u = expit(p.gamma + p.alpha * z);
        const double du = u * (1.0 - u);  // d u / d gamma
        const double rate = std::exp(p.log_lambda0 + p.beta * z);
        const double surv = std::exp(-rate * rec.time);
        const double dsv = -rec.time * rate * surv;  // d surv / d log_lambda0

        double dg, da;  // per-record d/d gamma and d/d log_lambda0
        if (rec.event) {
            const double f = rate * surv;
            const double d2 = plackett::conditional_cdf_given_v(u, surv, theta);
            const double dens = plackett::density(u, surv, theta);
            const double d2v = plackett::conditional_given_v_dv(u, surv, theta);
            const double dlogf = 1.0 - rate * rec.time;
            if (rec.surrogate == 0) {
                const double piece = std::max(d2, kClamp);
                ll += clamped_log(f * d2, clamps);
                dg = dens * du / piece;
                da = dlogf + d2v * dsv / piece;
            } else {
                const double piece = std::max(1.0 - d2, kClamp);
                ll += clamped_log(f * (1.0 - d2), clamps);
                dg = -dens * du / piece;
                da = dlogf - d2v * dsv / piece;
            }
        } else {
            const double C = plackett::cdf(u, surv, theta);
            const double d1 = plackett::conditional_cdf_given_u(u, surv, theta);
            const double d2 = plackett::conditional_cdf_given_v(u, surv, theta);
            if (rec.surrogate == 0) {
                const double piece = std::max(C, kClamp);
                ll += clamped_log(C, clamps);
                dg = d1 * du / piece;
                da = d2 * dsv / piece;
            } else {
                const double piece = std::max(surv - C, kClamp);
                ll += clamped_log(surv - C, clamps);
                dg = -d1 * du / piece;
                da = (1.0 - d2) * dsv / piece;
            }
        }
        g0 += dg;
        g1 += z * dg;
        g2 += da;
        g3 += z * da;
    }
    grad[0] = g0;
    grad[1] = g1;
    grad[2] = g2;
    grad[3] = g3;
    if (loglik_out) *loglik_out = ll;
}

double loglik_trial_dtheta(const TrialParams& p, double theta, const TrialDataset& data) {
    double out = 0.0;
    for (const auto& rec : data.patients) {
        const double z = rec.treatment;
        const double u = expit(p.gamma + p.alpha * z);
        const double rate = std::exp(p.log_lambda0 + p.beta * z);
        const double surv = std::exp(-rate * rec.time);
        if (rec.event) {
            const double d2 = plackett::conditional_cdf_given_v(u, surv, theta);
            const double d2t = plackett::conditional_given_v_dtheta(u, surv, theta);
            out += rec.surrogate == 0 ? d2t / std::max(d2, kClamp)
                                      : -d2t / std::max(1.0 - d2, kClamp);
        } else {
            const double C = plackett::cdf(u, surv, theta);
            const double Ct = plackett::cdf_dtheta(u, surv, theta);
            out += rec.surrogate == 0 ? Ct / std::max(C, kClamp)
                                      : -Ct / std::max(surv - C, kClamp);
        }
    }
    return out;
}

namespace {

struct InnerResult {
    TrialParams params;
    double loglik = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int clamps = 0;
};

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

Vec4 to_vec(const TrialParams& p) { return Vec4(p.gamma, p.alpha, p.log_lambda0, p.beta); }
TrialParams to_params(const Vec4& v) { return TrialParams{v[0], v[1], v[2], v[3]}; }

Vec4 gradient_at(const Vec4& x, double theta, const TrialDataset& data, double* ll,
                 int* clamps) {
    double g[4];
    loglik_trial_grad(to_params(x), theta, data, g, ll, clamps);
    return Vec4(g[0], g[1], g[2], g[3]);
}

// Hessian by central differences of the analytic gradient.
Mat4 hessian_at(const Vec4& x, double theta, const TrialDataset& data) {
    Mat4 H;
    for (int k = 0; k < 4; ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
        Vec4 xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const Vec4 gp = gradient_at(xp, theta, data, nullptr, nullptr);
        const Vec4 gm = gradient_at(xm, theta, data, nullptr, nullptr);
        H.col(k) = (gp - gm) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

// Maximise one trial's log-likelihood at fixed theta: damped Newton with
// step-halving, parameters boxed at +-30. Never throws; a trial that misses
// the gradient tolerance comes back with converged = false.
InnerResult maximize_trial(const TrialDataset& data, double theta, const TrialParams& init,
                           const JointFitConfig& cfg) {
    Vec4 x = to_vec(init);
    for (int k = 0; k < 4; ++k) x[k] = std::clamp(x[k], -kParamBound, kParamBound);

    InnerResult res;
    int clamps = 0;
    double ll;
    Vec4 g = gradient_at(x, theta, data, &ll, &clamps);

    for (int iter = 0; iter < cfg.inner_max_iter; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < cfg.inner_grad_tol) {
            res.converged = true;
            break;
        }
        Mat4 H = hessian_at(x, theta, data);
        Vec4 step;
        bool good = false;
        double ridge = 0.0;
        for (int attempt = 0; attempt < 12 && !good; ++attempt) {
            Mat4 A = -H + ridge * Mat4::Identity();
            Eigen::LDLT<Mat4> ldlt(A);
            if (ldlt.info() == Eigen::Success) {
                step = ldlt.solve(g);
                good = step.allFinite() && step.dot(g) > 0.0;
            }
            ridge = ridge == 0.0 ? 1e-6 : ridge * 10.0;
        }
        if (!good) step = g;  // plain ascent as a last resort

        double t = 1.0;
        Vec4 xn;
        double lln = -std::numeric_limits<double>::infinity();
        int halvings = 0;
        int trial_clamps = 0;
        for (; halvings < 40; ++halvings) {
            xn = x + t * step;
            for (int k = 0; k < 4; ++k) xn[k] = std::clamp(xn[k], -kParamBound, kParamBound);
            trial_clamps = 0;
            lln = loglik_trial(to_params(xn), theta, data, &trial_clamps);
            if (lln >= ll - 1e-13) break;
            t *= 0.5;
        }
        if (halvings == 40 || (xn - x).lpNorm<Eigen::Infinity>() < 1e-13) {
            // no usable ascent left; report whether we are near stationarity
            res.converged = g.lpNorm<Eigen::Infinity>() < 1e-4;
            break;
        }
        x = xn;
        clamps += trial_clamps;
        g = gradient_at(x, theta, data, &ll, nullptr);
        if (iter == cfg.inner_max_iter - 1)
            res.converged = g.lpNorm<Eigen::Infinity>() < cfg.inner_grad_tol;
    }
    res.params = to_params(x);
    res.loglik = ll;
    res.clamps = clamps;
    return res;
}

struct ProfileState {
    std::vector<TrialParams> warm;
    int evals = 0;
    int clamps = 0;
    int nonconverged_last = 0;
};

double profile_loglik(double logtheta, const std::vector<TrialDataset>& trials,
                      const std::vector<TrialParams>& inits, const JointFitConfig& cfg,
                      ProfileState& st) {
    const double theta = std::exp(logtheta);
    double total = 0.0;
    st.nonconverged_last = 0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        InnerResult r = maximize_trial(trials[i], theta, st.warm[i], cfg);
        // a cold restart from the marginal estimates occasionally rescues a
        // warm start stranded by a large theta move
        if (!r.converged) {
            InnerResult r2 = maximize_trial(trials[i], theta, inits[i], cfg);
            if (r2.loglik > r.loglik || r2.converged) r = r2;
        }
        st.warm[i] = r.params;
        st.clamps += r.clamps;
        if (!r.converged) ++st.nonconverged_last;
        total += r.loglik;
    }
    ++st.evals;
    return total;
}

std::vector<TrialParams> marginal_inits(const std::vector<TrialDataset>& trials) {
    std::vector<TrialParams> inits;
    inits.reserve(trials.size());
    for (const auto& t : trials) {
        TrialParams p;
        const LogisticFit lf = fit_logistic_treatment(t);
        p.gamma = lf.gamma_hat;
        p.alpha = lf.alpha_hat;
        try {
            const ExponentialFit ef = fit_exponential_ph(t);
            p.log_lambda0 = std::log(ef.lambda0_hat);
            p.beta = ef.beta_hat;
        } catch (const EstimationError&) {
            double events = static_cast<double>(t.events());
            double exposure = 0.0;
            for (const auto& rec : t.patients) exposure += rec.time;
            p.log_lambda0 = std::log(std::max(events, 0.5) / std::max(exposure, 1e-12));
            p.beta = 0.0;
        }
        inits.push_back(p);
    }
    return inits;
}

}  // namespace

JointFitResult fit_joint(const std::vector<TrialDataset>& trials, const JointFitConfig& cfg) {
    if (trials.size() < 2) throw DomainError("fit_joint: at least 2 trials are required");
    for (const auto& t : trials)
        if (!t.both_arms() || t.n() < 2)
            throw EstimationError("fit_joint: trial '" + t.trial_id + "' is not estimable");

    const std::vector<TrialParams> inits = marginal_inits(trials);
    ProfileState st;
    st.warm = inits;

    const double lo = std::log(cfg.theta_min);
    const double hi = std::log(cfg.theta_max);
    const int K = std::max(cfg.scan_points, 5);

    // coarse scan to bracket the profile maximum
    std::vector<double> xs(K), fs(K);
    for (int k = 0; k < K; ++k) {
        xs[k] = lo + (hi - lo) * k / (K - 1);
        fs[k] = profile_loglik(xs[k], trials, inits, cfg, st);
    }
    int best = 0;
    for (int k = 1; k < K; ++k)
        if (fs[k] > fs[best]) best = k;
    if (best == 0 || best == K - 1)
        throw NumericError("fit_joint: profile maximum at the theta bracket boundary");

    bool multimodal = false;
    int peaks = 0;
    for (int k = 1; k + 1 < K; ++k)
        if (fs[k] > fs[k - 1] && fs[k] > fs[k + 1]) ++peaks;
    if (peaks > 1) multimodal = true;

    const double x_hat = brent_minimize(
        [&](double x) { return -profile_loglik(x, trials, inits, cfg, st); }, xs[best - 1],
        xs[best + 1], cfg.outer_tol);

    // final inner fits at the optimum
    const double theta_hat = std::exp(x_hat);
    JointFitResult out;
    out.theta_hat = theta_hat;
    out.logtheta_hat = x_hat;
    out.profile_evals = st.evals;
    out.profile_multimodal = multimodal;

    double total = 0.0;
    int nonconv = 0;
    out.per_trial.reserve(trials.size());
    out.params_at_opt.reserve(trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
        InnerResult r = maximize_trial(trials[i], theta_hat, st.warm[i], cfg);
        if (!r.converged) ++nonconv;
        total += r.loglik;
        out.params_at_opt.push_back(r.params);
        st.warm[i] = r.params;

        TrialEffects eff;
        eff.gamma_i = r.params.gamma;
        eff.alpha_i = r.params.alpha;
        eff.log_lambda0_i = r.params.log_lambda0;
        eff.beta_i = r.params.beta;
        const Mat4 H = hessian_at(to_vec(r.params), theta_hat, trials[i]);
        const Mat4 info = -H;
        Eigen::FullPivLU<Mat4> lu(info);
        if (lu.isInvertible()) {
            const Mat4 cov = lu.inverse();
            if (cov(1, 1) > 0.0) eff.se_alpha = std::sqrt(cov(1, 1));
            if (cov(3, 3) > 0.0) eff.se_beta = std::sqrt(cov(3, 3));
        }
        out.per_trial.push_back(eff);
    }
    out.loglik = total;
    out.underflow_clamps = st.clamps;
    out.inner_nonconverged = nonconv;
    if (static_cast<double>(nonconv) > 0.2 * static_cast<double>(trials.size()))
        throw FitError("fit_joint: inner Newton failed to converge in more than 20% of trials");
    out.converged = true;

    out.theta_ci = theta_confidence_interval(trials, out, cfg);
    return out;
}

std::pair<double, double> theta_confidence_interval(const std::vector<TrialDataset>& trials,
                                                    const JointFitResult& fit,
                                                    const JointFitConfig& cfg) {
    if (!fit.converged) throw NumericError("theta_confidence_interval: fit not converged");
    const std::vector<TrialParams> inits = marginal_inits(trials);
    ProfileState st;
    st.warm = fit.params_at_opt;
    const double h = cfg.ci_step;
    const double f0 = profile_loglik(fit.logtheta_hat, trials, inits, cfg, st);
    st.warm = fit.params_at_opt;
    const double fp = profile_loglik(fit.logtheta_hat + h, trials, inits, cfg, st);
    st.warm = fit.params_at_opt;
    const double fm = profile_loglik(fit.logtheta_hat - h, trials, inits, cfg, st);
    const double curvature = -(fp - 2.0 * f0 + fm) / (h * h);
    if (!(curvature > 0.0))
        throw NumericError("theta_confidence_interval: flat profile (non-positive curvature)");
    const double half = 1.96 / std::sqrt(curvature);
    return {std::exp(fit.logtheta_hat - half), std::exp(fit.logtheta_hat + half)};
}

}  // namespace survalid
