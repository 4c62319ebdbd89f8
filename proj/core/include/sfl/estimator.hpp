#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sfl/lti.hpp"

namespace sfl {

/// Output feedback on the stacked past-I/O vector z_k = (u, y window), with a
/// small uniform dither added for excitation: u_k = K z_k + v_k.
struct FeedbackLaw {
    Eigen::MatrixXd K;       // n_u x ell*(n_u + n_y)
    double dither = 1e-3;    // v_k ~ U(-dither, dither) per input channel
    int ell = 0;

    Eigen::VectorXd apply(const Eigen::MatrixXd& u_win, const Eigen::MatrixXd& y_win,
                          const Eigen::VectorXd& v) const;
};

/// Stacked past-I/O vector of a lag-ell model: (u window, y window), oldest first.
Eigen::VectorXd stack_window(const Eigen::MatrixXd& u_win, const Eigen::MatrixXd& y_win);

/// Companion-form realization of a lag-ell I/O model: z_{k+1} = F z_k + G u_k
/// (+ noise entering through the newest output row).
void companion_form(const VarxModel& m, Eigen::MatrixXd& F, Eigen::MatrixXd& G);

/// Infinite-horizon discrete-time LQR gain; returns K with u = K z stabilizing.
Eigen::MatrixXd dlqr(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     int max_iters = 10000, double tol = 1e-11);

/// Least-squares disturbance estimate from disturbed I/O data: the residual of
/// projecting each output onto its lag-ell I/O window across the whole record.
/// Column i estimates the disturbance driving the output at data column ell + i,
/// i.e. the disturbance at time data.start_time + ell - 1 + i.
Eigen::MatrixXd estimate_disturbances(const RealTrajectory& data, int ell,
                                      double rank_rtol = 1e-10);

/// Least-squares fit of the lag-ell model from I/O data and a disturbance
/// record (true or estimated): regresses y_k - w_{k-1} on the stacked window.
VarxModel identify_varx(const RealTrajectory& data, const Eigen::MatrixXd& w,
                        int ell, double rank_rtol = 1e-10);

struct SynthesisOptions {
    double rank_rtol = 1e-10;
    double pe_rtol = 1e-8;
    double pin_tol = 1e-6;
};

/// One chunk of an undisturbed continuation: pins the init window and zeroes
/// the estimated-disturbance rows, reads the free I/O rows. `w_hat` must be
/// aligned as produced by estimate_disturbances on the same data. Returns the
/// continuation over T_hat steps after the init window.
RealTrajectory generate_undisturbed_trajectory(const RealTrajectory& data,
                                               const Eigen::MatrixXd& w_hat, int ell, int T_hat,
                                               const RealTrajectory& init,
                                               const SynthesisOptions& opts = {});

/// Repeated chunked application of generate_undisturbed_trajectory, re-seeding
/// the init window from the tail of each chunk, until `total` steps are
/// produced (init window included in the returned record).
RealTrajectory synthesize_undisturbed_data(const RealTrajectory& data,
                                           const Eigen::MatrixXd& w_hat, int ell, int chunk,
                                           int total, const RealTrajectory& init,
                                           const SynthesisOptions& opts = {});

struct NearOriginResult {
    RealTrajectory traj;      // recovered I/O trajectory near the origin
    double stack_condition;   // condition number of the pinned stack
};

/// Undisturbed continuation in feedback-transformed coordinates: works on the
/// signals (u - K z, z) so that a stabilizing K keeps the synthesized record
/// bounded even when the open-loop data diverge. `v` supplies the small new
/// inputs (n_u x T_hat); the init window seeds z_1.
NearOriginResult generate_undisturbed_near_origin(const RealTrajectory& data,
                                                  const Eigen::MatrixXd& w_hat,
                                                  const Eigen::MatrixXd& K, int ell, int T_hat,
                                                  const Eigen::MatrixXd& v,
                                                  const RealTrajectory& init,
                                                  const SynthesisOptions& opts = {});

/// Abstract one-step plant port for the feedback search; the CLI binds it to a
/// simulated model.
class Plant {
public:
    virtual ~Plant() = default;
    virtual int n_u() const = 0;
    virtual int n_y() const = 0;
    virtual int lag() const = 0;
    /// Start a new episode; returns the initial I/O window (length lag()).
    virtual RealTrajectory reset(std::uint64_t episode_seed) = 0;
    /// Apply one input, advance, return the next output.
    virtual Eigen::VectorXd step(const Eigen::VectorXd& u) = 0;
};

struct FeedbackSearchParams {
    int sample_len = 80;       // length of each identification record
    double dither = 1e-3;
    int bound_window = 50;     // boundedness test window
    double ball_factor = 10.0; // allowed radius, times (1 + initial output norm)
    int max_iters = 10;
    double overflow = 1e9;     // hard divergence guard while sampling
    double ident_range = 1e5;  // truncate the identification record once the
                               // output exceeds this multiple of its initial
                               // scale; a wider dynamic range than this buries
                               // the dithered inputs below the rank tolerance
};

/// Iterative feedback search: sample a short closed-loop record, estimate the
/// disturbances, identify the model, synthesize an LQR gain on its companion
/// form, and accept once a test episode stays inside the configured ball.
FeedbackLaw find_stabilizing_feedback(Plant& plant, std::uint64_t seed,
                                      const FeedbackSearchParams& params = {});

} // namespace sfl
