#pragma once

#include <Eigen/Dense>
#include <map>
#include <tuple>

#include "sfl/errors.hpp"
#include "sfl/lti.hpp"

namespace sfl {

/// Block Hankel matrix with `depth` block rows: entry block (i, t) = data column t + i.
Eigen::MatrixXd hankel(const Eigen::MatrixXd& data, int depth);

struct RankCertificate {
    int rank = 0;
    int required = 0;
    bool pass = false;
    Eigen::VectorXd singular_values;
    double condition_number() const;
};

/// Persistency of excitation of the given order: H_order(u) has full row rank.
RankCertificate is_persistently_exciting(const Eigen::MatrixXd& u, int order, double rtol = 1e-8);

/// The stacked rank condition on undisturbed data: rank [H_{l+N}(u); H_l(y head)] =
/// (l + N) n_u + l n_y. The y block is the first l block rows of H_{l+N}(y), so both
/// blocks share the same column count.
RankCertificate check_stacked_pe(const Eigen::MatrixXd& u, const Eigen::MatrixXd& y, int ell,
                                    int N, double rtol = 1e-8);

enum class CountScheme { disturbed_stack, shortened_stages };

/// Row-count convention for the per-j blocks in the shortened-stage accounting.
/// `assembled` counts the blocks as this library stacks them (l - 1 past block
/// rows); `full_past` keeps all l past block rows in every shortened stage.
enum class CountConvention { assembled, full_past };

struct HankelDims {
    int n_u, n_y, n_w, ell, N, L, n_g;
};

/// Structurally non-zero cells across all Hankel blocks of the given
/// data-driven representation, counting reused data cells once per block.
long long count_nonzero_entries(CountScheme scheme, const HankelDims& dims,
                                CountConvention convention = CountConvention::assembled);

/// A recorded trajectory with cached Hankel blocks. Blocks are keyed by signal
/// ('u', 'y', 'w'), absolute window [first, last] and depth; all caching is done
/// up front by the callers that know which blocks they need.
class HankelSystem {
public:
    explicit HankelSystem(RealTrajectory data);

    const RealTrajectory& data() const { return data_; }

    /// Hankel block over the trajectory window [first, last] (absolute times).
    const Eigen::MatrixXd& block(char signal, int first, int last, int depth) const;

    int n_g(int depth) const { return data_.length() - depth + 1; }

private:
    RealTrajectory data_;
    mutable std::map<std::tuple<char, int, int, int>, Eigen::MatrixXd> cache_;
};

} // namespace sfl
