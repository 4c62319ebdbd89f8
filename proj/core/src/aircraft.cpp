#include "sfl/aircraft.hpp"

namespace sfl {

VarxModel aircraft_varx() {
    Eigen::MatrixXd a_hat(3, 6);
    a_hat << -0.201, 0.256, 0.050, 0.160, -0.256, 0.086, //
        -4.773, 3.688, 0.650, 2.982, -2.688, 1.707,      //
        -15.746, 12.898, 2.319, 10.461, -12.897, 5.171;
    Eigen::MatrixXd b_hat(3, 2);
    b_hat << -0.019, -1.440, //
        0.711, -1.800,       //
        1.444, -26.922;
    return VarxModel(a_hat, b_hat, 2);
}

DisturbanceSpec aircraft_uniform_disturbance() {
    DisturbanceSpec spec;
    spec.components = {ComponentDist::uniform(-0.1, 0.1), ComponentDist::uniform(-3.0, 3.0),
                       ComponentDist::uniform(-0.8, 0.8)};
    return spec;
}

DisturbanceSpec aircraft_gaussian_disturbance() {
    DisturbanceSpec spec;
    const DisturbanceSpec u = aircraft_uniform_disturbance();
    for (const auto& c : u.components) {
        const double sd = c.stddev();
        spec.components.push_back(ComponentDist::gaussian(0.0, sd * sd));
    }
    return spec;
}

} // namespace sfl
