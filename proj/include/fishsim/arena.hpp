#pragma once

#include <stdexcept>

namespace fishsim {

/// Circular tank geometry and sampling conventions shared by every module.
struct ArenaSpec {
    double radius_cm = 25.0;
    double body_length_cm = 3.5;
    double dt_s = 0.12;

    void validate() const {
        if (!(radius_cm > 0.0))
            throw std::invalid_argument("ArenaSpec: radius must be positive");
        if (!(body_length_cm > 0.0))
            throw std::invalid_argument("ArenaSpec: body length must be positive");
        if (!(dt_s > 0.0))
            throw std::invalid_argument("ArenaSpec: timestep must be positive");
    }
};

} // namespace fishsim
