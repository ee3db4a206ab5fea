#pragma once

#include <string>

#include "octoverify/errors.hpp"

namespace octo {

// Coefficients of the PD inner-loop controller.
struct Gains {
  double K_dz{0.0};
  double K_p_phi{0.0};
  double K_d_phi{0.0};
  double K_p_theta{0.0};
  double K_d_theta{0.0};
  double K_p_psi{0.0};
  double K_d_psi{0.0};

  void validate() const {
    if (!(K_dz > 0 && K_p_phi > 0 && K_d_phi > 0 && K_p_theta > 0 && K_d_theta > 0 &&
          K_p_psi > 0 && K_d_psi > 0))
      throw ConfigError("gains: all coefficients must be strictly positive");
  }

  friend bool operator==(const Gains&, const Gains&) = default;
};

}  // namespace octo
