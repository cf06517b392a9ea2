#pragma once

// Interface/propagation-matrix TMM (Fresnel coefficients) and the closed-form
// incoherent sum for a film on a thick lossless substrate. Independent of the
// library's characteristic-matrix and intensity-matrix implementation.

#include <complex>
#include <vector>

namespace oracle {

struct RTPair {
  double R;
  double T;
};

/// indices: incidence, interior layers..., exit. thicknesses: interior only.
RTPair coherent_rt(const std::vector<std::complex<double>>& indices, const std::vector<double>& thicknesses_nm,
                   double lambda_nm);

/// air / film / thick lossless glass / air with incoherent glass.
RTPair film_on_incoherent_glass(std::complex<double> film, double d_nm, double n_glass, double lambda_nm);

}  // namespace oracle
