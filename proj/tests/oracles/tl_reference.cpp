#include "oracles/tl_reference.hpp"

#include <cmath>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

namespace oracle {

namespace {
const double pi = 3.14159265358979323846;

struct Params {
  double A, C, E0, Eg, E;
};

double kk_integrand_pv(double x, void* p) {
  const auto* q = static_cast<Params*>(p);
  return x * tl_eps_i(q->A, q->C, q->E0, q->Eg, x) / (x + q->E);
}

double kk_integrand(double x, void* p) {
  const auto* q = static_cast<Params*>(p);
  return x * tl_eps_i(q->A, q->C, q->E0, q->Eg, x) / (x * x - q->E * q->E);
}
}  // namespace

double tl_eps_i(double A, double C, double E0, double Eg, double E) {
  if (E <= Eg) return 0.0;
  return A * E0 * C * (E - Eg) * (E - Eg) / ((E * E - E0 * E0) * (E * E - E0 * E0) + C * C * E * E) / E;
}

double tl_eps_r(double A, double C, double E0, double Eg, double eps_inf, double E) {
  const double a = std::sqrt(4 * E0 * E0 - C * C);
  const double g = std::sqrt(E0 * E0 - C * C / 2);
  const double aln = (Eg * Eg - E0 * E0) * E * E + Eg * Eg * C * C - E0 * E0 * (E0 * E0 + 3 * Eg * Eg);
  const double aat = (E * E - E0 * E0) * (E0 * E0 + Eg * Eg) + Eg * Eg * C * C;
  const double z4 = std::pow(E * E - g * g, 2) + a * a * C * C / 4;
  const double t1 = A * C * aln / (2 * pi * z4 * a * E0) * std::log((E0 * E0 + Eg * Eg + a * Eg) / (E0 * E0 + Eg * Eg - a * Eg));
  const double t2 = -A * aat / (pi * z4 * E0) * (pi - std::atan((2 * Eg + a) / C) + std::atan((a - 2 * Eg) / C));
  const double t3 = 2 * A * E0 / (pi * z4 * a) * Eg * (E * E - g * g) * (pi + 2 * std::atan(2 * (g * g - Eg * Eg) / (a * C)));
  const double t4 = -A * E0 * C / (pi * z4) * (E * E + Eg * Eg) / E * std::log(std::abs(E - Eg) / (E + Eg));
  const double t5 = 2 * A * E0 * C / (pi * z4) * Eg *
                    std::log(std::abs(E - Eg) * (E + Eg) / std::sqrt(std::pow(E0 * E0 - Eg * Eg, 2) + Eg * Eg * C * C));
  return eps_inf + t1 + t2 + t3 + t4 + t5;
}

double kk_real_part(double A, double C, double E0, double Eg, double E, double cutoff) {
  gsl_set_error_handler_off();
  Params p{A, C, E0, Eg, E};
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  gsl_function f;
  f.params = &p;
  double result = 0.0, err = 0.0;
  int status;
  if (E > Eg && E < cutoff) {
    f.function = &kk_integrand_pv;
    status = gsl_integration_qawc(&f, Eg, cutoff, E, 0.0, 1e-10, 2000, ws, &result, &err);
  } else {
    f.function = &kk_integrand;
    status = gsl_integration_qags(&f, Eg, cutoff, 0.0, 1e-10, 2000, ws, &result, &err);
  }
  gsl_integration_workspace_free(ws);
  if (status != GSL_SUCCESS && status != GSL_EROUND) throw std::runtime_error("KK integration failed");
  return 2.0 / pi * result;
}

}  // namespace oracle
