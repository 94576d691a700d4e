#include "langspace/geodesic.hpp"

#include <algorithm>
#include <cmath>

namespace langspace {
namespace geo {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSemiMinorM = kSemiMajorM * (1.0 - kFlattening);

double radians(double deg) { return deg * kPi / 180.0; }
}  // namespace

std::optional<double> vincenty_inverse_m(double lat1_deg, double lon1_deg,
                                         double lat2_deg, double lon2_deg) {
  if (lat1_deg == lat2_deg && lon1_deg == lon2_deg) return 0.0;

  const double a = kSemiMajorM;
  const double b = kSemiMinorM;
  const double f = kFlattening;

  const double phi1 = radians(lat1_deg);
  const double phi2 = radians(lat2_deg);
  const double L = radians(lon2_deg - lon1_deg);
  const double U1 = std::atan((1.0 - f) * std::tan(phi1));
  const double U2 = std::atan((1.0 - f) * std::tan(phi2));
  const double sinU1 = std::sin(U1), cosU1 = std::cos(U1);
  const double sinU2 = std::sin(U2), cosU2 = std::cos(U2);

  double lam = L;
  for (int iter = 0; iter < 200; ++iter) {
    const double sinlam = std::sin(lam), coslam = std::cos(lam);
    const double t1 = cosU2 * sinlam;
    const double t2 = cosU1 * sinU2 - sinU1 * cosU2 * coslam;
    const double sin_sigma = std::sqrt(t1 * t1 + t2 * t2);
    if (sin_sigma == 0.0) return 0.0;  // coincident points

    const double cos_sigma = sinU1 * sinU2 + cosU1 * cosU2 * coslam;
    const double sigma = std::atan2(sin_sigma, cos_sigma);
    const double sin_alpha = cosU1 * cosU2 * sinlam / sin_sigma;
    const double cos2_alpha = 1.0 - sin_alpha * sin_alpha;
    const double cos_2sm =
        cos2_alpha == 0.0 ? 0.0  // equatorial line
                          : cos_sigma - 2.0 * sinU1 * sinU2 / cos2_alpha;
    const double C =
        f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha));
    const double lam_prev = lam;
    lam = L + (1.0 - C) * f * sin_alpha *
                  (sigma + C * sin_sigma *
                               (cos_2sm + C * cos_sigma *
                                              (-1.0 + 2.0 * cos_2sm * cos_2sm)));
    if (std::abs(lam - lam_prev) < 1e-12) {
      const double u2 = cos2_alpha * (a * a - b * b) / (b * b);
      const double A_ =
          1.0 + u2 / 16384.0 * (4096.0 + u2 * (-768.0 + u2 * (320.0 - 175.0 * u2)));
      const double B_ =
          u2 / 1024.0 * (256.0 + u2 * (-128.0 + u2 * (74.0 - 47.0 * u2)));
      const double delta_sigma =
          B_ * sin_sigma *
          (cos_2sm +
           B_ / 4.0 *
               (cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm) -
                B_ / 6.0 * cos_2sm * (-3.0 + 4.0 * sin_sigma * sin_sigma) *
                    (-3.0 + 4.0 * cos_2sm * cos_2sm)));
      return b * A_ * (sigma - delta_sigma);
    }
  }
  return std::nullopt;  // near-antipodal, no convergence
}

double great_circle_m(double lat1_deg, double lon1_deg, double lat2_deg,
                      double lon2_deg) {
  const double phi1 = radians(lat1_deg);
  const double phi2 = radians(lat2_deg);
  const double dphi = phi2 - phi1;
  const double dlam = radians(lon2_deg - lon1_deg);
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * kSemiMajorM * std::asin(std::min(1.0, std::sqrt(h)));
}

double geodesic_m(double lat1_deg, double lon1_deg, double lat2_deg,
                  double lon2_deg) {
  auto d = vincenty_inverse_m(lat1_deg, lon1_deg, lat2_deg, lon2_deg);
  if (d) return *d;
  return great_circle_m(lat1_deg, lon1_deg, lat2_deg, lon2_deg);
}

}  // namespace geo
}  // namespace langspace
