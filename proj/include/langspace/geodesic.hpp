#ifndef LANGSPACE_GEODESIC_HPP
#define LANGSPACE_GEODESIC_HPP

#include <optional>

namespace langspace {
namespace geo {

// WGS84 ellipsoid.
inline constexpr double kSemiMajorM = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;

/// Inverse geodesic on the WGS84 ellipsoid (Vincenty's iterative method).
/// Returns meters, or nullopt when the iteration fails to converge, which
/// happens only for near-antipodal pairs.
std::optional<double> vincenty_inverse_m(double lat1_deg, double lon1_deg,
                                         double lat2_deg, double lon2_deg);

/// Great-circle (haversine) distance in meters on a sphere of radius equal to
/// the WGS84 semi-major axis. Fallback for non-converging pairs.
double great_circle_m(double lat1_deg, double lon1_deg, double lat2_deg,
                      double lon2_deg);

/// Ellipsoid distance with the documented near-antipodal fallback.
double geodesic_m(double lat1_deg, double lon1_deg, double lat2_deg,
                  double lon2_deg);

}  // namespace geo
}  // namespace langspace

#endif  // LANGSPACE_GEODESIC_HPP
