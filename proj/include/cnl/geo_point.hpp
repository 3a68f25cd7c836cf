#pragma once

#include <cmath>
#include <string>

#include "cnl/error.hpp"

namespace cnl {

/// WGS84 latitude/longitude in degrees. Ranges are checked on construction.
class GeoPoint {
 public:
  GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
    if (!valid(lat, lon)) {
      throw Error(ErrorCode::InvalidCoordinate,
                  "(" + std::to_string(lat) + ", " + std::to_string(lon) + ") out of range");
    }
  }

  static bool valid(double lat, double lon) {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
  }

  double lat() const { return lat_; }
  double lon() const { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_;
  double lon_;
};

}  // namespace cnl
