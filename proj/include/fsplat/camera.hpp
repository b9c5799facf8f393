#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "fsplat/errors.hpp"

namespace fsplat {

enum class CameraModel { kEquidistant, kPolynomial, kPinhole };

inline const char* to_string(CameraModel m) {
  switch (m) {
    case CameraModel::kEquidistant: return "EQUIDISTANT";
    case CameraModel::kPolynomial: return "POLYNOMIAL";
    case CameraModel::kPinhole: return "PINHOLE";
  }
  return "?";
}

inline CameraModel camera_model_from_string(const std::string& s) {
  if (s == "EQUIDISTANT") return CameraModel::kEquidistant;
  if (s == "POLYNOMIAL") return CameraModel::kPolynomial;
  if (s == "PINHOLE") return CameraModel::kPinhole;
  throw_validation("unknown camera model '" + s + "'");
}

/// Unit viewing ray in the camera frame. theta is the incidence angle from
/// the optical axis (+z); theta > pi/2 means the ray points behind the
/// sensor plane, which wide fisheye lenses can still image.
struct Ray {
  Eigen::Vector3d dir;  // unit norm
  double theta = 0.0;   // in [0, pi]
};

struct PixelProjection {
  Eigen::Vector2d pixel{0.0, 0.0};
  double theta = 0.0;
  bool valid = false;
};

/// The equidistant focal length that maps theta = fov/2 onto a given image
/// circle radius.
inline double fov_to_focal(double fov_deg, double image_radius_px) {
  if (!(fov_deg > 0.0 && fov_deg <= 360.0))
    throw_validation("fov_deg must be in (0, 360]");
  if (!(image_radius_px > 0.0))
    throw_validation("image_radius_px must be positive");
  return image_radius_px / (0.5 * fov_deg * M_PI / 180.0);
}

/// Central camera with a radially symmetric projection. The radial map
/// d(theta) gives the image-plane distance (in units of focal length) for a
/// ray at incidence angle theta:
///
///   EQUIDISTANT  d = theta
///   POLYNOMIAL   d = theta + k1 t^3 + k2 t^5 + k3 t^7 + k4 t^9
///   PINHOLE      d = tan(theta)
///
/// Pixel coordinates follow the convention that integer coordinates are
/// pixel centers; the principal point (cx, cy) is a continuous coordinate.
/// Instances are immutable and safe to share across threads.
class FisheyeCamera {
 public:
  FisheyeCamera(CameraModel model, double fx, double fy, double cx, double cy,
                std::array<double, 4> k, int width, int height, double fov_deg)
      : model_(model),
        fx_(fx),
        fy_(fy),
        cx_(cx),
        cy_(cy),
        k_(k),
        width_(width),
        height_(height),
        fov_deg_(fov_deg),
        theta_max_(0.5 * fov_deg * M_PI / 180.0) {
    if (!(fx > 0.0) || !(fy > 0.0)) throw_validation("focal lengths must be positive");
    if (width < 1 || height < 1) throw_validation("image size must be at least 1x1");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
      throw_validation("principal point must lie inside the image");
    if (!(theta_max_ > 0.0) || theta_max_ > M_PI + 1e-12)
      throw_validation("fov_deg must be in (0, 360]");
    theta_max_ = std::min(theta_max_, M_PI);
    if (model != CameraModel::kPolynomial) {
      for (double c : k_)
        if (c != 0.0)
          throw_validation("distortion coefficients must be zero for this model");
    }
    if (model == CameraModel::kPinhole && theta_max_ >= M_PI / 2)
      throw_validation("pinhole camera requires fov < 180 degrees");
    check_monotone();
  }

  static FisheyeCamera equidistant(double fx, double fy, double cx, double cy,
                                   int width, int height, double fov_deg) {
    return FisheyeCamera(CameraModel::kEquidistant, fx, fy, cx, cy, {0, 0, 0, 0},
                         width, height, fov_deg);
  }

  static FisheyeCamera polynomial(double fx, double fy, double cx, double cy,
                                  std::array<double, 4> k, int width, int height,
                                  double fov_deg) {
    return FisheyeCamera(CameraModel::kPolynomial, fx, fy, cx, cy, k, width,
                         height, fov_deg);
  }

  static FisheyeCamera pinhole(double fx, double fy, double cx, double cy,
                               int width, int height, double fov_deg) {
    return FisheyeCamera(CameraModel::kPinhole, fx, fy, cx, cy, {0, 0, 0, 0},
                         width, height, fov_deg);
  }

  CameraModel model() const { return model_; }
  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  const std::array<double, 4>& k() const { return k_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double fov_deg() const { return fov_deg_; }
  double theta_max() const { return theta_max_; }

  /// Copy with the selected distortion coefficients forced to zero
  /// (revalidated). Reproduces pipelines that drop individual terms before
  /// reprojecting to an ideal model.
  FisheyeCamera with_coeffs_zeroed(std::array<bool, 4> zero) const {
    std::array<double, 4> k = k_;
    for (int i = 0; i < 4; ++i)
      if (zero[i]) k[i] = 0.0;
    return FisheyeCamera(model_, fx_, fy_, cx_, cy_, k, width_, height_, fov_deg_);
  }

  double radial(double theta) const {
    switch (model_) {
      case CameraModel::kEquidistant:
        return theta;
      case CameraModel::kPolynomial: {
        const double t2 = theta * theta;
        return theta * (1.0 + t2 * (k_[0] + t2 * (k_[1] + t2 * (k_[2] + t2 * k_[3]))));
      }
      case CameraModel::kPinhole:
        return std::tan(std::min(theta, M_PI / 2 - 1e-9));
    }
    return 0.0;
  }

  double radial_derivative(double theta) const {
    switch (model_) {
      case CameraModel::kEquidistant:
        return 1.0;
      case CameraModel::kPolynomial: {
        const double t2 = theta * theta;
        return 1.0 + t2 * (3.0 * k_[0] +
                           t2 * (5.0 * k_[1] + t2 * (7.0 * k_[2] + t2 * 9.0 * k_[3])));
      }
      case CameraModel::kPinhole: {
        const double c = std::cos(std::min(theta, M_PI / 2 - 1e-9));
        return 1.0 / (c * c);
      }
    }
    return 0.0;
  }

  /// Projects a camera-frame point. Non-finite or zero input is rejected;
  /// points beyond theta_max or landing outside the samplable pixel range
  /// come back with valid = false (pixel is still finite).
  PixelProjection project(const Eigen::Vector3d& p) const {
    if (!p.allFinite()) throw_validation("project: non-finite point");
    const double r = std::hypot(p.x(), p.y());
    if (r == 0.0 && p.z() == 0.0) throw_validation("project: zero point has no direction");

    PixelProjection out;
    out.theta = std::atan2(r, p.z());
    const bool in_fov = out.theta <= theta_max_;

    if (r < 1e-300) {
      out.pixel = {cx_, cy_};
      out.valid = in_fov;
      return out;
    }
    const double d = radial(std::min(out.theta, pinhole_safe_theta()));
    out.pixel.x() = cx_ + fx_ * d * p.x() / r;
    out.pixel.y() = cy_ + fy_ * d * p.y() / r;
    out.valid = in_fov && in_bounds(out.pixel);
    return out;
  }

  /// Back-projects a pixel to a unit ray. Pixels implying a radial distance
  /// beyond d(theta_max) raise an out-of-fov error. POLYNOMIAL cameras invert
  /// d(theta) by bracketed Newton to 1e-12 rad.
  Ray unproject(const Eigen::Vector2d& pixel) const {
    if (!pixel.allFinite()) throw_validation("unproject: non-finite pixel");
    const double mx = (pixel.x() - cx_) / fx_;
    const double my = (pixel.y() - cy_) / fy_;
    const double rn = std::hypot(mx, my);
    const double rn_max = radial(theta_max_);
    if (rn > rn_max * (1.0 + 1e-9) + 1e-12)
      throw_out_of_fov("unproject: pixel outside the valid image radius");

    Ray ray;
    ray.theta = invert_radial(std::min(rn, rn_max));
    if (rn < 1e-300) {
      ray.dir = {0.0, 0.0, 1.0};
      ray.theta = 0.0;
      return ray;
    }
    const double s = std::sin(ray.theta) / rn;
    ray.dir = {s * mx, s * my, std::cos(ray.theta)};
    return ray;
  }

  /// 2x3 Jacobian of the pixel coordinates with respect to the camera-frame
  /// point, at the given point. Exact for all three radial models.
  Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& p) const {
    if (!p.allFinite()) throw_validation("jacobian: non-finite point");
    const double x = p.x(), y = p.y(), z = p.z();
    const double r2 = x * x + y * y;
    const double rho2 = r2 + z * z;
    if (rho2 == 0.0) throw_validation("jacobian: zero point");

    Eigen::Matrix<double, 2, 3> J;
    if (r2 < 1e-24 * rho2) {
      // On-axis limit: d(theta)/r -> d'(0)/z and the mixed terms vanish.
      if (z <= 0.0) throw_numerical("jacobian undefined at the backward pole");
      J << fx_ / z, 0.0, 0.0, 0.0, fy_ / z, 0.0;
      return J;
    }
    const double r = std::sqrt(r2);
    const double theta = std::atan2(r, z);
    const double d = radial(std::min(theta, pinhole_safe_theta()));
    const double dp = radial_derivative(std::min(theta, pinhole_safe_theta()));
    const double a = d / r;
    const double b = (dp * z / rho2 - a) / r2;
    J(0, 0) = fx_ * (a + x * x * b);
    J(0, 1) = fx_ * x * y * b;
    J(0, 2) = -fx_ * x * dp / rho2;
    J(1, 0) = fy_ * x * y * b;
    J(1, 1) = fy_ * (a + y * y * b);
    J(1, 2) = -fy_ * y * dp / rho2;
    return J;
  }

  bool in_bounds(const Eigen::Vector2d& pixel) const {
    return pixel.x() >= 0.0 && pixel.x() <= width_ - 1.0 && pixel.y() >= 0.0 &&
           pixel.y() <= height_ - 1.0;
  }

  bool operator==(const FisheyeCamera& o) const {
    return model_ == o.model_ && fx_ == o.fx_ && fy_ == o.fy_ && cx_ == o.cx_ &&
           cy_ == o.cy_ && k_ == o.k_ && width_ == o.width_ &&
           height_ == o.height_ && fov_deg_ == o.fov_deg_;
  }

 private:
  double pinhole_safe_theta() const {
    return model_ == CameraModel::kPinhole ? M_PI / 2 - 1e-9 : M_PI;
  }

  void check_monotone() const {
    // d(theta) must be strictly increasing on [0, theta_max]; dense sampling
    // of both d and d' catches non-monotone polynomial coefficient sets.
    constexpr int kSamples = 4096;
    double prev = 0.0;
    for (int i = 0; i <= kSamples; ++i) {
      const double t = theta_max_ * i / kSamples;
      if (radial_derivative(t) <= 0.0)
        throw_validation("radial distortion is not monotone on [0, theta_max]");
      const double d = radial(t);
      if (i > 0 && d <= prev)
        throw_validation("radial distortion is not monotone on [0, theta_max]");
      prev = d;
    }
  }

  /// Solves d(theta) = rn for theta in [0, theta_max]. Newton from the
  /// equidistant initial guess with a maintained bisection bracket.
  double invert_radial(double rn) const {
    switch (model_) {
      case CameraModel::kEquidistant:
        return rn;
      case CameraModel::kPinhole:
        return std::atan(rn);
      case CameraModel::kPolynomial:
        break;
    }
    double lo = 0.0, hi = theta_max_;
    double t = std::min(rn, theta_max_);
    for (int it = 0; it < 100; ++it) {
      const double f = radial(t) - rn;
      if (f > 0.0)
        hi = t;
      else
        lo = t;
      const double step = f / radial_derivative(t);
      double next = t - step;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) < 1e-12) return next;
      t = next;
    }
    return t;
  }

  CameraModel model_;
  double fx_, fy_, cx_, cy_;
  std::array<double, 4> k_;
  int width_, height_;
  double fov_deg_;
  double theta_max_;
};

/// Largest theta* <= pi such that the polynomial radial map with these
/// coefficients is strictly increasing on [0, theta*]. Used when a file
/// format does not record the angular coverage.
inline double monotone_theta_limit(const std::array<double, 4>& k) {
  constexpr int kSamples = 8192;
  auto deriv = [&k](double t) {
    const double t2 = t * t;
    return 1.0 + t2 * (3.0 * k[0] + t2 * (5.0 * k[1] + t2 * (7.0 * k[2] + t2 * 9.0 * k[3])));
  };
  for (int i = 1; i <= kSamples; ++i) {
    const double t = M_PI * i / kSamples;
    if (deriv(t) <= 0.0) return M_PI * (i - 1) / kSamples;
  }
  return M_PI;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Human-readable key/value block used by the CLI camera files.
inline std::string format_camera_text(const FisheyeCamera& cam) {
  std::ostringstream os;
  os << "model " << to_string(cam.model()) << "\n";
  os << "fx " << detail::format_double(cam.fx()) << "\n";
  os << "fy " << detail::format_double(cam.fy()) << "\n";
  os << "cx " << detail::format_double(cam.cx()) << "\n";
  os << "cy " << detail::format_double(cam.cy()) << "\n";
  for (int i = 0; i < 4; ++i)
    os << "k" << i + 1 << " " << detail::format_double(cam.k()[i]) << "\n";
  os << "width " << cam.width() << "\n";
  os << "height " << cam.height() << "\n";
  os << "fov_deg " << detail::format_double(cam.fov_deg()) << "\n";
  return os.str();
}

inline FisheyeCamera parse_camera_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key >> value))
      throw_validation("camera text: malformed line " + std::to_string(line_no));
    kv[key] = value;
  }
  auto need = [&kv](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw_validation("camera text: missing key '" + key + "'");
    return it->second;
  };
  auto to_d = [](const std::string& s) {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw_validation("camera text: bad number '" + s + "'");
    return v;
  };
  std::array<double, 4> k{0, 0, 0, 0};
  for (int i = 0; i < 4; ++i) {
    auto it = kv.find("k" + std::to_string(i + 1));
    if (it != kv.end()) k[i] = to_d(it->second);
  }
  return FisheyeCamera(camera_model_from_string(need("model")), to_d(need("fx")),
                       to_d(need("fy")), to_d(need("cx")), to_d(need("cy")), k,
                       static_cast<int>(to_d(need("width"))),
                       static_cast<int>(to_d(need("height"))), to_d(need("fov_deg")));
}

inline FisheyeCamera read_camera_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open camera file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_camera_text(ss.str());
}

inline void write_camera_file(const FisheyeCamera& cam, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write camera file: " + path);
  out << format_camera_text(cam);
  if (!out) throw_io("failed writing camera file: " + path);
}

}  // namespace fsplat
