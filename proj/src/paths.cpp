#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vitl/eval.hpp"

namespace vitl {

std::vector<EmotionPoint> radial_path(const EmotionPoint& direction, const std::vector<double>& radii) {
    const double norm = direction.coords.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("radial_path: direction must be a nonzero finite vector");
    const Eigen::VectorXd unit = direction.coords / norm;
    std::vector<EmotionPoint> out;
    out.reserve(radii.size());
    for (const double r : radii) {
        if (!std::isfinite(r)) throw InvalidArgument("radial_path: radii must be finite");
        out.push_back({r * unit, direction.label});
    }
    return out;
}

std::vector<EmotionPoint> angular_path(const EmotionPoint& from, const EmotionPoint& to, Index steps) {
    if (steps < 1) throw InvalidArgument("angular_path: steps must be >= 1");
    if (from.dim() != to.dim()) throw DimensionError("angular_path: endpoints have different dimensions");
    const double r = from.coords.norm();
    const double r_to = to.coords.norm();
    if (!(r > 0.0) || !(r_to > 0.0)) throw InvalidArgument("angular_path: zero-vector endpoint has no angle");

    std::vector<EmotionPoint> out(static_cast<std::size_t>(steps), from);
    if (steps == 1) return out;
    const Eigen::VectorXd u = from.coords / r;
    const Eigen::VectorXd w = to.coords / r_to;
    if (u == w) return out;

    const double denom = static_cast<double>(steps - 1);
    if (from.dim() == 2) {
        const double start = std::atan2(from.coords(1), from.coords(0));
        double delta = std::atan2(to.coords(1), to.coords(0)) - start;
        // shorter way round; an exact half turn goes counter-clockwise
        if (delta > std::numbers::pi) delta -= 2.0 * std::numbers::pi;
        if (delta <= -std::numbers::pi) delta += 2.0 * std::numbers::pi;
        for (Index k = 1; k < steps; ++k) {
            const double angle = start + delta * static_cast<double>(k) / denom;
            out[static_cast<std::size_t>(k)].coords = Eigen::Vector2d(r * std::cos(angle), r * std::sin(angle));
        }
    } else {
        const double omega = std::acos(std::clamp(u.dot(w), -1.0, 1.0));
        if (std::abs(omega - std::numbers::pi) < 1e-12) {
            throw InvalidArgument("angular_path: antipodal endpoints do not determine an arc");
        }
        for (Index k = 1; k < steps; ++k) {
            const double s = static_cast<double>(k) / denom;
            const Eigen::VectorXd dir =
                (std::sin((1.0 - s) * omega) * u + std::sin(s * omega) * w) / std::sin(omega);
            out[static_cast<std::size_t>(k)].coords = r * dir / dir.norm();
        }
    }
    for (auto& point : out) point.label.clear();
    out.front().label = from.label;
    if (std::abs(r_to - r) <= 1e-12 * std::max(1.0, r)) out.back() = to;
    return out;
}

std::string format_trajectory(const std::vector<EmotionPoint>& thetas, const std::vector<LandmarkVector>& landmarks) {
    if (thetas.size() != landmarks.size()) throw DimensionError("format_trajectory: path and prediction counts differ");
    const Index p = thetas.empty() ? 0 : thetas.front().dim();
    const Index d = landmarks.empty() ? 0 : landmarks.front().size();
    auto fmt = [](double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    };
    std::ostringstream os;
    os << "path_index";
    for (Index k = 0; k < p; ++k) os << ",theta_" << k;
    for (Index k = 0; k < d; ++k) os << ",l_" << k;
    os << '\n';
    for (std::size_t row = 0; row < thetas.size(); ++row) {
        os << row;
        for (Index k = 0; k < p; ++k) os << ',' << fmt(thetas[row].coords(k));
        for (Index k = 0; k < d; ++k) os << ',' << fmt(landmarks[row](k));
        os << '\n';
    }
    return os.str();
}

}  // namespace vitl
