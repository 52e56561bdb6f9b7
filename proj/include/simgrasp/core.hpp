#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace simgrasp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Transform = Eigen::Isometry3d;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error(what) {}
};

class InsufficientPoints : public Error {
public:
    explicit InsufficientPoints(const std::string& what) : Error(what) {}
};

class TooSparse : public Error {
public:
    explicit TooSparse(const std::string& what) : Error(what) {}
};

class DegenerateHistogram : public Error {
public:
    explicit DegenerateHistogram(const std::string& what) : Error(what) {}
};

class NoContactRegion : public Error {
public:
    explicit NoContactRegion(const std::string& what) : Error(what) {}
};

class DegenerateProjection : public Error {
public:
    explicit DegenerateProjection(const std::string& what) : Error(what) {}
};

class UnknownWord : public Error {
public:
    explicit UnknownWord(const std::string& what) : Error(what) {}
};

class CoarseFailure : public Error {
public:
    explicit CoarseFailure(const std::string& what) : Error(what) {}
};

class RegistrationFailed : public Error {
public:
    explicit RegistrationFailed(const std::string& what) : Error(what) {}
};

class NoGraspFound : public Error {
public:
    explicit NoGraspFound(const std::string& what) : Error(what) {}
};

class NoFeasibleGrasp : public Error {
public:
    explicit NoFeasibleGrasp(const std::string& what) : Error(what) {}
};

class EmptyRender : public Error {
public:
    explicit EmptyRender(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Angle between two vectors in radians, in [0, pi]. Inputs need not be unit.
inline double vector_angle(const Vec3& a, const Vec3& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    double c = a.dot(b) / (na * nb);
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c);
}

/// Acute angle between a vector and a line direction, in [0, pi/2].
inline double acute_angle(const Vec3& v, const Vec3& line) {
    const double nv = v.norm();
    const double nl = line.norm();
    if (nv <= 0.0 || nl <= 0.0) return 0.0;
    double c = std::abs(v.dot(line)) / (nv * nl);
    c = std::clamp(c, 0.0, 1.0);
    return std::acos(c);
}

/// Deterministic unit vector orthogonal to n (n need not be unit).
inline Vec3 any_orthogonal(const Vec3& n) {
    Vec3 axis = Vec3::UnitX();
    double ax = std::abs(n.x()), ay = std::abs(n.y()), az = std::abs(n.z());
    if (ay <= ax && ay <= az) axis = Vec3::UnitY();
    else if (az <= ax && az <= ay) axis = Vec3::UnitZ();
    Vec3 v = axis - n * (axis.dot(n) / n.squaredNorm());
    return v.normalized();
}

/// Counter-seeded RNG with a platform-stable output chain (mt19937-64
/// underneath, doubles derived from raw bits only).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return state_(); }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(state_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        return n == 0 ? 0 : state_() % n;
    }

    /// Standard normal via Box-Muller.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

private:
    std::mt19937_64 state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots so the merge order is deterministic.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min<int>(jobs, static_cast<int>(n));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace simgrasp
