#include "simgrasp/render.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace simgrasp {

void VirtualCamera::validate() const {
    if (fx <= 0 || fy <= 0) throw InvalidInput("camera focal lengths must be positive");
    if (width < 32 || height < 32) throw InvalidInput("camera resolution must be >= 32x32");
}

VirtualCamera VirtualCamera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitX());
    right.normalize();
    const Vec3 down = forward.cross(right);  // y points down in image space

    VirtualCamera cam;
    Mat3 rot;
    rot.col(0) = right;
    rot.col(1) = down;
    rot.col(2) = forward;
    cam.pose.linear() = rot;
    cam.pose.translation() = eye;
    cam.cx = cam.width / 2.0;
    cam.cy = cam.height / 2.0;
    return cam;
}

Vec3 VirtualCamera::pixel_ray(int u, int v) const {
    return Vec3((u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0);
}

std::size_t DepthImage::valid_count() const {
    std::size_t n = 0;
    for (double d : depth) n += d > 0.0;
    return n;
}

std::size_t DepthImage::object_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        n += depth[i] > 0.0 && object_mask[i];
    }
    return n;
}

void NoiseModel::validate() const {
    if (sigma < 0.0) throw InvalidInput("noise sigma must be >= 0");
    if (hole_rate < 0.0 || hole_rate > 0.3) throw InvalidInput("hole_rate must be in [0, 0.3]");
    if (kernel < 1 || kernel % 2 == 0) throw InvalidInput("kernel must be odd and >= 1");
}

DepthImage render_depth(const Mesh& mesh, const VirtualCamera& camera) {
    camera.validate();
    if (mesh.triangles.empty()) throw InvalidInput("render_depth: empty mesh");

    DepthImage img;
    img.width = camera.width;
    img.height = camera.height;
    img.depth.assign(static_cast<std::size_t>(camera.width) * camera.height, 0.0);
    img.face.assign(img.depth.size(), -1);
    img.object_mask.assign(img.depth.size(), 0);

    const Transform world_to_cam = camera.pose.inverse();
    constexpr double kNear = 1e-3;

    std::vector<Vec3> cam_verts(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        cam_verts[i] = world_to_cam * mesh.vertices[i];
    }

    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec3& a = cam_verts[tri[0]];
        const Vec3& b = cam_verts[tri[1]];
        const Vec3& c = cam_verts[tri[2]];
        if (a.z() <= kNear || b.z() <= kNear || c.z() <= kNear) continue;

        // Backface cull: outward normal must face the camera.
        const Vec3 n_cam = (b - a).cross(c - a);
        if (n_cam.dot(a) >= 0.0) continue;

        // Screen-space vertices.
        const double ax = camera.fx * a.x() / a.z() + camera.cx;
        const double ay = camera.fy * a.y() / a.z() + camera.cy;
        const double bx = camera.fx * b.x() / b.z() + camera.cx;
        const double by = camera.fy * b.y() / b.z() + camera.cy;
        const double cx = camera.fx * c.x() / c.z() + camera.cx;
        const double cy = camera.fy * c.y() / c.z() + camera.cy;

        const int u_min = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}))));
        const int u_max = std::min(camera.width - 1, static_cast<int>(std::ceil(std::max({ax, bx, cx}))));
        const int v_min = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}))));
        const int v_max = std::min(camera.height - 1, static_cast<int>(std::ceil(std::max({ay, by, cy}))));
        if (u_min > u_max || v_min > v_max) continue;

        const double area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
        if (std::abs(area2) < 1e-12) continue;

        for (int v = v_min; v <= v_max; ++v) {
            for (int u = u_min; u <= u_max; ++u) {
                const double px = u + 0.5, py = v + 0.5;
                const double w0 = ((bx - px) * (cy - py) - (by - py) * (cx - px)) / area2;
                const double w1 = ((cx - px) * (ay - py) - (cy - py) * (ax - px)) / area2;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                // 1/z interpolates linearly in screen space.
                const double inv_z = w0 / a.z() + w1 / b.z() + w2 / c.z();
                const double z = 1.0 / inv_z;
                double& cell = img.at(u, v);
                if (cell == 0.0 || z < cell) {
                    cell = z;
                    img.face[static_cast<std::size_t>(v) * img.width + u] =
                        static_cast<std::int32_t>(t);
                    img.object_mask[static_cast<std::size_t>(v) * img.width + u] = 1;
                }
            }
        }
    }

    if (img.valid_count() == 0) throw EmptyRender("object outside the camera frustum");
    return img;
}

DepthImage apply_noise(const DepthImage& image, const NoiseModel& model, std::uint64_t seed) {
    model.validate();
    if (model.kind == NoiseModel::Kind::None) return image;

    DepthImage out = image;
    Rng rng(seed);

    if (model.kind == NoiseModel::Kind::GaussianDepth) {
        for (double& d : out.depth) {
            if (d > 0.0) d = std::max(1e-6, d + model.sigma * rng.next_normal());
        }
        return out;
    }

    if (model.kind == NoiseModel::Kind::Smoothed) {
        const int half = model.kernel / 2;
        for (int v = 0; v < image.height; ++v) {
            for (int u = 0; u < image.width; ++u) {
                if (image.at(u, v) <= 0.0) continue;
                double sum = 0.0;
                int count = 0;
                for (int dv = -half; dv <= half; ++dv) {
                    for (int du = -half; du <= half; ++du) {
                        const int uu = u + du, vv = v + dv;
                        if (uu < 0 || vv < 0 || uu >= image.width || vv >= image.height) continue;
                        const double d = image.at(uu, vv);
                        if (d > 0.0) {
                            sum += d;
                            ++count;
                        }
                    }
                }
                out.at(u, v) = sum / count;
            }
        }
        return out;
    }

    // HoleFilled: zero random patches, then copy the nearest valid depth back.
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < image.depth.size(); ++i) {
        if (image.depth[i] > 0.0) valid.push_back(i);
    }
    if (valid.empty()) return out;

    const double avg_patch = 5.0 * 5.0;
    const std::size_t patches = static_cast<std::size_t>(
        std::ceil(model.hole_rate * static_cast<double>(valid.size()) / avg_patch));
    std::vector<std::size_t> holes;
    for (std::size_t p = 0; p < patches; ++p) {
        const std::size_t center = valid[rng.next_below(valid.size())];
        const int cu = static_cast<int>(center % image.width);
        const int cv = static_cast<int>(center / image.width);
        const int r = 2 + static_cast<int>(rng.next_below(2));  // 5x5 or 7x7 patch
        for (int dv = -r; dv <= r; ++dv) {
            for (int du = -r; du <= r; ++du) {
                const int uu = cu + du, vv = cv + dv;
                if (uu < 0 || vv < 0 || uu >= image.width || vv >= image.height) continue;
                if (out.at(uu, vv) > 0.0) {
                    out.at(uu, vv) = 0.0;
                    holes.push_back(static_cast<std::size_t>(vv) * image.width + uu);
                }
            }
        }
    }
    // Fill each hole from the nearest remaining valid pixel (ring search).
    for (std::size_t hole : holes) {
        const int hu = static_cast<int>(hole % image.width);
        const int hv = static_cast<int>(hole / image.width);
        bool filled = false;
        for (int radius = 1; radius < std::max(image.width, image.height) && !filled; ++radius) {
            double best_d = std::numeric_limits<double>::infinity();
            double best_depth = 0.0;
            std::int32_t best_face = -1;
            std::uint8_t best_mask = 0;
            for (int dv = -radius; dv <= radius && !filled; ++dv) {
                for (int du = -radius; du <= radius; ++du) {
                    if (std::max(std::abs(du), std::abs(dv)) != radius) continue;
                    const int uu = hu + du, vv = hv + dv;
                    if (uu < 0 || vv < 0 || uu >= image.width || vv >= image.height) continue;
                    const std::size_t idx = static_cast<std::size_t>(vv) * image.width + uu;
                    if (out.depth[idx] <= 0.0) continue;
                    const double d = du * du + dv * dv;
                    if (d < best_d) {
                        best_d = d;
                        best_depth = out.depth[idx];
                        best_face = out.face[idx];
                        best_mask = out.object_mask[idx];
                    }
                }
            }
            if (best_depth > 0.0) {
                out.depth[hole] = best_depth;
                out.face[hole] = best_face;
                out.object_mask[hole] = best_mask;
                filled = true;
            }
        }
    }
    return out;
}

DepthImage occlude(const DepthImage& image, const VirtualCamera& camera,
                   const std::vector<CameraSpaceBox>& occluders) {
    if (occluders.empty()) return image;
    DepthImage out = image;
    for (int v = 0; v < image.height; ++v) {
        for (int u = 0; u < image.width; ++u) {
            const Vec3 dir = camera.pixel_ray(u, v);  // z component is 1
            double nearest = std::numeric_limits<double>::infinity();
            for (const CameraSpaceBox& box : occluders) {
                // Slab test along the ray p = t * dir, t in camera z units.
                double t_enter = 0.0, t_exit = std::numeric_limits<double>::infinity();
                bool miss = false;
                for (int axis = 0; axis < 3 && !miss; ++axis) {
                    const double d = dir[axis];
                    if (std::abs(d) < 1e-12) {
                        if (box.min[axis] > 0.0 || box.max[axis] < 0.0) miss = true;
                        continue;
                    }
                    double t0 = box.min[axis] / d;
                    double t1 = box.max[axis] / d;
                    if (t0 > t1) std::swap(t0, t1);
                    t_enter = std::max(t_enter, t0);
                    t_exit = std::min(t_exit, t1);
                    if (t_enter > t_exit) miss = true;
                }
                if (!miss && t_enter > 1e-6) nearest = std::min(nearest, t_enter);
            }
            if (!std::isfinite(nearest)) continue;
            const std::size_t idx = static_cast<std::size_t>(v) * image.width + u;
            const double surface = out.depth[idx];
            // Only surface pixels can be stolen; empty background stays empty.
            if (surface > 0.0 && nearest < surface) {
                out.depth[idx] = nearest;  // dir.z == 1, so t equals camera z
                out.face[idx] = -1;
                out.object_mask[idx] = 0;
            }
        }
    }
    return out;
}

PointCloud backproject(const DepthImage& image, const VirtualCamera& camera,
                       const Mesh& world_mesh) {
    PointCloud cloud;
    for (int v = 0; v < image.height; ++v) {
        for (int u = 0; u < image.width; ++u) {
            const std::size_t idx = static_cast<std::size_t>(v) * image.width + u;
            if (image.depth[idx] <= 0.0 || !image.object_mask[idx]) continue;
            const std::int32_t face = image.face[idx];
            if (face < 0) continue;
            const Vec3 p_cam = image.depth[idx] * camera.pixel_ray(u, v);
            cloud.points.push_back(camera.pose * p_cam);
            cloud.normals.push_back(world_mesh.face_normal(static_cast<std::size_t>(face)));
        }
    }
    return cloud;
}

}  // namespace simgrasp
