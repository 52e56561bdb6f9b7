#include "simgrasp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace simgrasp {

void Mesh::check() const {
    for (const auto& tri : triangles) {
        for (std::uint32_t idx : tri) {
            if (idx >= vertices.size()) throw InvalidInput("triangle index out of range");
        }
    }
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        if (face_area(t) <= 1e-12) throw InvalidInput("degenerate triangle in mesh");
    }
}

Vec3 Mesh::face_normal(std::size_t tri) const {
    const auto& t = triangles[tri];
    const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
}

double Mesh::face_area(std::size_t tri) const {
    const auto& t = triangles[tri];
    return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

double Mesh::surface_area() const {
    double area = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) area += face_area(t);
    return area;
}

Mesh Mesh::transformed(const Transform& t) const {
    Mesh out = *this;
    for (Vec3& v : out.vertices) v = t * v;
    return out;
}

std::uint64_t Mesh::content_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    for (const Vec3& v : vertices) {
        for (int i = 0; i < 3; ++i) {
            std::uint64_t bits;
            const double d = v[i];
            static_assert(sizeof(bits) == sizeof(d));
            std::memcpy(&bits, &d, sizeof(bits));
            mix(bits);
        }
    }
    for (const auto& t : triangles) {
        for (std::uint32_t idx : t) mix(idx);
    }
    return h;
}

namespace {

void add_quad(Mesh& m, std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
    // Quad (a,b,c,d) counter-clockwise from outside.
    m.triangles.push_back({a, b, c});
    m.triangles.push_back({a, c, d});
}

}  // namespace

Mesh make_box(double sx, double sy, double sz) {
    if (sx <= 0 || sy <= 0 || sz <= 0) throw InvalidInput("box dimensions must be positive");
    Mesh m;
    const double x = sx / 2, y = sy / 2, z = sz / 2;
    m.vertices = {
        {-x, -y, -z}, {x, -y, -z}, {x, y, -z}, {-x, y, -z},  // bottom ring
        {-x, -y, z},  {x, -y, z},  {x, y, z},  {-x, y, z},   // top ring
    };
    add_quad(m, 0, 3, 2, 1);  // -z
    add_quad(m, 4, 5, 6, 7);  // +z
    add_quad(m, 0, 1, 5, 4);  // -y
    add_quad(m, 2, 3, 7, 6);  // +y
    add_quad(m, 1, 2, 6, 5);  // +x
    add_quad(m, 3, 0, 4, 7);  // -x
    m.watertight = true;
    return m;
}

Mesh make_cylinder(double radius, double height, int segments) {
    if (radius <= 0 || height <= 0 || segments < 3) throw InvalidInput("bad cylinder parameters");
    Mesh m;
    const double h = height / 2;
    for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * kPi * i / segments;
        m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -h);
        m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), h);
    }
    const std::uint32_t bottom_center = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.emplace_back(0, 0, -h);
    const std::uint32_t top_center = bottom_center + 1;
    m.vertices.emplace_back(0, 0, h);
    for (int i = 0; i < segments; ++i) {
        const std::uint32_t lo0 = 2 * i;
        const std::uint32_t hi0 = 2 * i + 1;
        const std::uint32_t lo1 = 2 * ((i + 1) % segments);
        const std::uint32_t hi1 = lo1 + 1;
        add_quad(m, lo0, lo1, hi1, hi0);                  // side
        m.triangles.push_back({bottom_center, lo1, lo0});  // bottom cap
        m.triangles.push_back({top_center, hi0, hi1});     // top cap
    }
    m.watertight = true;
    return m;
}

Mesh make_sphere(double radius, int subdivisions) {
    if (radius <= 0) throw InvalidInput("sphere radius must be positive");
    // Icosphere: subdivide an icosahedron and project to the sphere.
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (Vec3& v : verts) v = v.normalized() * radius;
    std::vector<std::array<std::uint32_t, 3>> tris = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
        auto mid = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const std::uint32_t idx = static_cast<std::uint32_t>(verts.size());
            verts.push_back(((verts[a] + verts[b]) * 0.5).normalized() * radius);
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<std::uint32_t, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            const std::uint32_t ab = mid(t[0], t[1]);
            const std::uint32_t bc = mid(t[1], t[2]);
            const std::uint32_t ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }
    Mesh m;
    m.vertices = std::move(verts);
    m.triangles = std::move(tris);
    m.watertight = true;
    return m;
}

Mesh make_bowl(double outer_radius, double thickness, int segments, int rings) {
    if (outer_radius <= 0 || thickness <= 0 || thickness >= outer_radius) {
        throw InvalidInput("bad bowl parameters");
    }
    Mesh m;
    const double inner_radius = outer_radius - thickness;
    // Both shells are lower hemispheres centered at the origin; the rim is the
    // flat annulus between them at z = 0.
    auto ring_vertex = [&](double r, int ring, int seg) {
        const double polar = kPi - (kPi / 2.0) * ring / rings;  // pi (bottom) -> pi/2 (rim)
        const double azim = 2.0 * kPi * seg / segments;
        return Vec3(r * std::sin(polar) * std::cos(azim),
                    r * std::sin(polar) * std::sin(azim), r * std::cos(polar));
    };
    auto add_shell = [&](double r) {
        std::vector<std::vector<std::uint32_t>> ring_idx(rings + 1);
        ring_idx[0].push_back(static_cast<std::uint32_t>(m.vertices.size()));
        m.vertices.emplace_back(0, 0, -r);
        for (int ring = 1; ring <= rings; ++ring) {
            for (int seg = 0; seg < segments; ++seg) {
                ring_idx[ring].push_back(static_cast<std::uint32_t>(m.vertices.size()));
                m.vertices.push_back(ring_vertex(r, ring, seg));
            }
        }
        auto wrap = [&](int s) { return s % segments; };
        std::vector<std::size_t> tri_ids;
        for (int seg = 0; seg < segments; ++seg) {
            tri_ids.push_back(m.triangles.size());
            m.triangles.push_back({ring_idx[0][0], ring_idx[1][seg], ring_idx[1][wrap(seg + 1)]});
        }
        for (int ring = 1; ring < rings; ++ring) {
            for (int seg = 0; seg < segments; ++seg) {
                tri_ids.push_back(m.triangles.size());
                m.triangles.push_back(
                    {ring_idx[ring][seg], ring_idx[ring + 1][seg], ring_idx[ring + 1][wrap(seg + 1)]});
                tri_ids.push_back(m.triangles.size());
                m.triangles.push_back(
                    {ring_idx[ring][seg], ring_idx[ring + 1][wrap(seg + 1)], ring_idx[ring][wrap(seg + 1)]});
            }
        }
        return std::make_pair(ring_idx[rings], tri_ids);
    };

    auto [outer_rim, outer_tris] = add_shell(outer_radius);
    auto [inner_rim, inner_tris] = add_shell(inner_radius);

    // Orient shells: outer faces away from the origin, inner toward it.
    auto orient = [&](const std::vector<std::size_t>& ids, double sign) {
        for (std::size_t id : ids) {
            auto& t = m.triangles[id];
            const Vec3 centroid =
                (m.vertices[t[0]] + m.vertices[t[1]] + m.vertices[t[2]]) / 3.0;
            if (sign * m.face_normal(id).dot(centroid) < 0.0) std::swap(t[1], t[2]);
        }
    };
    orient(outer_tris, +1.0);
    orient(inner_tris, -1.0);

    // Rim annulus, facing +z.
    auto wrap = [&](int s) { return s % segments; };
    for (int seg = 0; seg < segments; ++seg) {
        const std::size_t id1 = m.triangles.size();
        m.triangles.push_back({outer_rim[seg], outer_rim[wrap(seg + 1)], inner_rim[wrap(seg + 1)]});
        const std::size_t id2 = m.triangles.size();
        m.triangles.push_back({outer_rim[seg], inner_rim[wrap(seg + 1)], inner_rim[seg]});
        for (std::size_t id : {id1, id2}) {
            auto& t = m.triangles[id];
            if (m.face_normal(id).z() < 0.0) std::swap(t[1], t[2]);
        }
    }
    m.watertight = true;
    return m;
}

Mesh make_l_bracket(double leg_a, double leg_b, double width, double thickness) {
    if (leg_a <= 0 || leg_b <= 0 || width <= 0 || thickness <= 0) {
        throw InvalidInput("bad bracket parameters");
    }
    // Horizontal leg along +x, vertical leg along +z, sharing the corner.
    Mesh horizontal = make_box(leg_a, width, thickness);
    for (Vec3& v : horizontal.vertices) v += Vec3(leg_a / 2, 0, thickness / 2);
    Mesh vertical = make_box(thickness, width, leg_b);
    for (Vec3& v : vertical.vertices) v += Vec3(thickness / 2, 0, leg_b / 2);

    Mesh m = horizontal;
    const std::uint32_t offset = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.insert(m.vertices.end(), vertical.vertices.begin(), vertical.vertices.end());
    for (const auto& t : vertical.triangles) {
        m.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    }
    m.watertight = false;  // legs interpenetrate at the corner
    // Center on the origin for canonical pose.
    Vec3 lo = m.vertices.front(), hi = m.vertices.front();
    for (const Vec3& v : m.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const Vec3 center = (lo + hi) / 2;
    for (Vec3& v : m.vertices) v -= center;
    return m;
}

Mesh make_beveled_block(double sx, double sy, double sz, double bevel_depth,
                        double bevel_deg) {
    if (bevel_deg <= 0 || bevel_deg >= 90) throw InvalidInput("bad bevel angle");
    Mesh m;
    const double x = sx / 2, y = sy / 2, z = sz / 2;
    // The chamfer replaces the +x/+z edge with a plane whose normal lies in
    // the xz-plane, tilted bevel_deg away from the +x side-face normal.
    const double dz = bevel_depth;                                 // drop below the top
    const double dx = bevel_depth * std::tan(deg2rad(bevel_deg));  // cut into the side
    if (bevel_depth <= 0 || dz >= sz / 2 || dx >= sx / 2) {
        throw InvalidInput("bad bevel depth");
    }
    // Cross-section (x,z), counter-clockwise: the bevel runs between
    // (x, z-dz) and (x-dx, z).
    const std::vector<std::pair<double, double>> profile = {
        {-x, -z}, {x, -z}, {x, z - dz}, {x - dx, z}, {-x, z}};
    const std::size_t np = profile.size();
    for (double yy : {-y, y}) {
        for (const auto& [px, pz] : profile) m.vertices.emplace_back(px, yy, pz);
    }
    auto front = [&](std::size_t i) { return static_cast<std::uint32_t>(i); };          // y = -y
    auto back = [&](std::size_t i) { return static_cast<std::uint32_t>(np + i); };      // y = +y
    // End caps (fan; profile is convex).
    for (std::size_t i = 1; i + 1 < np; ++i) {
        m.triangles.push_back({front(0), front(i + 1), front(i)});
        m.triangles.push_back({back(0), back(i), back(i + 1)});
    }
    // Side walls.
    for (std::size_t i = 0; i < np; ++i) {
        const std::size_t j = (i + 1) % np;
        add_quad(m, front(i), front(j), back(j), back(i));
    }
    m.watertight = true;
    return m;
}

Mesh read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open OBJ file: " + path);
    Mesh m;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw IoError("bad vertex line in " + path);
            m.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<std::uint32_t> face;
            std::string token;
            while (ls >> token) {
                // Accept v, v/t, v/t/n, v//n forms.
                const std::size_t slash = token.find('/');
                const long idx = std::stol(token.substr(0, slash));
                if (idx == 0) throw IoError("zero face index in " + path);
                face.push_back(idx > 0 ? static_cast<std::uint32_t>(idx - 1)
                                       : static_cast<std::uint32_t>(m.vertices.size() + idx));
            }
            if (face.size() < 3) throw IoError("face with fewer than 3 vertices in " + path);
            for (std::size_t i = 1; i + 1 < face.size(); ++i) {
                m.triangles.push_back({face[0], face[i], face[i + 1]});
            }
        }
    }
    m.check();
    return m;
}

void write_obj(const Mesh& mesh, const std::string& path) {
    std::FILE* out = std::fopen(path.c_str(), "w");
    if (!out) throw IoError("cannot write OBJ file: " + path);
    for (const Vec3& v : mesh.vertices) {
        std::fprintf(out, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    }
    for (const auto& t : mesh.triangles) {
        std::fprintf(out, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    std::fclose(out);
}

PointCloud sample_surface(const Mesh& mesh, double spacing, std::uint64_t seed) {
    if (spacing <= 0) throw InvalidInput("sample_surface: spacing must be positive");
    if (mesh.triangles.empty()) throw InvalidInput("sample_surface: empty mesh");

    std::vector<double> cumulative(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        total += mesh.face_area(t);
        cumulative[t] = total;
    }
    const std::size_t count = std::max<std::size_t>(
        16, static_cast<std::size_t>(std::ceil(total / (spacing * spacing))));

    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(count);
    cloud.normals.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double pick = rng.next_double() * total;
        const std::size_t tri = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
        const auto& t = mesh.triangles[std::min(tri, mesh.triangles.size() - 1)];
        double u = rng.next_double();
        double v = rng.next_double();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        cloud.points.push_back(mesh.vertices[t[0]] +
                               u * (mesh.vertices[t[1]] - mesh.vertices[t[0]]) +
                               v * (mesh.vertices[t[2]] - mesh.vertices[t[0]]));
        cloud.normals.push_back(mesh.face_normal(std::min(tri, mesh.triangles.size() - 1)));
    }
    return cloud;
}

}  // namespace simgrasp
