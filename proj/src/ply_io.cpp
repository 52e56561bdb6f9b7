#include "simgrasp/ply_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace simgrasp {

PointCloud read_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open PLY file: " + path);

    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw IoError("not a PLY file: " + path);

    std::size_t vertex_count = 0;
    std::vector<std::string> properties;
    bool ascii = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        if (token == "format") {
            std::string fmt;
            ls >> fmt;
            ascii = fmt == "ascii";
        } else if (token == "element") {
            std::string name;
            ls >> name >> vertex_count;
            if (name != "vertex") throw IoError("unsupported PLY element '" + name + "' in " + path);
        } else if (token == "property") {
            std::string type, name;
            ls >> type >> name;
            properties.push_back(name);
        } else if (token == "end_header") {
            break;
        }
    }
    if (!ascii) throw IoError("only ASCII PLY is supported: " + path);

    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
    for (int i = 0; i < static_cast<int>(properties.size()); ++i) {
        const std::string& p = properties[i];
        if (p == "x") ix = i;
        else if (p == "y") iy = i;
        else if (p == "z") iz = i;
        else if (p == "nx") inx = i;
        else if (p == "ny") iny = i;
        else if (p == "nz") inz = i;
    }
    if (ix < 0 || iy < 0 || iz < 0) throw IoError("PLY lacks x/y/z properties: " + path);
    const bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;

    PointCloud cloud;
    cloud.points.reserve(vertex_count);
    if (with_normals) cloud.normals.reserve(vertex_count);
    std::vector<double> row(properties.size());
    for (std::size_t v = 0; v < vertex_count; ++v) {
        if (!std::getline(in, line)) throw IoError("truncated PLY file: " + path);
        std::istringstream ls(line);
        for (double& value : row) {
            if (!(ls >> value)) throw IoError("malformed PLY row in " + path);
        }
        cloud.points.emplace_back(row[ix], row[iy], row[iz]);
        if (with_normals) cloud.normals.emplace_back(row[inx], row[iny], row[inz]);
    }
    return cloud;
}

void write_ply(const PointCloud& cloud, const std::string& path) {
    std::FILE* out = std::fopen(path.c_str(), "w");
    if (!out) throw IoError("cannot write PLY file: " + path);

    const bool with_normals = cloud.has_normals();
    std::fprintf(out, "ply\nformat ascii 1.0\nelement vertex %zu\n", cloud.size());
    std::fprintf(out, "property double x\nproperty double y\nproperty double z\n");
    if (with_normals) {
        std::fprintf(out, "property double nx\nproperty double ny\nproperty double nz\n");
    }
    std::fprintf(out, "end_header\n");
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        if (with_normals) {
            const Vec3& n = cloud.normals[i];
            std::fprintf(out, "%.17g %.17g %.17g %.17g %.17g %.17g\n",
                         p.x(), p.y(), p.z(), n.x(), n.y(), n.z());
        } else {
            std::fprintf(out, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        }
    }
    std::fclose(out);
}

}  // namespace simgrasp
