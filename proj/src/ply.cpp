#include "rpo/ply.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>

namespace rpo {

void write_ply(std::ostream& out, const Cloud& cloud) {
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_normals()) out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (cloud.has_mask()) out << "property uchar mask\n";
  out << "end_header\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (cloud.has_normals()) {
      const auto n = cloud.normals().col(i);
      out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
    }
    if (cloud.has_mask()) out << ' ' << (cloud.mask()[static_cast<std::size_t>(i)] ? 1 : 0);
    out << '\n';
  }
}

void write_ply(const std::filesystem::path& path, const Cloud& cloud) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_ply(out, cloud);
}

Cloud read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw std::runtime_error("ply: bad magic");
  Eigen::Index count = -1;
  std::vector<std::string> props;
  bool in_vertex = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw std::runtime_error("ply: only ascii supported");
    } else if (kw == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> count;
    } else if (kw == "property" && in_vertex) {
      std::string type;
      std::string name;
      ls >> type >> name;
      props.push_back(name);
    } else if (kw == "end_header") {
      break;
    }
  }
  if (count <= 0) throw std::runtime_error("ply: missing or empty vertex element");
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < props.size(); ++i) col[props[i]] = i;
  for (const char* need : {"x", "y", "z"}) {
    if (!col.count(need)) throw std::runtime_error(std::string("ply: missing property ") + need);
  }
  const bool has_n = col.count("nx") && col.count("ny") && col.count("nz");
  const bool has_m = col.count("mask") > 0;

  Matrix3X<double> pts(3, count);
  Matrix3X<double> nrm(3, has_n ? count : 0);
  Mask mask(has_m ? static_cast<std::size_t>(count) : 0);
  std::vector<double> row(props.size());
  for (Eigen::Index i = 0; i < count; ++i) {
    for (auto& v : row) {
      if (!(in >> v)) throw std::runtime_error("ply: truncated vertex data");
    }
    pts.col(i) << row[col["x"]], row[col["y"]], row[col["z"]];
    if (has_n) nrm.col(i) << row[col["nx"]], row[col["ny"]], row[col["nz"]];
    if (has_m) mask[static_cast<std::size_t>(i)] = row[col["mask"]] != 0.0;
  }
  std::optional<Matrix3X<double>> n;
  if (has_n) n = std::move(nrm);
  std::optional<Mask> m;
  if (has_m) m = std::move(mask);
  return Cloud(std::move(pts), std::move(n), std::move(m));
}

Cloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_ply(in);
}

}  // namespace rpo
