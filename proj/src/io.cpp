#include "occshape/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace occshape {

Vec3 VoxelSet::centroid() const {
  if (points.empty()) throw InvalidArgument("centroid of an empty set");
  Vec3 c = Vec3::Zero();
  for (const auto& p : points) c += p;
  return c / static_cast<double>(points.size());
}

VoxelSet VoxelSet::from_points(std::vector<Vec3> pts, SemanticClass cls) {
  VoxelSet s;
  s.points = std::move(pts);
  s.colors.assign(s.points.size(), default_color(cls));
  s.classes.assign(s.points.size(), cls);
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path);
}

std::string format_csv(const VoxelSet& set) {
  std::string out = "x,y,z,r,g,b\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& p = set.points[i];
    const Rgb c = i < set.colors.size() ? set.colors[i] : Rgb{};
    out += format_double(p.x()) + ',' + format_double(p.y()) + ',' + format_double(p.z()) + ',' +
           std::to_string(c.r) + ',' + std::to_string(c.g) + ',' + std::to_string(c.b) + '\n';
  }
  return out;
}

void write_csv(const VoxelSet& set, const std::string& path) { write_text_file(path, format_csv(set)); }

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& v) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

VoxelSet parse_csv(const std::string& text) {
  VoxelSet set;
  std::size_t offset = 0;
  bool first = true;
  while (offset < text.size()) {
    const auto eol = text.find('\n', offset);
    const std::size_t line_start = offset;
    std::string_view line(text.data() + offset,
                          (eol == std::string::npos ? text.size() : eol) - offset);
    offset = eol == std::string::npos ? text.size() : eol + 1;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (first) {
      first = false;
      double probe;
      if (!parse_number(fields[0], probe)) continue;  // header
    }
    if (fields.size() != 3 && fields.size() != 6)
      throw ParseError("CSV row must have 3 or 6 fields", line_start);
    Vec3 p;
    for (int a = 0; a < 3; ++a)
      if (!parse_number(fields[a], p[a])) throw ParseError("bad coordinate in CSV", line_start);
    Rgb c = default_color(SemanticClass::Plasticine);
    if (fields.size() == 6) {
      int ch[3];
      for (int a = 0; a < 3; ++a) {
        if (!parse_number(fields[3 + a], ch[a]) || ch[a] < 0 || ch[a] > 255)
          throw ParseError("bad color channel in CSV", line_start);
      }
      c = Rgb{std::uint8_t(ch[0]), std::uint8_t(ch[1]), std::uint8_t(ch[2])};
    }
    set.push_back(p, c, SemanticClass::Plasticine);
  }
  return set;
}

VoxelSet read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

std::string format_ply(const PlyData& ply) {
  const bool color = !ply.colors.empty();
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(ply.vertices.size()) +
                    "\nproperty double x\nproperty double y\nproperty double z\n";
  if (color) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (!ply.faces.empty())
    out += "element face " + std::to_string(ply.faces.size()) + "\nproperty list uchar uint vertex_indices\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < ply.vertices.size(); ++i) {
    const auto& v = ply.vertices[i];
    out += format_double(v.x()) + ' ' + format_double(v.y()) + ' ' + format_double(v.z());
    if (color) {
      const Rgb c = ply.colors[i];
      out += ' ' + std::to_string(c.r) + ' ' + std::to_string(c.g) + ' ' + std::to_string(c.b);
    }
    out += '\n';
  }
  for (const auto& f : ply.faces)
    out += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' + std::to_string(f[2]) + '\n';
  return out;
}

PlyData parse_ply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto where = [&]() { return static_cast<std::size_t>(std::max<std::streamoff>(0, in.tellg())); };
  if (!std::getline(in, line) || trim(line) != "ply") throw ParseError("PLY: missing magic", 0);
  std::size_t n_vert = 0, n_face = 0;
  std::vector<std::string> vprops;
  std::string current;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls{std::string(trim(line))};
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (kw == "element") {
      std::size_t n;
      ls >> current >> n;
      if (current == "vertex") n_vert = n;
      else if (current == "face") n_face = n;
      else if (n != 0) throw ParseError("PLY: unsupported element " + current, where());
    } else if (kw == "property") {
      std::string type, name;
      ls >> type;
      if (type == "list") {
        std::string t1, t2;
        ls >> t1 >> t2 >> name;
      } else {
        ls >> name;
      }
      if (current == "vertex") vprops.push_back(name);
    } else if (kw == "end_header") {
      break;
    }
  }
  if (!ascii) throw ParseError("PLY: only ASCII format is supported", 0);
  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (int i = 0; i < static_cast<int>(vprops.size()); ++i) {
    const auto& n = vprops[i];
    if (n == "x") ix = i;
    else if (n == "y") iy = i;
    else if (n == "z") iz = i;
    else if (n == "red") ir = i;
    else if (n == "green") ig = i;
    else if (n == "blue") ib = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("PLY: vertex lacks x/y/z", 0);
  const bool color = ir >= 0 && ig >= 0 && ib >= 0;
  PlyData ply;
  ply.vertices.reserve(n_vert);
  std::vector<double> vals(vprops.size());
  for (std::size_t v = 0; v < n_vert; ++v) {
    const auto at = where();
    if (!std::getline(in, line)) throw ParseError("PLY: truncated vertex list", text.size());
    std::istringstream ls(line);
    for (auto& x : vals)
      if (!(ls >> x)) throw ParseError("PLY: bad vertex record", at);
    ply.vertices.emplace_back(vals[ix], vals[iy], vals[iz]);
    if (color) {
      auto ch = [&](int i) {
        if (vals[i] < 0 || vals[i] > 255) throw ParseError("PLY: color out of range", at);
        return static_cast<std::uint8_t>(vals[i]);
      };
      ply.colors.push_back(Rgb{ch(ir), ch(ig), ch(ib)});
    }
  }
  for (std::size_t f = 0; f < n_face; ++f) {
    const auto at = where();
    if (!std::getline(in, line)) throw ParseError("PLY: truncated face list", text.size());
    std::istringstream ls(line);
    std::size_t k;
    std::array<std::uint32_t, 3> tri;
    if (!(ls >> k) || k != 3) throw ParseError("PLY: only triangle faces are supported", at);
    for (auto& t : tri) {
      long long idx;
      if (!(ls >> idx) || idx < 0 || static_cast<std::size_t>(idx) >= n_vert)
        throw ParseError("PLY: bad face index", at);
      t = static_cast<std::uint32_t>(idx);
    }
    ply.faces.push_back(tri);
  }
  return ply;
}

void write_ply(const PlyData& ply, const std::string& path) { write_text_file(path, format_ply(ply)); }
PlyData read_ply(const std::string& path) { return parse_ply(read_text_file(path)); }

TriMesh mesh_from_ply(const PlyData& ply) {
  TriMesh m;
  m.vertices = ply.vertices;
  m.colors = ply.colors;
  m.faces = ply.faces;
  return m;
}

PlyData ply_from_mesh(const TriMesh& mesh) {
  PlyData p;
  p.vertices = mesh.vertices;
  p.colors = mesh.colors;
  p.faces = mesh.faces;
  return p;
}

}  // namespace occshape
