#include "bohmlab/field_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "bohmlab/errors.hpp"

namespace bohmlab {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json grid_to_json(const Grid& grid) {
  json axes = json::array();
  for (const auto& a : grid.axes()) axes.push_back({{"min", a.min}, {"max", a.max}, {"points", a.points}});
  return {{"axes", axes}, {"boundary", grid.periodic() ? "periodic" : "box"}};
}

Grid grid_from_json(const json& j) {
  std::vector<AxisSpec> axes;
  for (const auto& a : j.at("axes")) {
    axes.push_back(AxisSpec{a.at("min").get<double>(), a.at("max").get<double>(), a.at("points").get<std::size_t>()});
  }
  const std::string b = j.at("boundary").get<std::string>();
  if (b != "periodic" && b != "box") fail(ErrorKind::Validation, "grid.boundary must be 'periodic' or 'box'");
  return Grid(std::move(axes), b == "periodic" ? Boundary::Periodic : Boundary::Box);
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) fail(ErrorKind::Configuration, "cannot write " + p.string());
  return out;
}

void write_index_header(std::ostream& out, const Grid& grid) {
  for (std::size_t a = 0; a < grid.dims(); ++a) out << 'i' << a << ',';
}

void write_index(std::ostream& out, const Grid& grid, std::size_t p) {
  const auto idx = grid.unravel(p);
  for (std::size_t a = 0; a < grid.dims(); ++a) out << idx[a] << ',';
}

void write_sidecar(const std::filesystem::path& stem, const Grid& grid, const json& metadata) {
  json meta = metadata.is_object() ? metadata : json::object();
  meta["grid"] = grid_to_json(grid);
  auto out = open_out(stem.string() + ".json");
  out << meta.dump(2) << '\n';
}

}  // namespace

void write_field(const std::filesystem::path& stem, const ComplexField& field, const json& metadata) {
  const Grid& grid = field.grid();
  auto out = open_out(stem.string() + ".csv");
  write_index_header(out, grid);
  if (field.components() == 1) {
    out << "re,im\n";
  } else {
    out << "re0,im0,re1,im1\n";
  }
  for (std::size_t p = 0; p < grid.size(); ++p) {
    write_index(out, grid, p);
    for (std::size_t c = 0; c < field.components(); ++c) {
      const Complex z = field.at(c, p);
      out << format_double(z.real()) << ',' << format_double(z.imag());
      out << (c + 1 < field.components() ? ',' : '\n');
    }
  }
  json meta = metadata.is_object() ? metadata : json::object();
  meta["components"] = field.components();
  write_sidecar(stem, grid, meta);
}

void write_field(const std::filesystem::path& stem, const RealField& field, const json& metadata) {
  const Grid& grid = field.grid();
  auto out = open_out(stem.string() + ".csv");
  write_index_header(out, grid);
  out << "value\n";
  for (std::size_t p = 0; p < grid.size(); ++p) {
    write_index(out, grid, p);
    out << format_double(field[p]) << '\n';
  }
  write_sidecar(stem, grid, metadata);
}

void write_wave_function(const std::filesystem::path& stem, const WaveFunction& psi) {
  write_field(stem, psi.amplitudes(), {{"time", psi.time()}, {"hbar", psi.hbar()}, {"mass", psi.mass()}});
}

WaveFunction read_wave_function(const std::filesystem::path& stem) {
  std::ifstream meta_in(stem.string() + ".json");
  if (!meta_in) fail(ErrorKind::Configuration, "cannot read " + stem.string() + ".json");
  const json meta = json::parse(meta_in);
  const Grid grid = grid_from_json(meta.at("grid"));
  const std::size_t components = meta.at("components").get<std::size_t>();
  ComplexField field(grid, components);

  std::ifstream in(stem.string() + ".csv");
  if (!in) fail(ErrorKind::Configuration, "cannot read " + stem.string() + ".csv");
  std::string line;
  std::getline(in, line);
  std::size_t p = 0;
  while (std::getline(in, line) && p < grid.size()) {
    std::vector<double> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
    if (cols.size() != grid.dims() + 2 * components) fail(ErrorKind::Shape, "malformed field row");
    for (std::size_t c = 0; c < components; ++c) {
      field.at(c, p) = Complex(cols[grid.dims() + 2 * c], cols[grid.dims() + 2 * c + 1]);
    }
    ++p;
  }
  if (p != grid.size()) fail(ErrorKind::Shape, "field dump is truncated");
  return WaveFunction(std::move(field), meta.at("time").get<double>(),
                      Physics{meta.at("mass").get<double>(), meta.at("hbar").get<double>()});
}

}  // namespace bohmlab
