#include "daef/fixture_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace daef {

void write_fixture(std::ostream& os, const Tensor& t) {
  const Shape& s = t.shape();
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " " : "") << s[i];
  os << '\n' << std::setprecision(17);
  auto v = t.data();
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << '\n';
}

void write_fixture(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write fixture " + path.string());
  write_fixture(os, t);
}

Tensor read_fixture(std::istream& is) {
  std::string shape_line, value_line;
  if (!std::getline(is, shape_line) || !std::getline(is, value_line)) {
    throw std::runtime_error("fixture: expected a shape line and a value line");
  }
  Shape shape;
  {
    std::istringstream ss(shape_line);
    long long e = 0;
    while (ss >> e) {
      if (e <= 0) throw DimensionError("fixture: non-positive extent");
      shape.push_back(static_cast<std::size_t>(e));
    }
    if (!ss.eof()) throw std::runtime_error("fixture: malformed shape line");
  }
  std::vector<double> values;
  {
    std::istringstream ss(value_line);
    double v = 0.0;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) throw std::runtime_error("fixture: malformed value line");
  }
  return Tensor::from(std::move(shape), std::move(values));
}

Tensor read_fixture(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read fixture " + path.string());
  return read_fixture(is);
}

}  // namespace daef
