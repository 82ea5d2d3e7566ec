#include "gaugeopt/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gaugeopt {

void write_gauge_csv(std::ostream& os, const PeriodicField& u) {
  const auto old = os.precision(17);
  os << "theta,u\n";
  for (int j = 0; j < u.size(); ++j) os << u.angle(j) << ',' << u[j] << '\n';
  os.precision(old);
}

PeriodicField read_gauge_csv(std::istream& is) {
  std::string line;
  std::vector<double> theta, values;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && std::isalpha(static_cast<unsigned char>(line[0]))) continue;  // header
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t = 0.0, v = 0.0;
    std::string extra;
    if (!(row >> t >> v) || (row >> extra))
      throw std::invalid_argument("gauge csv line " + std::to_string(lineno) + ": expected 'theta,u'");
    theta.push_back(t);
    values.push_back(v);
  }
  const int n = static_cast<int>(values.size());
  if (n < 8 || n % 2 != 0) throw std::invalid_argument("gauge csv: need an even number (>= 8) of rows");
  const double h = 2.0 * std::numbers::pi / n;
  for (int j = 0; j < n; ++j)
    if (std::abs(theta[static_cast<std::size_t>(j)] - h * j) > 1e-6 * h)
      throw std::invalid_argument("gauge csv row " + std::to_string(j + 1) + ": theta is not on the uniform grid");
  return PeriodicField(Eigen::Map<const Eigen::VectorXd>(values.data(), n));
}

void write_shape_svg(std::ostream& os, const PeriodicField& u, const std::vector<Atom>& atoms,
                     const Eigen::VectorXd& eta) {
  const int n = u.size();
  const double rmax = 1.0 / u.min();
  const double size = 400.0, margin = 20.0;
  const double scale = (size / 2 - margin) / rmax;
  const bool strip = eta.size() == n;
  const double height = strip ? size + 160.0 : size;
  const auto px = [&](double x) { return size / 2 + scale * x; };
  const auto py = [&](double y) { return size / 2 - scale * y; };

  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << height << "\" viewBox=\"0 0 "
     << size << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<polygon fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  for (int j = 0; j < n; ++j) {
    const double r = 1.0 / u[j], t = u.angle(j);
    os << px(r * std::cos(t)) << ',' << py(r * std::sin(t)) << (j + 1 < n ? " " : "");
  }
  os << "\"/>\n";
  os << "<circle cx=\"" << px(0) << "\" cy=\"" << py(0) << "\" r=\"2\" fill=\"gray\"/>\n";
  for (const auto& a : atoms) {
    const double r = 1.0 / interpolate(u, a.theta);
    os << "<circle cx=\"" << px(r * std::cos(a.theta)) << "\" cy=\"" << py(r * std::sin(a.theta))
       << "\" r=\"5\" fill=\"none\" stroke=\"red\" stroke-width=\"1.5\"><title>mass " << a.mass << "</title></circle>\n";
  }

  if (strip) {
    const double top = size + 20.0, h = 120.0, left = margin, width = size - 2 * margin;
    const double emax = std::max(eta.cwiseAbs().maxCoeff(), 1e-300);
    os << "<g font-family=\"sans-serif\" font-size=\"10\">\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top + h << "\" x2=\"" << left + width << "\" y2=\"" << top + h
       << "\" stroke=\"gray\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + h
       << "\" stroke=\"gray\"/>\n";
    os << "<text x=\"" << left + 4 << "\" y=\"" << top + 10 << "\">eta max " << emax << "</text>\n";
    os << "<text x=\"" << left + width - 40 << "\" y=\"" << top + h + 12 << "\">theta</text>\n";
    os << "<polyline fill=\"none\" stroke=\"blue\" points=\"";
    for (int j = 0; j < n; ++j)
      os << left + width * j / n << ',' << top + h - h * std::max(eta[j], 0.0) / emax << (j + 1 < n ? " " : "");
    os << "\"/>\n</g>\n";
  }
  os << "</svg>\n";
}

}  // namespace gaugeopt
