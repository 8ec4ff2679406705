#include "fit4control/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "fit4control/errors.hpp"
#include "fit4control/random.hpp"

namespace fit4control {

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::interval: return "interval";
    case DomainKind::orthotope: return "orthotope";
    case DomainKind::truncated_confining: return "truncated-confining";
  }
  return "?";
}

DomainKind parse_domain_kind(const std::string& text) {
  if (text == "interval") return DomainKind::interval;
  if (text == "orthotope") return DomainKind::orthotope;
  if (text == "truncated-confining") return DomainKind::truncated_confining;
  throw InvalidArgument("unknown domain kind '" + text + "'");
}

ComputationalDomain::ComputationalDomain(DomainKind kind, std::vector<double> sides,
                                         std::vector<int> grid_counts,
                                         std::optional<TruncationBox> truncation)
    : kind_(kind),
      sides_(std::move(sides)),
      grid_counts_(std::move(grid_counts)),
      truncation_(std::move(truncation)) {
  if (sides_.empty()) throw InvalidArgument("domain needs at least one side");
  if (sides_.size() != grid_counts_.size())
    throw InvalidArgument("dimension mismatch: " + std::to_string(sides_.size()) + " sides, " +
                          std::to_string(grid_counts_.size()) + " grid counts");
  if (kind_ == DomainKind::interval && sides_.size() != 1)
    throw InvalidArgument("interval domain must be one-dimensional");
  for (double s : sides_)
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("nonpositive side length");
  for (int n : grid_counts_)
    if (n < 3) throw InvalidArgument("grid counts must be at least 3");

  const bool truncated = kind_ == DomainKind::truncated_confining;
  if (truncated != truncation_.has_value())
    throw InvalidArgument("truncation box is required exactly for truncated-confining domains");
  if (truncation_) {
    auto& box = *truncation_;
    if (box.center.empty()) box.center.assign(sides_.size(), 0.0);
    if (box.center.size() != sides_.size())
      throw InvalidArgument("truncation center has wrong dimension");
    if (!(box.half_width > 0.0)) throw InvalidArgument("truncation half-width must be positive");
    for (double s : sides_)
      if (std::abs(s - 2.0 * box.half_width) > 1e-12 * s)
        throw InvalidArgument("truncated-confining sides must equal twice the half-width");
  }

  size_ = 1;
  for (int n : grid_counts_) size_ *= static_cast<std::size_t>(n);
}

double ComputationalDomain::lower(int axis) const {
  if (truncation_) return truncation_->center.at(axis) - truncation_->half_width;
  (void)sides_.at(axis);
  return 0.0;
}

double ComputationalDomain::cell_volume() const noexcept {
  double v = 1.0;
  for (int i = 0; i < dimension(); ++i) v *= sides_[i] / (grid_counts_[i] + 1);
  return v;
}

std::vector<int> ComputationalDomain::unravel(std::size_t flat) const {
  std::vector<int> index(sides_.size());
  for (int axis = dimension() - 1; axis >= 0; --axis) {
    index[axis] = static_cast<int>(flat % grid_counts_[axis]);
    flat /= grid_counts_[axis];
  }
  return index;
}

std::size_t ComputationalDomain::ravel(std::span<const int> index) const {
  std::size_t flat = 0;
  for (int axis = 0; axis < dimension(); ++axis)
    flat = flat * grid_counts_[axis] + static_cast<std::size_t>(index[axis]);
  return flat;
}

void ComputationalDomain::node(std::size_t flat, std::span<double> x) const {
  for (int axis = dimension() - 1; axis >= 0; --axis) {
    x[axis] = coordinate(axis, static_cast<int>(flat % grid_counts_[axis]));
    flat /= grid_counts_[axis];
  }
}

bool ComputationalDomain::in_collar(std::size_t flat, double fraction) const {
  for (int axis = dimension() - 1; axis >= 0; --axis) {
    const int i = static_cast<int>(flat % grid_counts_[axis]);
    flat /= grid_counts_[axis];
    const double t = (i + 1.0) / (grid_counts_[axis] + 1.0);
    if (t < fraction || t > 1.0 - fraction) return true;
  }
  return false;
}

ComputationalDomain make_domain(DomainKind kind, std::vector<double> sides,
                                std::vector<int> grid_counts,
                                std::optional<TruncationBox> truncation) {
  return ComputationalDomain(kind, std::move(sides), std::move(grid_counts),
                             std::move(truncation));
}

namespace {

struct ParsedForm {
  std::string name;
  std::map<std::string, double> args;
};

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

ParsedForm parse_form(const std::string& text) {
  ParsedForm form;
  const auto open = text.find('(');
  if (open == std::string::npos) {
    form.name = trim(text);
    return form;
  }
  if (text.back() != ')') throw InvalidArgument("unbalanced parentheses in form '" + text + "'");
  form.name = trim(text.substr(0, open));
  std::stringstream body(text.substr(open + 1, text.size() - open - 2));
  std::string item;
  while (std::getline(body, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("expected key=value in '" + item + "'");
    const std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    try {
      std::size_t used = 0;
      form.args[key] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw InvalidArgument("non-numeric value for '" + key + "' in form '" + text + "'");
    }
  }
  return form;
}

double arg(const ParsedForm& form, const std::string& key, std::optional<double> fallback = {}) {
  if (auto it = form.args.find(key); it != form.args.end()) return it->second;
  if (fallback) return *fallback;
  throw InvalidArgument("form '" + form.name + "' needs argument '" + key + "'");
}

/// Knot values of one random piecewise-linear profile on [0, 1].
std::vector<double> random_knots(Rng& rng, int knots, double amp) {
  std::vector<double> values(static_cast<std::size_t>(knots));
  for (auto& v : values) v = rng.uniform(0.0, amp);
  return values;
}

double interpolate(const std::vector<double>& knots, double t) {
  const double s = std::clamp(t, 0.0, 1.0) * static_cast<double>(knots.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(s), knots.size() - 2);
  const double f = s - static_cast<double>(i);
  return (1.0 - f) * knots[i] + f * knots[i + 1];
}

}  // namespace

Potential sample_potential(const ComputationalDomain& domain, const std::string& analytic_form) {
  const ParsedForm form = parse_form(analytic_form);
  const int d = domain.dimension();
  PotentialCallback fn;

  if (form.name == "zero") {
    fn = [](std::span<const double>) { return 0.0; };
  } else if (form.name == "constant") {
    const double c = arg(form, "c");
    fn = [c](std::span<const double>) { return c; };
  } else if (form.name == "linear-x") {
    fn = [](std::span<const double> x) { return x[0]; };
  } else if (form.name == "linear") {
    const int axis = static_cast<int>(arg(form, "axis", 0.0));
    if (axis < 0 || axis >= d) throw InvalidArgument("linear: axis out of range");
    const double slope = arg(form, "slope", 1.0);
    const double offset = arg(form, "offset", 0.0);
    fn = [=](std::span<const double> x) { return offset + slope * x[axis]; };
  } else if (form.name == "product-xy") {
    if (d < 2) throw InvalidArgument("product-xy needs a domain of dimension >= 2");
    fn = [](std::span<const double> x) { return x[0] * x[1]; };
  } else if (form.name == "harmonic") {
    const double omega = arg(form, "omega", 1.0);
    std::vector<double> center(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) center[i] = 0.5 * (domain.lower(i) + domain.upper(i));
    fn = [omega, center](std::span<const double> x) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < center.size(); ++i) r2 += (x[i] - center[i]) * (x[i] - center[i]);
      return omega * omega * r2;
    };
  } else if (form.name == "indicator" || form.name == "well") {
    const double a = arg(form, "a");
    const double b = arg(form, "b");
    const double inside = form.name == "well" ? arg(form, "inside") : 1.0;
    const double outside = form.name == "well" ? arg(form, "outside") : 0.0;
    fn = [=](std::span<const double> x) { return (x[0] >= a && x[0] <= b) ? inside : outside; };
  } else if (form.name == "random-piecewise-linear") {
    const auto seed = static_cast<std::uint64_t>(arg(form, "seed"));
    const double amp = arg(form, "amp", 10.0);
    const int knots = static_cast<int>(arg(form, "knots", 8.0));
    if (knots < 2) throw InvalidArgument("random-piecewise-linear needs at least 2 knots");
    Rng rng(seed);
    std::vector<std::vector<double>> profiles;
    for (int i = 0; i < d; ++i) profiles.push_back(random_knots(rng, knots, amp));
    std::vector<double> lo(static_cast<std::size_t>(d)), side(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      lo[i] = domain.lower(i);
      side[i] = domain.sides()[i];
    }
    fn = [profiles, lo, side](std::span<const double> x) {
      double v = 0.0;
      for (std::size_t i = 0; i < profiles.size(); ++i)
        v += interpolate(profiles[i], (x[i] - lo[i]) / side[i]);
      return v;
    };
  } else {
    throw InvalidArgument("unknown potential form '" + form.name + "'");
  }

  Potential p = sample_potential(domain, fn, analytic_form);
  p.analytic_form = analytic_form;
  return p;
}

Potential sample_potential(const ComputationalDomain& domain, const PotentialCallback& callback,
                           std::string label) {
  Potential p;
  p.label = std::move(label);
  p.values.resize(domain.size());
  std::vector<double> x(static_cast<std::size_t>(domain.dimension()));
  for (std::size_t i = 0; i < domain.size(); ++i) {
    domain.node(i, x);
    const double v = callback(x);
    if (!std::isfinite(v))
      throw InvalidArgument("potential '" + p.label + "' is not finite at node " +
                            std::to_string(i));
    p.values[i] = v;
  }
  return p;
}

ControlSet::ControlSet(std::vector<ControlInterval> intervals, double anchor, double delta)
    : intervals_(std::move(intervals)), anchor_(anchor), delta_(delta) {
  if (intervals_.empty()) throw InvalidArgument("control set needs at least one interval");
  for (const auto& iv : intervals_)
    if (!(iv.lo <= iv.hi)) throw InvalidArgument("control interval with lo > hi");
  if (!(delta_ > 0.0)) throw InvalidArgument("control window delta must be positive");
  if (!contains_window(anchor_, delta_))
    throw InvalidArgument("anchor window [u, u+delta) is not contained in the control set");
}

bool ControlSet::contains(double u) const {
  return std::any_of(intervals_.begin(), intervals_.end(), [u](const ControlInterval& iv) {
    const bool above = iv.lo_closed ? u >= iv.lo : u > iv.lo;
    const bool below = iv.hi_closed ? u <= iv.hi : u < iv.hi;
    return above && below;
  });
}

bool ControlSet::contains_window(double u, double delta) const {
  // Walk the merged cover starting from u; the window is half-open, so the
  // right end only needs to be reached, not included.
  if (!contains(u)) return false;
  double reach = u;
  bool reach_covered = true;
  bool progressed = true;
  while (progressed && reach < u + delta) {
    progressed = false;
    for (const auto& iv : intervals_) {
      const bool starts_ok = iv.lo < reach || (iv.lo == reach && (iv.lo_closed || reach_covered));
      if (starts_ok && (iv.hi > reach || (iv.hi == reach && iv.hi_closed && !reach_covered))) {
        reach_covered = iv.hi_closed;
        progressed = true;
        reach = iv.hi;
      }
    }
  }
  return reach >= u + delta;
}

double SpectralDecomposition::inner(std::span<const double> f, std::span<const double> g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += quadrature_weights[i] * f[i] * g[i];
  return s;
}

double SpectralDecomposition::orthonormality_defect() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < eigenfunctions.size(); ++j)
    for (std::size_t k = 0; k <= j; ++k) {
      const double target = j == k ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(inner(eigenfunctions[j], eigenfunctions[k]) - target));
    }
  return worst;
}

void SpectralDecomposition::validate(double tolerance) const {
  for (std::size_t j = 1; j < eigenvalues.size(); ++j)
    if (eigenvalues[j] < eigenvalues[j - 1])
      throw NumericalError("eigenvalues are not nondecreasing at index " + std::to_string(j + 1));
  const double defect = orthonormality_defect();
  if (defect > tolerance)
    throw NumericalError("eigenfunctions not orthonormal: defect " + std::to_string(defect));
}

double default_orthonormality_tolerance(int dimension) { return dimension == 1 ? 1e-10 : 1e-8; }

std::string to_string(ResonanceStatus status) {
  switch (status) {
    case ResonanceStatus::resonant: return "RESONANT";
    case ResonanceStatus::no_relation_found: return "NO_RELATION_FOUND";
    case ResonanceStatus::exact_nonresonant: return "EXACT_NONRESONANT";
  }
  return "?";
}

}  // namespace fit4control
