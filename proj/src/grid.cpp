#include "memdiff/grid.hpp"

#include "memdiff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace memdiff {

Grid::Grid(double a, double b, std::size_t n) : a_(a), b_(b), n_(n) {
    if (!(b > a) || !std::isfinite(a) || !std::isfinite(b))
        throw InvalidInput("grid: need finite endpoints with b > a");
    if (n == 0) throw InvalidInput("grid: need at least one interior node");
    h_ = (b - a) / static_cast<double>(n + 1);
}

Grid Grid::unit_pi(std::size_t n) { return Grid(0.0, std::numbers::pi, n); }

std::vector<double> Grid::nodes() const {
    std::vector<double> xs(n_);
    for (std::size_t j = 0; j < n_; ++j) xs[j] = x(j);
    return xs;
}

Field::Field(const Grid& g) : grid_(g), values_(g.n(), 0.0) {}

Field::Field(const Grid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
    if (values_.size() != g.n())
        throw GridMismatch("field: " + std::to_string(values_.size()) + " values for a grid with " +
                           std::to_string(g.n()) + " nodes");
}

Field Field::sample(const Grid& g, const std::function<double(double)>& f) {
    Field out(g);
    for (std::size_t j = 0; j < g.n(); ++j) out[j] = f(g.x(j));
    return out;
}

Field Field::constant(const Grid& g, double c) { return Field(g, std::vector<double>(g.n(), c)); }

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

void require_same_grid(const Field& a, const Field& b) {
    if (a.grid() != b.grid()) throw GridMismatch("fields live on different grids");
}

Field& Field::operator+=(const Field& o) {
    require_same_grid(*this, o);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += o.values_[j];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    require_same_grid(*this, o);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= o.values_[j];
    return *this;
}

Field& Field::operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double c, Field a) { return a *= c; }
Field operator*(Field a, double c) { return a *= c; }

Field hadamard(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field out(a.grid());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
    return out;
}

Field laplacian(const Field& f) {
    const std::size_t n = f.size();
    const double ih2 = 1.0 / (f.grid().h() * f.grid().h());
    Field out(f.grid());
    for (std::size_t j = 0; j < n; ++j) {
        const double left = j > 0 ? f[j - 1] : 0.0;
        const double right = j + 1 < n ? f[j + 1] : 0.0;
        out[j] = (left - 2.0 * f[j] + right) * ih2;
    }
    return out;
}

std::vector<double> interface_fluxes(const Field& u, const Field& w, GhostMode ghost) {
    require_same_grid(u, w);
    const std::size_t n = u.size();
    const double ih = 1.0 / u.grid().h();
    const double ug = ghost == GhostMode::Unit ? 1.0 : 0.0;
    std::vector<double> F(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double ul = k > 0 ? u[k - 1] : ug;
        const double ur = k < n ? u[k] : ug;
        const double wl = k > 0 ? w[k - 1] : 0.0;
        const double wr = k < n ? w[k] : 0.0;
        F[k] = 0.5 * (ul + ur) * (wr - wl) * ih;
    }
    return F;
}

Field flux_divergence(const Field& u, const Field& w, GhostMode ghost) {
    const auto F = interface_fluxes(u, w, ghost);
    const double ih = 1.0 / u.grid().h();
    Field out(u.grid());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (F[j + 1] - F[j]) * ih;
    return out;
}

double inner_product(const Field& f, const Field& g) {
    require_same_grid(f, g);
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * g[j];
    return f.grid().h() * s;
}

double l2_norm(const Field& f) { return std::sqrt(inner_product(f, f)); }

double gradient_energy(const Field& f) {
    const std::size_t n = f.size();
    const double h = f.grid().h();
    double s = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double l = k > 0 ? f[k - 1] : 0.0;
        const double r = k < n ? f[k] : 0.0;
        s += (r - l) * (r - l);
    }
    return s / h;
}

}  // namespace memdiff
