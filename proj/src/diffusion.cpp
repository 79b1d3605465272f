#include "fbllr/diffusion.hpp"

#include <cmath>
#include <string>

#include "fbllr/error.hpp"

namespace fbllr {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_len(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(got) +
                              " vs " + std::to_string(want) + ")");
    }
}

// Rank check by Gaussian elimination with partial pivoting.
bool full_rank(std::size_t d, Vec a) {
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return false;
    const double tol = 1e-12 * scale * static_cast<double>(d);
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::abs(a[r * d + col]) > std::abs(a[piv * d + col])) piv = r;
        }
        if (std::abs(a[piv * d + col]) <= tol) return false;
        if (piv != col) {
            for (std::size_t c = 0; c < d; ++c) std::swap(a[piv * d + c], a[col * d + c]);
        }
        for (std::size_t r = col + 1; r < d; ++r) {
            const double f = a[r * d + col] / a[col * d + col];
            for (std::size_t c = col; c < d; ++c) a[r * d + c] -= f * a[col * d + c];
        }
    }
    return true;
}

}  // namespace

DiffusionSpec::DiffusionSpec(Variant form) : form_(std::move(form)) {
    std::visit(Overloaded{
                   [](const Isotropic& s) {
                       if (!(s.c > 0.0) || !std::isfinite(s.c)) {
                           throw InvalidArgument("isotropic diffusion coefficient must be > 0");
                       }
                   },
                   [](const Diagonal& s) {
                       if (s.v.empty()) throw InvalidArgument("diagonal diffusion needs d >= 1 entries");
                       for (double v : s.v) {
                           if (!(v > 0.0) || !std::isfinite(v)) {
                               throw InvalidArgument("diagonal diffusion entries must be > 0");
                           }
                       }
                   },
                   [](const DenseSmall& s) {
                       if (s.d == 0 || s.d > kDenseSmallMaxDim) {
                           throw InvalidArgument("dense diffusion only supported for 1 <= d <= 64");
                       }
                       require_len(s.a.size(), s.d * s.d, "dense diffusion");
                       if (!full_rank(s.d, s.a)) throw InvalidArgument("dense diffusion must have full rank");
                   },
               },
               form_);
}

double DiffusionSpec::isotropic_coefficient() const {
    if (const auto* iso = std::get_if<Isotropic>(&form_)) return iso->c;
    throw InvalidArgument("diffusion is not isotropic");
}

std::size_t DiffusionSpec::fixed_dimension() const noexcept {
    return std::visit(Overloaded{
                          [](const Isotropic&) -> std::size_t { return 0; },
                          [](const Diagonal& s) -> std::size_t { return s.v.size(); },
                          [](const DenseSmall& s) -> std::size_t { return s.d; },
                      },
                      form_);
}

void DiffusionSpec::apply(std::span<const double> w, std::span<double> out) const {
    require_len(out.size(), w.size(), "apply_diffusion");
    std::visit(Overloaded{
                   [&](const Isotropic& s) {
                       for (std::size_t i = 0; i < w.size(); ++i) out[i] = s.c * w[i];
                   },
                   [&](const Diagonal& s) {
                       require_len(w.size(), s.v.size(), "apply_diffusion");
                       for (std::size_t i = 0; i < w.size(); ++i) out[i] = s.v[i] * w[i];
                   },
                   [&](const DenseSmall& s) {
                       require_len(w.size(), s.d, "apply_diffusion");
                       for (std::size_t i = 0; i < s.d; ++i) {
                           double acc = 0.0;
                           for (std::size_t j = 0; j < s.d; ++j) acc += s.a[i * s.d + j] * w[j];
                           out[i] = acc;
                       }
                   },
               },
               form_);
}

void DiffusionSpec::apply_transpose(std::span<const double> g, std::span<double> out) const {
    require_len(out.size(), g.size(), "apply_diffusion_transpose");
    if (const auto* dense = std::get_if<DenseSmall>(&form_)) {
        require_len(g.size(), dense->d, "apply_diffusion_transpose");
        for (std::size_t j = 0; j < dense->d; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < dense->d; ++i) acc += dense->a[i * dense->d + j] * g[i];
            out[j] = acc;
        }
        return;
    }
    apply(g, out);  // symmetric forms
}

Vec DiffusionSpec::dense(std::size_t d) const {
    Vec m(d * d, 0.0);
    std::visit(Overloaded{
                   [&](const Isotropic& s) {
                       for (std::size_t i = 0; i < d; ++i) m[i * d + i] = s.c;
                   },
                   [&](const Diagonal& s) {
                       require_len(d, s.v.size(), "dense");
                       for (std::size_t i = 0; i < d; ++i) m[i * d + i] = s.v[i];
                   },
                   [&](const DenseSmall& s) {
                       require_len(d, s.d, "dense");
                       m = s.a;
                   },
               },
               form_);
    return m;
}

Vec apply_diffusion(const DiffusionSpec& spec, double /*t*/, std::span<const double> /*x*/,
                    std::span<const double> w) {
    Vec out(w.size());
    spec.apply(w, out);
    return out;
}

Vec apply_diffusion_transpose(const DiffusionSpec& spec, double /*t*/, std::span<const double> /*x*/,
                              std::span<const double> g) {
    Vec out(g.size());
    spec.apply_transpose(g, out);
    return out;
}

}  // namespace fbllr
