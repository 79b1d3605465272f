#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace fbllr {

using Vec = std::vector<double>;

/// sigma = c * I.
struct Isotropic {
    double c = 1.0;
};

/// sigma = diag(v).
struct Diagonal {
    Vec v;
};

/// Explicit row-major d x d sigma. Only accepted for d <= 64; intended for tests.
struct DenseSmall {
    std::size_t d = 0;
    Vec a;
};

inline constexpr std::size_t kDenseSmallMaxDim = 64;

/// Structured diffusion coefficient. The benchmarks only need the isotropic
/// form; diagonal and small dense variants exist for user problems and tests.
class DiffusionSpec {
public:
    using Variant = std::variant<Isotropic, Diagonal, DenseSmall>;

    DiffusionSpec() = default;
    // Validates positivity / rank; throws InvalidArgument.
    DiffusionSpec(Variant form);  // NOLINT(google-explicit-constructor)
    DiffusionSpec(Isotropic form) : DiffusionSpec(Variant{form}) {}           // NOLINT
    DiffusionSpec(Diagonal form) : DiffusionSpec(Variant{std::move(form)}) {}  // NOLINT
    DiffusionSpec(DenseSmall form) : DiffusionSpec(Variant{std::move(form)}) {}  // NOLINT

    const Variant& form() const noexcept { return form_; }
    bool is_isotropic() const noexcept { return std::holds_alternative<Isotropic>(form_); }
    /// Isotropic coefficient; throws InvalidArgument for other forms.
    double isotropic_coefficient() const;

    /// Dimension implied by the form, or 0 for isotropic (any d).
    std::size_t fixed_dimension() const noexcept;

    /// out = sigma * w.
    void apply(std::span<const double> w, std::span<double> out) const;
    /// out = sigma^T * g.
    void apply_transpose(std::span<const double> g, std::span<double> out) const;

    /// Row-major d x d matrix, for oracles and for tests only.
    Vec dense(std::size_t d) const;

private:
    Variant form_ = Isotropic{1.0};
};

// sigma(t, x) * w. The structured forms do not depend on (t, x); the
// arguments are kept so user problems with state-dependent sigma fit the
// same call shape.
Vec apply_diffusion(const DiffusionSpec& spec, double t, std::span<const double> x, std::span<const double> w);

// sigma(t, x)^T * g.
Vec apply_diffusion_transpose(const DiffusionSpec& spec, double t, std::span<const double> x,
                              std::span<const double> g);

}  // namespace fbllr
