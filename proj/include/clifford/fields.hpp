#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "clifford/algebra.hpp"
#include "clifford/tensor.hpp"

namespace clifford {

// Multivector field on a regular grid. Layout is blade-major:
// data axes are [blade, channel, spatial...] with 2 or 3 spatial axes,
// so each blade plane is a contiguous conventional tensor.
struct MultivectorField {
    Signature signature;
    Tensor data;
    std::vector<double> spacing;  // dx per spatial axis; metadata only

    MultivectorField() = default;
    MultivectorField(Signature sig, std::int64_t channels, std::vector<std::int64_t> spatial,
                     std::vector<double> dx = {})
        : signature(sig), spacing(std::move(dx)) {
        sig.validate();
        if (spatial.size() != 2 && spatial.size() != 3)
            throw std::invalid_argument("MultivectorField: need 2 or 3 spatial axes");
        if (channels < 1) throw std::invalid_argument("MultivectorField: channels >= 1 required");
        for (auto s : spatial)
            if (s < 1) throw std::invalid_argument("MultivectorField: spatial extents >= 1 required");
        std::vector<std::int64_t> shape{sig.blade_count(), channels};
        shape.insert(shape.end(), spatial.begin(), spatial.end());
        data = Tensor::zeros(shape);
        if (spacing.empty()) spacing.assign(spatial.size(), 1.0);
    }

    std::int64_t blades() const { return data.dim(0); }
    std::int64_t channels() const { return data.dim(1); }
    std::size_t spatial_rank() const { return data.rank() - 2; }
    std::vector<std::int64_t> spatial_shape() const {
        return {data.shape().begin() + 2, data.shape().end()};
    }
    std::int64_t spatial_numel() const {
        std::int64_t n = 1;
        for (std::size_t i = 2; i < data.rank(); ++i) n *= data.dim(i);
        return n;
    }

    // Contiguous plane of one (blade, channel) pair.
    double* plane(std::int64_t blade, std::int64_t channel) {
        return data.data() + (blade * channels() + channel) * spatial_numel();
    }
    const double* plane(std::int64_t blade, std::int64_t channel) const {
        return data.data() + (blade * channels() + channel) * spatial_numel();
    }

    MultivectorField like_zeros() const {
        MultivectorField out = *this;
        std::fill(out.data.vec().begin(), out.data.vec().end(), 0.0);
        return out;
    }

    MultivectorField& operator+=(const MultivectorField& o) {
        data += o.data;
        return *this;
    }
    MultivectorField& operator*=(double c) {
        data *= c;
        return *this;
    }
    friend MultivectorField operator+(MultivectorField a, const MultivectorField& b) { return a += b; }
    friend MultivectorField operator*(MultivectorField a, double c) { return a *= c; }
};

// Assignment of named physical fields to blade slots. The optional sign
// absorbs orientation flips such as the magnetic y component landing in
// the e1e3 blade with negative orientation.
struct FieldPacking {
    struct Slot {
        std::string name;
        int blade = 0;
        double sign = 1.0;
    };
    std::vector<Slot> slots;

    void validate(const Signature& sig) const {
        std::vector<bool> used(sig.blade_count(), false);
        for (const auto& s : slots) {
            if (s.blade < 0 || s.blade >= sig.blade_count())
                throw std::invalid_argument("FieldPacking: blade index out of range for " + sig.str());
            if (used[s.blade])
                throw std::invalid_argument("FieldPacking: duplicate blade assignment at index " +
                                            std::to_string(s.blade));
            used[s.blade] = true;
        }
    }

    const Slot* find(const std::string& name) const {
        for (const auto& s : slots)
            if (s.name == name) return &s;
        return nullptr;
    }
};

// Scalar + 2D velocity into G^2 blades (1, e1, e2).
inline FieldPacking advection2d_packing() {
    return {{{"scalar", 0, 1.0}, {"velocity_x", 1, 1.0}, {"velocity_y", 2, 1.0}}};
}

// Electromagnetic packing F = E + B i3: electric vector blades, magnetic
// bivector blades. e2 i3 = -e1e3 under the e1e3 storage orientation.
inline FieldPacking maxwell3d_packing() {
    return {{{"electric_x", 1, 1.0},
             {"electric_y", 2, 1.0},
             {"electric_z", 3, 1.0},
             {"magnetic_x", 6, 1.0},    // e2e3
             {"magnetic_y", 5, -1.0},   // e1e3 carries -B_y
             {"magnetic_z", 4, 1.0}}};  // e1e2
}

inline MultivectorField pack(const std::map<std::string, Tensor>& fields, const FieldPacking& packing,
                             const Signature& sig) {
    packing.validate(sig);
    std::vector<std::int64_t> spatial;
    for (const auto& [name, grid] : fields) {
        if (spatial.empty())
            spatial = grid.shape();
        else if (grid.shape() != spatial)
            throw std::invalid_argument("pack: grid shape mismatch for field '" + name + "'");
    }
    if (spatial.empty()) spatial = {1, 1};
    MultivectorField out(sig, 1, spatial);
    for (const auto& [name, grid] : fields) {
        const auto* slot = packing.find(name);
        if (!slot) throw std::invalid_argument("pack: field '" + name + "' not present in packing");
        double* dst = out.plane(slot->blade, 0);
        for (std::int64_t i = 0; i < grid.numel(); ++i) dst[i] = slot->sign * grid[i];
    }
    return out;
}

inline std::map<std::string, Tensor> unpack(const MultivectorField& field, const FieldPacking& packing) {
    packing.validate(field.signature);
    if (field.channels() != 1)
        throw std::invalid_argument("unpack: expected a single-channel field");
    std::map<std::string, Tensor> out;
    for (const auto& slot : packing.slots) {
        Tensor grid(field.spatial_shape());
        const double* src = field.plane(slot.blade, 0);
        for (std::int64_t i = 0; i < grid.numel(); ++i) grid[i] = src[i] / slot.sign;
        out.emplace(slot.name, std::move(grid));
    }
    return out;
}

namespace detail {

inline std::int64_t wrap(std::int64_t i, std::int64_t n) {
    i %= n;
    return i < 0 ? i + n : i;
}

}  // namespace detail

// Periodic shift along spatial axes: out(x) = in(x - offset).
inline MultivectorField circular_shift(const MultivectorField& f, const std::vector<std::int64_t>& offsets) {
    if (offsets.size() != f.spatial_rank())
        throw std::invalid_argument("circular_shift: one offset per spatial axis required");
    MultivectorField out = f.like_zeros();
    const auto spatial = f.spatial_shape();
    const std::int64_t planes = f.blades() * f.channels();
    const std::int64_t npix = f.spatial_numel();
    for (std::int64_t p = 0; p < planes; ++p) {
        const double* src = f.data.data() + p * npix;
        double* dst = out.data.data() + p * npix;
        if (spatial.size() == 2) {
            const std::int64_t H = spatial[0], W = spatial[1];
            for (std::int64_t y = 0; y < H; ++y)
                for (std::int64_t x = 0; x < W; ++x)
                    dst[y * W + x] =
                        src[detail::wrap(y - offsets[0], H) * W + detail::wrap(x - offsets[1], W)];
        } else {
            const std::int64_t D = spatial[0], H = spatial[1], W = spatial[2];
            for (std::int64_t z = 0; z < D; ++z)
                for (std::int64_t y = 0; y < H; ++y)
                    for (std::int64_t x = 0; x < W; ++x)
                        dst[(z * H + y) * W + x] =
                            src[(detail::wrap(z - offsets[0], D) * H + detail::wrap(y - offsets[1], H)) * W +
                                detail::wrap(x - offsets[2], W)];
        }
    }
    return out;
}

// Extends each spatial axis by `margin` wrap-around cells on both ends.
inline MultivectorField pad_periodic(const MultivectorField& f, const std::vector<std::int64_t>& margins) {
    if (margins.size() != f.spatial_rank())
        throw std::invalid_argument("pad_periodic: one margin per spatial axis required");
    for (auto m : margins)
        if (m < 0) throw std::invalid_argument("pad_periodic: margins must be >= 0");
    auto spatial = f.spatial_shape();
    std::vector<std::int64_t> padded = spatial;
    for (std::size_t i = 0; i < padded.size(); ++i) padded[i] += 2 * margins[i];
    MultivectorField out(f.signature, f.channels(), padded, f.spacing);
    const std::int64_t npix_in = f.spatial_numel();
    const std::int64_t npix_out = out.spatial_numel();
    const std::int64_t planes = f.blades() * f.channels();
    for (std::int64_t p = 0; p < planes; ++p) {
        const double* src = f.data.data() + p * npix_in;
        double* dst = out.data.data() + p * npix_out;
        if (spatial.size() == 2) {
            const std::int64_t H = spatial[0], W = spatial[1];
            for (std::int64_t y = 0; y < padded[0]; ++y)
                for (std::int64_t x = 0; x < padded[1]; ++x)
                    dst[y * padded[1] + x] =
                        src[detail::wrap(y - margins[0], H) * W + detail::wrap(x - margins[1], W)];
        } else {
            const std::int64_t D = spatial[0], H = spatial[1], W = spatial[2];
            for (std::int64_t z = 0; z < padded[0]; ++z)
                for (std::int64_t y = 0; y < padded[1]; ++y)
                    for (std::int64_t x = 0; x < padded[2]; ++x)
                        dst[(z * padded[1] + y) * padded[2] + x] =
                            src[(detail::wrap(z - margins[0], D) * H + detail::wrap(y - margins[1], H)) * W +
                                detail::wrap(x - margins[2], W)];
        }
    }
    return out;
}

}  // namespace clifford
