#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "clifford/layers.hpp"
#include "clifford/rng.hpp"
#include "clifford/tensor.hpp"
#include "clifford/transforms.hpp"

namespace clifford {

class Tape;
using NodeId = std::int64_t;

// One primitive on the tape. run() recomputes the forward pass from the
// inputs (used both eagerly and for bit-identical replay); accumulate()
// pushes adjoints of the output into the input gradients.
struct OpBase {
    virtual ~OpBase() = default;
    virtual const char* name() const = 0;
    virtual Tensor run(const std::vector<const Tensor*>& in) const = 0;
    virtual void accumulate(const std::vector<const Tensor*>& in, const Tensor& value,
                            const Tensor& gout, const std::vector<Tensor*>& gin) const = 0;
};

struct GradReport {
    std::vector<Tensor> grads;
    std::vector<bool> connected;  // false = parameter unreachable from the loss
};

// Reverse-mode tape over tensor-valued primitives.
class Tape {
public:
    NodeId leaf(Tensor value) {
        values_.push_back(std::move(value));
        ops_.push_back(nullptr);
        inputs_.push_back({});
        return static_cast<NodeId>(values_.size() - 1);
    }

    NodeId apply(std::shared_ptr<OpBase> op, std::vector<NodeId> inputs) {
        std::vector<const Tensor*> in;
        in.reserve(inputs.size());
        for (NodeId i : inputs) in.push_back(&values_[static_cast<std::size_t>(i)]);
        values_.push_back(op->run(in));
        ops_.push_back(std::move(op));
        inputs_.push_back(std::move(inputs));
        return static_cast<NodeId>(values_.size() - 1);
    }

    const Tensor& value(NodeId id) const { return values_[static_cast<std::size_t>(id)]; }
    std::size_t size() const { return values_.size(); }

    // Re-executes every recorded op in order; returns the recomputed values
    // so tests can assert bit-identical replay.
    std::vector<Tensor> replay_forward() const {
        std::vector<Tensor> replayed(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!ops_[i]) {
                replayed[i] = values_[i];
                continue;
            }
            std::vector<const Tensor*> in;
            for (NodeId j : inputs_[i]) in.push_back(&replayed[static_cast<std::size_t>(j)]);
            replayed[i] = ops_[i]->run(in);
        }
        return replayed;
    }

    // Reverse accumulation from a scalar loss node.
    GradReport grad(NodeId loss, const std::vector<NodeId>& wrt) const {
        if (value(loss).numel() != 1) throw std::invalid_argument("grad: loss must be scalar");
        std::vector<Tensor> adj(values_.size());
        std::vector<bool> seen(values_.size(), false);
        adj[static_cast<std::size_t>(loss)] = Tensor({1}, {1.0});
        seen[static_cast<std::size_t>(loss)] = true;
        for (NodeId id = loss; id >= 0; --id) {
            const auto i = static_cast<std::size_t>(id);
            if (!seen[i] || !ops_[i]) continue;
            std::vector<const Tensor*> in;
            std::vector<Tensor*> gin;
            for (NodeId j : inputs_[i]) {
                const auto ji = static_cast<std::size_t>(j);
                in.push_back(&values_[ji]);
                if (!seen[ji]) {
                    adj[ji] = Tensor::zeros(values_[ji].shape());
                    seen[ji] = true;
                }
                gin.push_back(&adj[ji]);
            }
            ops_[i]->accumulate(in, values_[i], adj[i], gin);
        }
        GradReport report;
        for (NodeId p : wrt) {
            const auto pi = static_cast<std::size_t>(p);
            report.connected.push_back(seen[pi]);
            report.grads.push_back(seen[pi] ? adj[pi] : Tensor::zeros(values_[pi].shape()));
        }
        return report;
    }

private:
    std::vector<Tensor> values_;
    std::vector<std::shared_ptr<OpBase>> ops_;
    std::vector<std::vector<NodeId>> inputs_;
};

namespace ops {

struct Add final : OpBase {
    const char* name() const override { return "add"; }
    Tensor run(const std::vector<const Tensor*>& in) const override { return *in[0] + *in[1]; }
    void accumulate(const std::vector<const Tensor*>&, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        *gin[0] += g;
        *gin[1] += g;
    }
};

struct Sub final : OpBase {
    const char* name() const override { return "sub"; }
    Tensor run(const std::vector<const Tensor*>& in) const override { return *in[0] - *in[1]; }
    void accumulate(const std::vector<const Tensor*>&, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        *gin[0] += g;
        *gin[1] -= g;
    }
};

struct Mul final : OpBase {
    const char* name() const override { return "mul"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        Tensor out = *in[0];
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= (*in[1])[i];
        return out;
    }
    void accumulate(const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        for (std::int64_t i = 0; i < g.numel(); ++i) {
            (*gin[0])[i] += g[i] * (*in[1])[i];
            (*gin[1])[i] += g[i] * (*in[0])[i];
        }
    }
};

struct Scale final : OpBase {
    double factor;
    double shift;
    explicit Scale(double f, double s = 0.0) : factor(f), shift(s) {}
    const char* name() const override { return "scale"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        Tensor out = *in[0];
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] * factor + shift;
        return out;
    }
    void accumulate(const std::vector<const Tensor*>&, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        for (std::int64_t i = 0; i < g.numel(); ++i) (*gin[0])[i] += g[i] * factor;
    }
};

struct Recip final : OpBase {
    const char* name() const override { return "recip"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        Tensor out = *in[0];
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / out[i];
        return out;
    }
    void accumulate(const std::vector<const Tensor*>&, const Tensor& v, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        for (std::int64_t i = 0; i < g.numel(); ++i) (*gin[0])[i] -= g[i] * v[i] * v[i];
    }
};

struct Gelu final : OpBase {
    const char* name() const override { return "gelu"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        Tensor out = *in[0];
        for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = kernels::gelu(out[i]);
        return out;
    }
    void accumulate(const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        for (std::int64_t i = 0; i < g.numel(); ++i)
            (*gin[0])[i] += g[i] * kernels::gelu_grad((*in[0])[i]);
    }
};

struct SumAll final : OpBase {
    const char* name() const override { return "sum"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        double s = 0.0;
        for (std::int64_t i = 0; i < in[0]->numel(); ++i) s += (*in[0])[i];
        return Tensor({1}, {s});
    }
    void accumulate(const std::vector<const Tensor*>&, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        for (std::int64_t i = 0; i < gin[0]->numel(); ++i) (*gin[0])[i] += g[0];
    }
};

// Summed MSE against a fixed target over a blade/plane mask:
// (1/n_y) sum_mask (x - target)^2.
struct Smse final : OpBase {
    Tensor target;
    std::vector<bool> plane_mask;  // one entry per leading-axis plane
    double inv_ny;
    Smse(Tensor t, std::vector<bool> mask, double scale)
        : target(std::move(t)), plane_mask(std::move(mask)), inv_ny(scale) {}
    const char* name() const override { return "smse"; }
    std::int64_t plane_len() const {
        return target.numel() / static_cast<std::int64_t>(plane_mask.size());
    }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        const std::int64_t len = plane_len();
        double s = 0.0;
        for (std::size_t p = 0; p < plane_mask.size(); ++p) {
            if (!plane_mask[p]) continue;
            const double* x = in[0]->data() + p * len;
            const double* t = target.data() + p * len;
            for (std::int64_t i = 0; i < len; ++i) {
                const double d = x[i] - t[i];
                s += d * d;
            }
        }
        return Tensor({1}, {s * inv_ny});
    }
    void accumulate(const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        const std::int64_t len = plane_len();
        for (std::size_t p = 0; p < plane_mask.size(); ++p) {
            if (!plane_mask[p]) continue;
            const double* x = in[0]->data() + p * len;
            const double* t = target.data() + p * len;
            double* gx = gin[0]->data() + p * len;
            for (std::int64_t i = 0; i < len; ++i) gx[i] += g[0] * 2.0 * inv_ny * (x[i] - t[i]);
        }
    }
};

// Dense grouped convolution with an explicit channel-mixing kernel.
struct MatrixConv final : OpBase {
    kernels::ConvShape shape;
    explicit MatrixConv(kernels::ConvShape s) : shape(std::move(s)) {}
    const char* name() const override { return "matrix_conv"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        std::vector<std::int64_t> out_shape{shape.cout};
        for (auto s : shape.out_spatial()) out_shape.push_back(s);
        Tensor out(out_shape);
        kernels::matrix_conv_forward(shape, in[0]->data(), in[1]->data(), out.data());
        return out;
    }
    void accumulate(const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        Tensor gx(gin[0]->shape());
        kernels::matrix_conv_input_grad(shape, g.data(), in[1]->data(), gx.data());
        *gin[0] += gx;
        Tensor gk(gin[1]->shape());
        kernels::matrix_conv_weight_grad(shape, in[0]->data(), g.data(), gk.data());
        *gin[1] += gk;
    }
};

// Linear scatter of multivector weights into the dense blade-mixing matrix.
struct BladeExpand final : OpBase {
    Signature signature;
    explicit BladeExpand(Signature s) : signature(s) {}
    const char* name() const override { return "blade_expand"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        return kernels::expand_blade_kernel(signature, *in[0]);
    }
    void accumulate(const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        const std::int64_t nb = signature.blade_count();
        const std::int64_t co = in[0]->dim(1), ci = in[0]->dim(2);
        std::int64_t taps = 1;
        for (std::size_t i = 3; i < in[0]->rank(); ++i) taps *= in[0]->dim(i);
        for (const auto& m : kernels::blade_mixing(signature)) {
            for (std::int64_t o = 0; o < co; ++o)
                for (std::int64_t i = 0; i < ci; ++i) {
                    double* gw = gin[0]->data() + ((m.kernel_blade * co + o) * ci + i) * taps;
                    const double* gk =
                        g.data() + ((m.out_blade * co + o) * (nb * ci) + (m.in_blade * ci + i)) * taps;
                    for (std::int64_t t = 0; t < taps; ++t) gw[t] += m.sign * gk[t];
                }
        }
    }
};

// Stacks 16 per-entry tensors [co][ci][taps] (row-major over the 4x4 blade
// matrix) into the dense kernel matrix used by MatrixConv.
struct StackKernel4 final : OpBase {
    std::int64_t co, ci, taps;
    StackKernel4(std::int64_t o, std::int64_t i, std::int64_t t) : co(o), ci(i), taps(t) {}
    const char* name() const override { return "stack_kernel4"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        Tensor K({4 * co, 4 * ci, taps});
        for (int bo = 0; bo < 4; ++bo)
            for (int bi = 0; bi < 4; ++bi) {
                const Tensor& e = *in[bo * 4 + bi];
                for (std::int64_t o = 0; o < co; ++o)
                    for (std::int64_t i = 0; i < ci; ++i)
                        for (std::int64_t t = 0; t < taps; ++t)
                            K[((bo * co + o) * (4 * ci) + (bi * ci + i)) * taps + t] =
                                e[(o * ci + i) * taps + t];
            }
        return K;
    }
    void accumulate(const std::vector<const Tensor*>&, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        for (int bo = 0; bo < 4; ++bo)
            for (int bi = 0; bi < 4; ++bi) {
                Tensor* ge = gin[bo * 4 + bi];
                for (std::int64_t o = 0; o < co; ++o)
                    for (std::int64_t i = 0; i < ci; ++i)
                        for (std::int64_t t = 0; t < taps; ++t)
                            (*ge)[(o * ci + i) * taps + t] +=
                                g[((bo * co + o) * (4 * ci) + (bi * ci + i)) * taps + t];
            }
    }
};

// Spectral layer: blade-wise DFT, complex geometric-product mixing on the
// gathered corner blocks, inverse DFT (real part). Inputs: field planes
// [nb*cin][spatial], weight re, weight im. With nb = 1 and the trivial
// mixing this is a plain (real-input) Fourier layer.
struct SpectralConv final : OpBase {
    std::int64_t nb;
    std::vector<kernels::BladeMix> mix;
    std::vector<std::int64_t> spatial, modes;
    std::int64_t cin, cout;
    SpectralConv(std::int64_t blades, std::vector<kernels::BladeMix> mixing,
                 std::vector<std::int64_t> sp, std::vector<std::int64_t> m, std::int64_t i,
                 std::int64_t o)
        : nb(blades), mix(std::move(mixing)), spatial(std::move(sp)), modes(std::move(m)), cin(i),
          cout(o) {}
    static SpectralConv for_signature(const Signature& sig, std::vector<std::int64_t> sp,
                                      std::vector<std::int64_t> m, std::int64_t i, std::int64_t o) {
        return SpectralConv(sig.blade_count(), kernels::blade_mixing(sig), std::move(sp),
                            std::move(m), i, o);
    }
    static SpectralConv real_valued(std::vector<std::int64_t> sp, std::vector<std::int64_t> m,
                                    std::int64_t i, std::int64_t o) {
        return SpectralConv(1, {kernels::BladeMix{0, 0, 0, 1}}, std::move(sp), std::move(m), i, o);
    }
    const char* name() const override { return "spectral_conv"; }

    std::int64_t npix() const {
        std::int64_t n = 1;
        for (auto s : spatial) n *= s;
        return n;
    }
    std::int64_t nblock() const {
        std::int64_t n = 1;
        for (auto m : modes) n *= 2 * m;
        return n;
    }
    std::int64_t block_mode(std::int64_t blk) const {
        std::vector<std::int64_t> bstr(modes.size(), 1), sstr(spatial.size(), 1);
        for (int d = static_cast<int>(spatial.size()) - 2; d >= 0; --d) {
            bstr[d] = bstr[d + 1] * 2 * modes[d + 1];
            sstr[d] = sstr[d + 1] * spatial[d + 1];
        }
        std::int64_t rem = blk, mode = 0;
        for (std::size_t d = 0; d < modes.size(); ++d) {
            const std::int64_t a = rem / bstr[d];
            rem %= bstr[d];
            mode += detail::corner_mode(a, modes[d], spatial[d]) * sstr[d];
        }
        return mode;
    }

    ComplexGrid forward_modes(const Tensor& x) const {
        std::vector<std::int64_t> gshape{nb * cin};
        for (auto s : spatial) gshape.push_back(s);
        ComplexGrid g(gshape);
        std::copy(x.data(), x.data() + x.numel(), g.re.data());
        return dft(g, false);
    }

    Tensor run(const std::vector<const Tensor*>& in) const override {
        const ComplexGrid fhat = forward_modes(*in[0]);
        const Tensor& wre = *in[1];
        const Tensor& wim = *in[2];
        std::vector<std::int64_t> oshape{nb * cout};
        for (auto s : spatial) oshape.push_back(s);
        ComplexGrid yhat(oshape);
        const std::int64_t np = npix(), blocks = nblock();
        for (std::int64_t blk = 0; blk < blocks; ++blk) {
            const std::int64_t mode = block_mode(blk);
            for (std::int64_t co = 0; co < cout; ++co) {
                std::array<double, 8> are{}, aim{};
                for (std::int64_t ci_ = 0; ci_ < cin; ++ci_) {
                    for (const auto& m : mix) {
                        const std::int64_t fi = (m.in_blade * cin + ci_) * np + mode;
                        const std::int64_t wi = ((m.kernel_blade * cout + co) * cin + ci_) * blocks + blk;
                        are[m.out_blade] += m.sign * (fhat.re[fi] * wre[wi] - fhat.im[fi] * wim[wi]);
                        aim[m.out_blade] += m.sign * (fhat.re[fi] * wim[wi] + fhat.im[fi] * wre[wi]);
                    }
                }
                for (std::int64_t b = 0; b < nb; ++b) {
                    yhat.re[(b * cout + co) * np + mode] = are[b];
                    yhat.im[(b * cout + co) * np + mode] = aim[b];
                }
            }
        }
        const ComplexGrid back = dft(yhat, true);
        Tensor out(oshape);
        std::copy(back.re.data(), back.re.data() + out.numel(), out.data());
        return out;
    }

    void accumulate(const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        const std::int64_t np = npix(), blocks = nblock();
        const double n_total = static_cast<double>(np);
        // Adjoint of Re(idft(.)): forward-signed transform scaled by 1/N,
        // realized as conj(dft(g, inverse)).
        std::vector<std::int64_t> oshape{nb * cout};
        for (auto s : spatial) oshape.push_back(s);
        ComplexGrid gy(oshape);
        std::copy(g.data(), g.data() + g.numel(), gy.re.data());
        gy = dft(gy, true);
        for (std::int64_t i = 0; i < gy.im.numel(); ++i) gy.im[i] = -gy.im[i];

        const ComplexGrid fhat = forward_modes(*in[0]);
        const Tensor& wre = *in[1];
        const Tensor& wim = *in[2];

        std::vector<std::int64_t> ishape{nb * cin};
        for (auto s : spatial) ishape.push_back(s);
        ComplexGrid gf(ishape);
        for (std::int64_t blk = 0; blk < blocks; ++blk) {
            const std::int64_t mode = block_mode(blk);
            for (std::int64_t co = 0; co < cout; ++co) {
                for (std::int64_t ci_ = 0; ci_ < cin; ++ci_) {
                    for (const auto& m : mix) {
                        const std::int64_t fi = (m.in_blade * cin + ci_) * np + mode;
                        const std::int64_t wi = ((m.kernel_blade * cout + co) * cin + ci_) * blocks + blk;
                        const std::int64_t oi = (m.out_blade * cout + co) * np + mode;
                        const double gr = gy.re[oi], gi = gy.im[oi];
                        // Complex-linear maps: adjoint multiplies by the
                        // conjugated partner factor.
                        gf.re[fi] += m.sign * (gr * wre[wi] + gi * wim[wi]);
                        gf.im[fi] += m.sign * (gi * wre[wi] - gr * wim[wi]);
                        (*gin[1])[wi] += m.sign * (gr * fhat.re[fi] + gi * fhat.im[fi]);
                        (*gin[2])[wi] += m.sign * (gi * fhat.re[fi] - gr * fhat.im[fi]);
                    }
                }
            }
        }
        // Adjoint of (dft of real planes): N * Re(idft(gf)).
        const ComplexGrid gx = dft(gf, true);
        for (std::int64_t i = 0; i < gin[0]->numel(); ++i) (*gin[0])[i] += n_total * gx.re[i];
    }
};

// Group whitening (pre-affine): subtract the group mean multivector and
// multiply blade components by cov^{-1/2} with clamped eigenvalues.
struct Whiten final : OpBase {
    std::int64_t nb, channels, groups;
    std::int64_t npix;
    double eps;
    Whiten(std::int64_t b, std::int64_t c, std::int64_t g, std::int64_t n, double e)
        : nb(b), channels(c), groups(g), npix(n), eps(e) {}
    const char* name() const override { return "whiten"; }

    Tensor run(const std::vector<const Tensor*>& in) const override {
        const Tensor& x = *in[0];
        Tensor out(x.shape());
        const std::int64_t gc = channels / groups;
        std::vector<double> w(static_cast<std::size_t>(nb) * nb);
        for (std::int64_t g = 0; g < groups; ++g) {
            std::vector<double> mean(nb, 0.0), cov(static_cast<std::size_t>(nb) * nb, 0.0);
            stats(x, g, mean.data(), cov.data());
            kernels::sym_inv_sqrt(cov.data(), static_cast<int>(nb), eps, w.data());
            for (std::int64_t c = g * gc; c < (g + 1) * gc; ++c) {
                for (std::int64_t i = 0; i < npix; ++i) {
                    for (std::int64_t b1 = 0; b1 < nb; ++b1) {
                        double acc = 0.0;
                        for (std::int64_t b2 = 0; b2 < nb; ++b2)
                            acc += w[b1 * nb + b2] * (x[(b2 * channels + c) * npix + i] - mean[b2]);
                        out[(b1 * channels + c) * npix + i] = acc;
                    }
                }
            }
        }
        return out;
    }

    void stats(const Tensor& x, std::int64_t g, double* mean, double* cov) const {
        const std::int64_t gc = channels / groups;
        const double n = static_cast<double>(gc * npix);
        for (std::int64_t b = 0; b < nb; ++b) {
            double acc = 0.0;
            for (std::int64_t c = g * gc; c < (g + 1) * gc; ++c)
                for (std::int64_t i = 0; i < npix; ++i) acc += x[(b * channels + c) * npix + i];
            mean[b] = acc / n;
        }
        for (std::int64_t b1 = 0; b1 < nb; ++b1)
            for (std::int64_t b2 = b1; b2 < nb; ++b2) {
                double acc = 0.0;
                for (std::int64_t c = g * gc; c < (g + 1) * gc; ++c)
                    for (std::int64_t i = 0; i < npix; ++i)
                        acc += (x[(b1 * channels + c) * npix + i] - mean[b1]) *
                               (x[(b2 * channels + c) * npix + i] - mean[b2]);
                cov[b1 * nb + b2] = cov[b2 * nb + b1] = acc / n;
            }
    }

    void accumulate(const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        const Tensor& x = *in[0];
        const std::int64_t gc = channels / groups;
        const double n = static_cast<double>(gc * npix);
        const int k = static_cast<int>(nb);
        for (std::int64_t grp = 0; grp < groups; ++grp) {
            std::vector<double> mean(nb), cov(static_cast<std::size_t>(nb) * nb);
            stats(x, grp, mean.data(), cov.data());
            std::vector<double> lam(nb), u(static_cast<std::size_t>(nb) * nb);
            kernels::sym_eig(cov.data(), k, lam.data(), u.data());
            std::vector<double> w(static_cast<std::size_t>(nb) * nb, 0.0);
            for (int i = 0; i < k; ++i) {
                const double inv_sqrt = 1.0 / std::sqrt(std::max(lam[i], eps));
                for (int r = 0; r < k; ++r)
                    for (int c = 0; c < k; ++c) w[r * k + c] += u[r * k + i] * inv_sqrt * u[c * k + i];
            }

            // gW = sum over samples of g xc^T ; direct part gxc = W g.
            std::vector<double> gw(static_cast<std::size_t>(nb) * nb, 0.0);
            for (std::int64_t c = grp * gc; c < (grp + 1) * gc; ++c) {
                for (std::int64_t i = 0; i < npix; ++i) {
                    for (std::int64_t b1 = 0; b1 < nb; ++b1) {
                        const double gv = g[(b1 * channels + c) * npix + i];
                        for (std::int64_t b2 = 0; b2 < nb; ++b2)
                            gw[b1 * nb + b2] +=
                                gv * (x[(b2 * channels + c) * npix + i] - mean[b2]);
                    }
                }
            }
            // Adjoint through the matrix function W = U h(L) U^T.
            // gV = U (G o (U^T gW_sym U)) U^T with finite-difference quotients
            // of h; equal eigenvalues fall back to the derivative.
            std::vector<double> gsym(static_cast<std::size_t>(nb) * nb);
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c) gsym[r * k + c] = 0.5 * (gw[r * k + c] + gw[c * k + r]);
            auto h = [&](double l) { return 1.0 / std::sqrt(std::max(l, eps)); };
            auto hprime = [&](double l) {
                return l > eps ? -0.5 * std::pow(l, -1.5) : 0.0;
            };
            std::vector<double> ut_g_u(static_cast<std::size_t>(nb) * nb, 0.0);
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c) {
                    double acc = 0.0;
                    for (int a = 0; a < k; ++a)
                        for (int b = 0; b < k; ++b) acc += u[a * k + r] * gsym[a * k + b] * u[b * k + c];
                    ut_g_u[r * k + c] = acc;
                }
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c) {
                    const double dl = lam[r] - lam[c];
                    const double q = std::abs(dl) > 1e-11 ? (h(lam[r]) - h(lam[c])) / dl
                                                          : hprime(0.5 * (lam[r] + lam[c]));
                    ut_g_u[r * k + c] *= q;
                }
            std::vector<double> gv(static_cast<std::size_t>(nb) * nb, 0.0);
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) {
                    double acc = 0.0;
                    for (int r = 0; r < k; ++r)
                        for (int c = 0; c < k; ++c) acc += u[a * k + r] * ut_g_u[r * k + c] * u[b * k + c];
                    gv[a * k + b] = acc;
                }

            // gxc[p] = W g[p] + (1/n)(gV + gV^T) xc[p]; then mean backward.
            std::vector<double> gv_sym(static_cast<std::size_t>(nb) * nb);
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c) gv_sym[r * k + c] = (gv[r * k + c] + gv[c * k + r]) / n;
            std::vector<double> colsum(nb, 0.0);
            for (std::int64_t c = grp * gc; c < (grp + 1) * gc; ++c) {
                for (std::int64_t i = 0; i < npix; ++i) {
                    for (std::int64_t b1 = 0; b1 < nb; ++b1) {
                        double acc = 0.0;
                        for (std::int64_t b2 = 0; b2 < nb; ++b2) {
                            acc += w[b2 * nb + b1] * g[(b2 * channels + c) * npix + i];
                            acc += gv_sym[b1 * nb + b2] * (x[(b2 * channels + c) * npix + i] - mean[b2]);
                        }
                        (*gin[0])[(b1 * channels + c) * npix + i] += acc;
                        colsum[b1] += acc;
                    }
                }
            }
            for (std::int64_t c = grp * gc; c < (grp + 1) * gc; ++c)
                for (std::int64_t i = 0; i < npix; ++i)
                    for (std::int64_t b1 = 0; b1 < nb; ++b1)
                        (*gin[0])[(b1 * channels + c) * npix + i] -= colsum[b1] / n;
        }
    }
};

// Per-channel blade-matrix multiply: out[b1,c,p] = sum_b2 M[c,b1,b2] x[b2,c,p].
struct BladeMatVec final : OpBase {
    std::int64_t nb, channels, npix;
    BladeMatVec(std::int64_t b, std::int64_t c, std::int64_t n) : nb(b), channels(c), npix(n) {}
    const char* name() const override { return "blade_matvec"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        const Tensor& x = *in[0];
        const Tensor& m = *in[1];
        Tensor out(x.shape());
        for (std::int64_t c = 0; c < channels; ++c)
            for (std::int64_t b1 = 0; b1 < nb; ++b1)
                for (std::int64_t b2 = 0; b2 < nb; ++b2) {
                    const double mv = m[(c * nb + b1) * nb + b2];
                    if (mv == 0.0) continue;
                    const double* xp = x.data() + (b2 * channels + c) * npix;
                    double* op = out.data() + (b1 * channels + c) * npix;
                    for (std::int64_t i = 0; i < npix; ++i) op[i] += mv * xp[i];
                }
        return out;
    }
    void accumulate(const std::vector<const Tensor*>& in, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        const Tensor& x = *in[0];
        const Tensor& m = *in[1];
        for (std::int64_t c = 0; c < channels; ++c)
            for (std::int64_t b1 = 0; b1 < nb; ++b1)
                for (std::int64_t b2 = 0; b2 < nb; ++b2) {
                    const double mv = m[(c * nb + b1) * nb + b2];
                    const double* gp = g.data() + (b1 * channels + c) * npix;
                    const double* xp = x.data() + (b2 * channels + c) * npix;
                    double* gxp = gin[0]->data() + (b2 * channels + c) * npix;
                    double acc = 0.0;
                    for (std::int64_t i = 0; i < npix; ++i) {
                        gxp[i] += mv * gp[i];
                        acc += gp[i] * xp[i];
                    }
                    (*gin[1])[(c * nb + b1) * nb + b2] += acc;
                }
    }
};

// Broadcast add of a per-(blade, channel) shift.
struct AddBias final : OpBase {
    std::int64_t planes, npix;
    AddBias(std::int64_t p, std::int64_t n) : planes(p), npix(n) {}
    const char* name() const override { return "add_bias"; }
    Tensor run(const std::vector<const Tensor*>& in) const override {
        Tensor out = *in[0];
        for (std::int64_t p = 0; p < planes; ++p) {
            const double b = (*in[1])[p];
            double* op = out.data() + p * npix;
            for (std::int64_t i = 0; i < npix; ++i) op[i] += b;
        }
        return out;
    }
    void accumulate(const std::vector<const Tensor*>&, const Tensor&, const Tensor& g,
                    const std::vector<Tensor*>& gin) const override {
        *gin[0] += g;
        for (std::int64_t p = 0; p < planes; ++p) {
            double acc = 0.0;
            const double* gp = g.data() + p * npix;
            for (std::int64_t i = 0; i < npix; ++i) acc += gp[i];
            (*gin[1])[p] += acc;
        }
    }
};

}  // namespace ops

// Graph builders composing tape primitives into the layer forward passes.
namespace build {

inline NodeId add(Tape& t, NodeId a, NodeId b) {
    return t.apply(std::make_shared<ops::Add>(), {a, b});
}
inline NodeId sub(Tape& t, NodeId a, NodeId b) {
    return t.apply(std::make_shared<ops::Sub>(), {a, b});
}
inline NodeId mul(Tape& t, NodeId a, NodeId b) {
    return t.apply(std::make_shared<ops::Mul>(), {a, b});
}
inline NodeId scale(Tape& t, NodeId a, double f, double shift = 0.0) {
    return t.apply(std::make_shared<ops::Scale>(f, shift), {a});
}
inline NodeId recip(Tape& t, NodeId a) { return t.apply(std::make_shared<ops::Recip>(), {a}); }
inline NodeId gelu(Tape& t, NodeId a) { return t.apply(std::make_shared<ops::Gelu>(), {a}); }
inline NodeId sum_all(Tape& t, NodeId a) { return t.apply(std::make_shared<ops::SumAll>(), {a}); }

inline NodeId smse(Tape& t, NodeId pred, Tensor target, std::vector<bool> plane_mask, double inv_ny) {
    return t.apply(std::make_shared<ops::Smse>(std::move(target), std::move(plane_mask), inv_ny),
                   {pred});
}

// Plain real convolution: weights [cout][cin][taps].
inline NodeId real_conv(Tape& t, NodeId x, NodeId w, std::vector<std::int64_t> spatial,
                        std::vector<std::int64_t> ksize, std::int64_t cin, std::int64_t cout,
                        Padding padding = Padding::periodic, std::int64_t stride = 1) {
    kernels::ConvShape shape{std::move(spatial), std::move(ksize), cin, cout, padding, stride};
    return t.apply(std::make_shared<ops::MatrixConv>(shape), {x, w});
}

// Blade-mixing Clifford convolution: weights [nb][cout][cin][taps].
inline NodeId clifford_conv(Tape& t, NodeId x, NodeId w, const Signature& sig,
                            std::vector<std::int64_t> spatial, std::vector<std::int64_t> ksize,
                            std::int64_t cin, std::int64_t cout, Padding padding = Padding::periodic,
                            std::int64_t stride = 1) {
    const std::int64_t nb = sig.blade_count();
    NodeId K = t.apply(std::make_shared<ops::BladeExpand>(sig), {w});
    kernels::ConvShape shape{std::move(spatial), std::move(ksize), nb * cin, nb * cout, padding, stride};
    return t.apply(std::make_shared<ops::MatrixConv>(shape), {x, K});
}

// Rotational Clifford convolution assembled from elementwise primitives so
// the normalization chain is differentiated by composition.
inline NodeId rotational_conv(Tape& t, NodeId x, const std::array<NodeId, 6>& w, double epsilon,
                              std::vector<std::int64_t> spatial, std::vector<std::int64_t> ksize,
                              std::int64_t cin, std::int64_t cout, Padding padding = Padding::periodic,
                              std::int64_t stride = 1) {
    std::array<NodeId, 4> sq;
    for (int i = 0; i < 4; ++i) sq[i] = mul(t, w[i], w[i]);
    const NodeId sumsq = add(t, add(t, sq[0], sq[1]), add(t, sq[2], sq[3]));
    const NodeId inv = recip(t, scale(t, sumsq, 1.0, epsilon));
    auto prod = [&](int i, int j) { return mul(t, w[i], w[j]); };
    const NodeId p01 = prod(0, 1), p02 = prod(0, 2), p03 = prod(0, 3);
    const NodeId p12 = prod(1, 2), p13 = prod(1, 3), p23 = prod(2, 3);
    auto diag = [&](NodeId a, NodeId b) {  // 1 - 2 (a + b) inv
        return scale(t, mul(t, add(t, a, b), inv), -2.0, 1.0);
    };
    auto off = [&](NodeId a, NodeId b, double sgn) {  // 2 (a + sgn b) inv
        return scale(t, mul(t, add(t, a, scale(t, b, sgn)), inv), 2.0);
    };
    const NodeId r00 = diag(sq[2], sq[3]);
    const NodeId r01 = off(p12, p03, -1.0);
    const NodeId r02 = off(p13, p02, 1.0);
    const NodeId r10 = off(p12, p03, 1.0);
    const NodeId r11 = diag(sq[1], sq[3]);
    const NodeId r12 = off(p23, p01, -1.0);
    const NodeId r20 = off(p13, p02, -1.0);
    const NodeId r21 = off(p23, p01, 1.0);
    const NodeId r22 = diag(sq[1], sq[2]);
    const std::array<std::array<NodeId, 3>, 3> r{{{r00, r01, r02}, {r10, r11, r12}, {r20, r21, r22}}};

    std::array<NodeId, 16> entries;
    entries[0] = w[0];
    entries[1] = scale(t, w[1], -1.0);
    entries[2] = scale(t, w[2], -1.0);
    entries[3] = scale(t, w[3], -1.0);
    for (int row = 0; row < 3; ++row) {
        entries[(row + 1) * 4 + 0] = w[5];
        for (int col = 0; col < 3; ++col) entries[(row + 1) * 4 + col + 1] = mul(t, w[4], r[row][col]);
    }
    std::int64_t taps = 1;
    for (auto k : ksize) taps *= k;
    NodeId K = t.apply(std::make_shared<ops::StackKernel4>(cout, cin, taps),
                       std::vector<NodeId>(entries.begin(), entries.end()));
    kernels::ConvShape shape{std::move(spatial), std::move(ksize), 4 * cin, 4 * cout, padding, stride};
    return t.apply(std::make_shared<ops::MatrixConv>(shape), {x, K});
}

inline NodeId spectral_conv(Tape& t, NodeId x, NodeId wre, NodeId wim, const Signature& sig,
                            std::vector<std::int64_t> spatial, std::vector<std::int64_t> modes,
                            std::int64_t cin, std::int64_t cout) {
    return t.apply(std::make_shared<ops::SpectralConv>(ops::SpectralConv::for_signature(
                       sig, std::move(spatial), std::move(modes), cin, cout)),
                   {x, wre, wim});
}

inline NodeId real_spectral_conv(Tape& t, NodeId x, NodeId wre, NodeId wim,
                                 std::vector<std::int64_t> spatial, std::vector<std::int64_t> modes,
                                 std::int64_t cin, std::int64_t cout) {
    return t.apply(std::make_shared<ops::SpectralConv>(ops::SpectralConv::real_valued(
                       std::move(spatial), std::move(modes), cin, cout)),
                   {x, wre, wim});
}

// Group whitening + learnable affine. gamma [C][nb][nb], beta plane-major
// [nb*C].
inline NodeId groupnorm(Tape& t, NodeId x, NodeId gamma, NodeId beta, std::int64_t nb,
                        std::int64_t channels, std::int64_t groups, std::int64_t npix, double eps) {
    NodeId white = t.apply(std::make_shared<ops::Whiten>(nb, channels, groups, npix, eps), {x});
    NodeId scaled = t.apply(std::make_shared<ops::BladeMatVec>(nb, channels, npix), {white, gamma});
    return t.apply(std::make_shared<ops::AddBias>(nb * channels, npix), {scaled, beta});
}

}  // namespace build

// Finite-difference verification harness: central differences at step h on
// deterministically sampled coordinates, compared against the provided
// analytic gradients.
struct FdReport {
    double max_rel_error = 0.0;
    std::int64_t coords_checked = 0;
};

inline FdReport fd_check(const std::function<double(const std::vector<Tensor>&)>& f,
                         std::vector<Tensor> params, const std::vector<Tensor>& analytic,
                         double h, std::uint64_t seed, int ncoords = 100) {
    if (analytic.size() != params.size())
        throw std::invalid_argument("fd_check: analytic gradient count mismatch");
    Rng rng(seed);
    std::int64_t total = 0;
    for (const auto& p : params) total += p.numel();
    FdReport report;
    for (int it = 0; it < ncoords; ++it) {
        std::int64_t flat = rng.uniform_int(total);
        std::size_t pi = 0;
        while (flat >= params[pi].numel()) {
            flat -= params[pi].numel();
            ++pi;
        }
        const double orig = params[pi][flat];
        params[pi][flat] = orig + h;
        const double fp = f(params);
        params[pi][flat] = orig - h;
        const double fm = f(params);
        params[pi][flat] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double an = analytic[pi][flat];
        const double denom = std::max({std::abs(fd), std::abs(an), 1.0});
        report.max_rel_error = std::max(report.max_rel_error, std::abs(fd - an) / denom);
        ++report.coords_checked;
    }
    return report;
}

}  // namespace clifford
