#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "clifford/autodiff.hpp"
#include "clifford/datagen.hpp"
#include "clifford/layers.hpp"

namespace clifford {

// Signals a surrogate whose forward pass produced non-finite values.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Architecture knobs shared by the surrogate families. Clifford families
// count multivector channels; the real baselines count real channels (the
// halving rule: a baseline matching a c-channel Clifford net uses 2c).
struct SurrogateConfig {
    std::string family = "cfno";  // resnet | cresnet | cresnet_rot | fno | cfno
    std::vector<std::int64_t> grid = {32, 32};
    std::int64_t blocks = 4;
    std::int64_t channels = 16;
    std::vector<std::int64_t> modes = {8, 8};
    std::int64_t history = 2;
    Signature signature = kCl20;
    std::vector<int> field_blades = {0, 1, 2};
    std::int64_t conv_kernel = 3;
    std::int64_t groups = 4;

    bool is_clifford() const {
        return family == "cfno" || family == "cresnet" || family == "cresnet_rot";
    }
    bool is_fourier() const { return family == "cfno" || family == "fno"; }
    std::size_t spatial_rank() const { return grid.size(); }
    std::int64_t fields() const { return static_cast<std::int64_t>(field_blades.size()); }

    void validate() const {
        signature.validate();
        if (family != "resnet" && family != "cresnet" && family != "cresnet_rot" && family != "fno" &&
            family != "cfno")
            throw std::invalid_argument("SurrogateConfig: unknown family '" + family + "'");
        if (grid.size() != 2 && grid.size() != 3)
            throw std::invalid_argument("SurrogateConfig: 2 or 3 spatial axes required");
        if (family == "cresnet_rot" && grid.size() != 2)
            throw std::invalid_argument("SurrogateConfig: rotational layers are 2D only");
        if (is_fourier() && modes.size() != grid.size())
            throw std::invalid_argument("SurrogateConfig: one mode cutoff per axis");
        if (channels < 1 || blocks < 1 || history < 1)
            throw std::invalid_argument("SurrogateConfig: channels, blocks, history must be >= 1");
        if (!is_clifford() && channels % 2 != 0)
            throw std::invalid_argument("SurrogateConfig: baseline channels should be even (2x rule)");
        for (int b : field_blades)
            if (b < 0 || b >= signature.blade_count())
                throw std::invalid_argument("SurrogateConfig: field blade out of range");
    }

    // Desk-scale defaults: small enough to train on a workstation CPU.
    static SurrogateConfig desk2d(const std::string& family) {
        SurrogateConfig c;
        c.family = family;
        c.grid = {32, 32};
        c.blocks = 4;
        c.channels = c.is_clifford() ? 16 : 32;
        c.modes = {8, 8};
        c.history = 2;
        c.signature = kCl20;
        c.field_blades = {0, 1, 2};
        return c;
    }
    static SurrogateConfig desk3d(const std::string& family) {
        SurrogateConfig c;
        c.family = family;
        c.grid = {16, 16, 16};
        c.blocks = 2;
        c.channels = c.is_clifford() ? 8 : 16;
        c.modes = {4, 4, 4};
        c.history = 2;
        c.signature = kCl30;
        c.field_blades = {1, 2, 3, 4, 5, 6};
        c.groups = 2;
        return c;
    }

    nlohmann::json to_json() const {
        return {{"family", family},     {"grid", grid},
                {"blocks", blocks},     {"channels", channels},
                {"modes", modes},       {"history", history},
                {"signature", {{"p", signature.p}, {"q", signature.q}}},
                {"field_blades", field_blades},
                {"conv_kernel", conv_kernel},
                {"groups", groups}};
    }
    static SurrogateConfig from_json(const nlohmann::json& j) {
        SurrogateConfig c;
        c.family = j.at("family").get<std::string>();
        c.grid = j.at("grid").get<std::vector<std::int64_t>>();
        c.blocks = j.at("blocks").get<std::int64_t>();
        c.channels = j.at("channels").get<std::int64_t>();
        c.modes = j.at("modes").get<std::vector<std::int64_t>>();
        c.history = j.at("history").get<std::int64_t>();
        c.signature = {j.at("signature").at("p").get<int>(), j.at("signature").at("q").get<int>()};
        c.field_blades = j.at("field_blades").get<std::vector<int>>();
        c.conv_kernel = j.at("conv_kernel").get<std::int64_t>();
        c.groups = j.at("groups").get<std::int64_t>();
        return c;
    }
};

// Named flat parameter bundle plus the graph builder for the family.
class Model {
public:
    SurrogateConfig config;
    std::vector<std::string> names;
    std::vector<Tensor> params;

    static Model create(const SurrogateConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        Model model;
        model.config = cfg;
        const InitMode mode = cfg.spatial_rank() == 3 ? InitMode::scaled3d : InitMode::standard;
        const std::int64_t nb = cfg.signature.blade_count();
        std::uint64_t draw = 0;
        auto next_seed = [&] { return Rng::splitmix64(seed + 0x1000 * (++draw)); };

        auto add = [&](const std::string& name, Tensor t) {
            model.names.push_back(name);
            model.params.push_back(std::move(t));
        };
        auto clifford_kernel = [&](const std::string& name, std::int64_t co, std::int64_t ci,
                                   std::vector<std::int64_t> ks) {
            add(name, init_clifford(cfg.signature, co, ci, std::move(ks), mode, next_seed()).weights);
        };
        auto real_kernel = [&](const std::string& name, std::int64_t co, std::int64_t ci,
                               std::vector<std::int64_t> ks) {
            std::vector<std::int64_t> shape{co, ci};
            std::int64_t taps = 1;
            for (auto k : ks) {
                shape.push_back(k);
                taps *= k;
            }
            Tensor w(shape);
            const double bound = std::sqrt(1.0 / static_cast<double>(ci * taps));
            Rng rng(next_seed());
            for (auto& v : w.vec()) v = rng.uniform(-bound, bound);
            add(name, w);
        };
        auto spectral_pair = [&](const std::string& name, std::int64_t co, std::int64_t ci) {
            const SpectralWeights w = init_spectral(cfg.signature, co, ci, cfg.modes, mode, next_seed());
            add(name + ".re", w.re);
            add(name + ".im", w.im);
        };
        auto real_spectral_pair = [&](const std::string& name, std::int64_t co, std::int64_t ci) {
            std::vector<std::int64_t> shape{co, ci};
            for (auto m : cfg.modes) shape.push_back(2 * m);
            const double bound = std::sqrt(1.0 / static_cast<double>(ci));
            Tensor re(shape), im(shape);
            Rng rng(next_seed());
            for (auto& v : re.vec()) v = rng.uniform(-bound, bound);
            for (auto& v : im.vec()) v = rng.uniform(-bound, bound);
            add(name + ".re", std::move(re));
            add(name + ".im", std::move(im));
        };
        auto norm_pair = [&](const std::string& name, std::int64_t channels, std::int64_t blades) {
            Tensor gamma({channels, blades, blades});
            for (std::int64_t c = 0; c < channels; ++c)
                for (std::int64_t b = 0; b < blades; ++b) gamma.at(c, b, b) = 1.0;
            add(name + ".gamma", std::move(gamma));
            add(name + ".beta", Tensor::zeros({blades * channels}));
        };
        auto rotational_set = [&](const std::string& name, std::int64_t co, std::int64_t ci) {
            const RotationalKernel rk =
                init_rotational(co, ci, {cfg.conv_kernel, cfg.conv_kernel}, next_seed());
            for (int i = 0; i < 6; ++i) add(name + ".w" + std::to_string(i), rk.w[i]);
        };

        const std::vector<std::int64_t> ones(cfg.spatial_rank(), 1);
        const std::vector<std::int64_t> kconv(cfg.spatial_rank(), cfg.conv_kernel);
        const std::int64_t C = cfg.channels;
        if (cfg.family == "cfno") {
            clifford_kernel("embed", C, cfg.history, ones);
            for (std::int64_t b = 0; b < cfg.blocks; ++b) {
                spectral_pair("block" + std::to_string(b) + ".spectral", C, C);
                clifford_kernel("block" + std::to_string(b) + ".conv", C, C, ones);
            }
            clifford_kernel("head1", C, C, ones);
            clifford_kernel("head2", 1, C, ones);
        } else if (cfg.family == "fno") {
            real_kernel("embed", C, cfg.history * cfg.fields(), ones);
            for (std::int64_t b = 0; b < cfg.blocks; ++b) {
                real_spectral_pair("block" + std::to_string(b) + ".spectral", C, C);
                real_kernel("block" + std::to_string(b) + ".conv", C, C, ones);
            }
            real_kernel("head1", C, C, ones);
            real_kernel("head2", cfg.fields(), C, ones);
        } else if (cfg.family == "cresnet" || cfg.family == "cresnet_rot") {
            clifford_kernel("embed", C, cfg.history, ones);
            for (std::int64_t b = 0; b < cfg.blocks; ++b) {
                const std::string base = "block" + std::to_string(b);
                norm_pair(base + ".norm1", C, nb);
                norm_pair(base + ".norm2", C, nb);
                if (cfg.family == "cresnet_rot") {
                    rotational_set(base + ".conv1", C, C);
                    rotational_set(base + ".conv2", C, C);
                } else {
                    clifford_kernel(base + ".conv1", C, C, kconv);
                    clifford_kernel(base + ".conv2", C, C, kconv);
                }
            }
            clifford_kernel("head1", C, C, ones);
            clifford_kernel("head2", 1, C, ones);
        } else {  // resnet
            real_kernel("embed", C, cfg.history * cfg.fields(), ones);
            for (std::int64_t b = 0; b < cfg.blocks; ++b) {
                const std::string base = "block" + std::to_string(b);
                norm_pair(base + ".norm1", C, 1);
                norm_pair(base + ".norm2", C, 1);
                real_kernel(base + ".conv1", C, C, kconv);
                real_kernel(base + ".conv2", C, C, kconv);
            }
            real_kernel("head1", C, C, ones);
            real_kernel("head2", cfg.fields(), C, ones);
        }
        return model;
    }

    std::int64_t parameter_count() const {
        std::int64_t n = 0;
        for (const auto& p : params) n += p.numel();
        return n;
    }

    NodeId param_id(const std::vector<NodeId>& pids, const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return pids[i];
        throw std::logic_error("Model: missing parameter " + name);
    }

    // Builds the forward graph from input planes to prediction planes.
    NodeId forward(Tape& t, const std::vector<NodeId>& pids, NodeId input) const {
        const auto& cfg = config;
        const std::int64_t nb = cfg.signature.blade_count();
        const std::int64_t C = cfg.channels;
        const std::vector<std::int64_t> sp = cfg.grid;
        const std::vector<std::int64_t> ones(cfg.spatial_rank(), 1);
        const std::vector<std::int64_t> kconv(cfg.spatial_rank(), cfg.conv_kernel);
        std::int64_t npix = 1;
        for (auto s : sp) npix *= s;
        auto p = [&](const std::string& n) { return param_id(pids, n); };

        if (cfg.family == "cfno") {
            NodeId x = build::clifford_conv(t, input, p("embed"), cfg.signature, sp, ones, cfg.history, C);
            for (std::int64_t b = 0; b < cfg.blocks; ++b) {
                const std::string base = "block" + std::to_string(b);
                NodeId spec = build::spectral_conv(t, x, p(base + ".spectral.re"),
                                                   p(base + ".spectral.im"), cfg.signature, sp,
                                                   cfg.modes, C, C);
                NodeId conv = build::clifford_conv(t, x, p(base + ".conv"), cfg.signature, sp, ones, C, C);
                x = build::gelu(t, build::add(t, spec, conv));
            }
            x = build::gelu(t, build::clifford_conv(t, x, p("head1"), cfg.signature, sp, ones, C, C));
            return build::clifford_conv(t, x, p("head2"), cfg.signature, sp, ones, C, 1);
        }
        if (cfg.family == "fno") {
            NodeId x = build::real_conv(t, input, p("embed"), sp, ones, cfg.history * cfg.fields(), C);
            for (std::int64_t b = 0; b < cfg.blocks; ++b) {
                const std::string base = "block" + std::to_string(b);
                NodeId spec = build::real_spectral_conv(t, x, p(base + ".spectral.re"),
                                                        p(base + ".spectral.im"), sp, cfg.modes, C, C);
                NodeId conv = build::real_conv(t, x, p(base + ".conv"), sp, ones, C, C);
                x = build::gelu(t, build::add(t, spec, conv));
            }
            x = build::gelu(t, build::real_conv(t, x, p("head1"), sp, ones, C, C));
            return build::real_conv(t, x, p("head2"), sp, ones, C, cfg.fields());
        }
        if (cfg.family == "cresnet" || cfg.family == "cresnet_rot") {
            NodeId x = build::clifford_conv(t, input, p("embed"), cfg.signature, sp, ones, cfg.history, C);
            for (std::int64_t b = 0; b < cfg.blocks; ++b) {
                const std::string base = "block" + std::to_string(b);
                auto conv = [&](const std::string& n, NodeId in) {
                    if (cfg.family == "cresnet_rot") {
                        std::array<NodeId, 6> w;
                        for (int i = 0; i < 6; ++i) w[i] = p(n + ".w" + std::to_string(i));
                        return build::rotational_conv(t, in, w, 1e-12, sp, kconv, C, C);
                    }
                    return build::clifford_conv(t, in, p(n), cfg.signature, sp, kconv, C, C);
                };
                NodeId y = build::groupnorm(t, x, p(base + ".norm1.gamma"), p(base + ".norm1.beta"),
                                            nb, C, cfg.groups, npix, 1e-5);
                y = conv(base + ".conv1", build::gelu(t, y));
                y = build::groupnorm(t, y, p(base + ".norm2.gamma"), p(base + ".norm2.beta"), nb, C,
                                     cfg.groups, npix, 1e-5);
                y = conv(base + ".conv2", build::gelu(t, y));
                x = build::add(t, x, y);
            }
            x = build::gelu(t, build::clifford_conv(t, x, p("head1"), cfg.signature, sp, ones, C, C));
            return build::clifford_conv(t, x, p("head2"), cfg.signature, sp, ones, C, 1);
        }
        // resnet
        NodeId x = build::real_conv(t, input, p("embed"), sp, ones, cfg.history * cfg.fields(), C);
        for (std::int64_t b = 0; b < cfg.blocks; ++b) {
            const std::string base = "block" + std::to_string(b);
            NodeId y = build::groupnorm(t, x, p(base + ".norm1.gamma"), p(base + ".norm1.beta"), 1, C,
                                        cfg.groups, npix, 1e-5);
            y = build::real_conv(t, build::gelu(t, y), p(base + ".conv1"), sp, kconv, C, C);
            y = build::groupnorm(t, y, p(base + ".norm2.gamma"), p(base + ".norm2.beta"), 1, C,
                                 cfg.groups, npix, 1e-5);
            y = build::real_conv(t, build::gelu(t, y), p(base + ".conv2"), sp, kconv, C, C);
            x = build::add(t, x, y);
        }
        x = build::gelu(t, build::real_conv(t, x, p("head1"), sp, ones, C, C));
        return build::real_conv(t, x, p("head2"), sp, ones, C, cfg.fields());
    }

    Tensor predict(const Tensor& input) const {
        Tape t;
        std::vector<NodeId> pids;
        for (const auto& p : params) pids.push_back(t.leaf(p));
        const NodeId in = t.leaf(input);
        return t.value(forward(t, pids, in));
    }
};

// ---------------------------------------------------------------------------
// Dataset plumbing: sample assembly and loss masks.

inline Tensor make_model_input(const TrajectorySet& set, std::int64_t traj, std::int64_t t_last,
                               const SurrogateConfig& cfg) {
    if (set.channels() != 1)
        throw std::invalid_argument("make_model_input: single-channel datasets only");
    const std::int64_t nb = set.blades();
    const std::int64_t npix = set.frame_numel() / (nb * set.channels());
    std::vector<std::int64_t> shape;
    if (cfg.is_clifford())
        shape = {nb * cfg.history};
    else
        shape = {cfg.history * cfg.fields()};
    for (auto s : set.spatial_shape()) shape.push_back(s);
    Tensor input(shape);
    for (std::int64_t j = 0; j < cfg.history; ++j) {
        const std::int64_t t = t_last - cfg.history + 1 + j;
        const MultivectorField f = set.field_at(traj, t);
        if (cfg.is_clifford()) {
            for (std::int64_t b = 0; b < nb; ++b)
                std::copy(f.plane(b, 0), f.plane(b, 0) + npix,
                          input.data() + (b * cfg.history + j) * npix);
        } else {
            for (std::int64_t q = 0; q < cfg.fields(); ++q)
                std::copy(f.plane(cfg.field_blades[q], 0), f.plane(cfg.field_blades[q], 0) + npix,
                          input.data() + (j * cfg.fields() + q) * npix);
        }
    }
    return input;
}

inline Tensor make_model_target(const TrajectorySet& set, std::int64_t traj, std::int64_t t,
                                const SurrogateConfig& cfg) {
    const std::int64_t nb = set.blades();
    const std::int64_t npix = set.frame_numel() / (nb * set.channels());
    const MultivectorField f = set.field_at(traj, t);
    if (cfg.is_clifford()) {
        std::vector<std::int64_t> shape{nb};
        for (auto s : set.spatial_shape()) shape.push_back(s);
        Tensor target(shape);
        for (std::int64_t b = 0; b < nb; ++b)
            std::copy(f.plane(b, 0), f.plane(b, 0) + npix, target.data() + b * npix);
        return target;
    }
    std::vector<std::int64_t> shape{cfg.fields()};
    for (auto s : set.spatial_shape()) shape.push_back(s);
    Tensor target(shape);
    for (std::int64_t q = 0; q < cfg.fields(); ++q)
        std::copy(f.plane(cfg.field_blades[q], 0), f.plane(cfg.field_blades[q], 0) + npix,
                  target.data() + q * npix);
    return target;
}

enum class FieldSubset { all, scalar, vector };

// Plane mask over the prediction tensor selecting which physical fields
// enter the loss; scalar = grade-0 blades, vector = everything grade >= 1.
inline std::vector<bool> loss_plane_mask(const SurrogateConfig& cfg, FieldSubset subset) {
    const BladeTable table = build_blade_table(cfg.signature);
    auto blade_selected = [&](int blade) {
        const int grade = blade_grade(table.blades[static_cast<std::size_t>(blade)]);
        if (subset == FieldSubset::scalar) return grade == 0;
        if (subset == FieldSubset::vector) return grade >= 1;
        return true;
    };
    if (cfg.is_clifford()) {
        std::vector<bool> mask(cfg.signature.blade_count(), false);
        for (int b : cfg.field_blades) mask[static_cast<std::size_t>(b)] = blade_selected(b);
        return mask;
    }
    std::vector<bool> mask(cfg.field_blades.size(), false);
    for (std::size_t q = 0; q < cfg.field_blades.size(); ++q)
        mask[q] = blade_selected(cfg.field_blades[q]);
    return mask;
}

// (1/N_y) sum over masked planes and grid points of squared error.
inline double smse(const Tensor& pred, const Tensor& target, const std::vector<bool>& plane_mask) {
    if (!pred.same_shape(target)) throw std::invalid_argument("smse: shape mismatch");
    const std::int64_t planes = pred.dim(0);
    if (planes != static_cast<std::int64_t>(plane_mask.size()))
        throw std::invalid_argument("smse: mask length mismatch");
    const std::int64_t npix = pred.numel() / planes;
    double s = 0.0;
    for (std::int64_t p = 0; p < planes; ++p) {
        if (!plane_mask[static_cast<std::size_t>(p)]) continue;
        const double* x = pred.data() + p * npix;
        const double* t = target.data() + p * npix;
        for (std::int64_t i = 0; i < npix; ++i) {
            const double d = x[i] - t[i];
            s += d * d;
        }
    }
    return s / static_cast<double>(npix);
}

// ---------------------------------------------------------------------------
// Rollout and metrics.

struct Metrics {
    double smse_onestep = 0.0;
    double smse_scalar = 0.0;
    double smse_vector = 0.0;
    double smse_rollout = 0.0;
    std::int64_t rollout_steps = 0;

    nlohmann::json to_json() const {
        return {{"onestep", smse_onestep},
                {"scalar", smse_scalar},
                {"vector", smse_vector},
                {"rollout", smse_rollout},
                {"rollout_steps", rollout_steps}};
    }
};

namespace detail {

// Feeds a prediction back as the newest history frame. Unmapped blades are
// zeroed: the surrogate exchanges physical fields only.
inline void push_history(std::vector<Tensor>& window, const Tensor& pred, const SurrogateConfig& cfg,
                         std::int64_t npix) {
    Tensor frame = pred;
    if (cfg.is_clifford()) {
        std::vector<bool> mapped(cfg.signature.blade_count(), false);
        for (int b : cfg.field_blades) mapped[static_cast<std::size_t>(b)] = true;
        for (std::int64_t b = 0; b < cfg.signature.blade_count(); ++b)
            if (!mapped[static_cast<std::size_t>(b)])
                std::fill(frame.data() + b * npix, frame.data() + (b + 1) * npix, 0.0);
    }
    window.erase(window.begin());
    window.push_back(std::move(frame));
}

inline Tensor window_to_input(const std::vector<Tensor>& window, const SurrogateConfig& cfg,
                              std::int64_t npix) {
    std::vector<std::int64_t> shape;
    const std::int64_t planes_per_frame = window[0].dim(0);
    if (cfg.is_clifford())
        shape = {planes_per_frame * cfg.history};
    else
        shape = {cfg.history * planes_per_frame};
    for (std::size_t d = 1; d < window[0].rank(); ++d) shape.push_back(window[0].dim(d));
    Tensor input(shape);
    for (std::int64_t j = 0; j < cfg.history; ++j) {
        const Tensor& f = window[static_cast<std::size_t>(j)];
        if (cfg.is_clifford()) {
            for (std::int64_t b = 0; b < planes_per_frame; ++b)
                std::copy(f.data() + b * npix, f.data() + (b + 1) * npix,
                          input.data() + (b * cfg.history + j) * npix);
        } else {
            std::copy(f.data(), f.data() + f.numel(), input.data() + j * f.numel());
        }
    }
    return input;
}

}  // namespace detail

struct RolloutResult {
    std::vector<Tensor> predictions;  // one frame per autoregressive step
    double smse_total = 0.0;          // summed over steps per the rollout loss
};

// Autoregressive rollout from the trajectory's first history window.
inline RolloutResult rollout(const Model& model, const TrajectorySet& set, std::int64_t traj,
                             std::int64_t steps) {
    const SurrogateConfig& cfg = model.config;
    const std::int64_t npix = set.frame_numel() / (set.blades() * set.channels());
    std::vector<Tensor> window;
    for (std::int64_t j = 0; j < cfg.history; ++j)
        window.push_back(make_model_target(set, traj, j, cfg));
    const auto mask = loss_plane_mask(cfg, FieldSubset::all);
    RolloutResult result;
    for (std::int64_t s = 0; s < steps; ++s) {
        const std::int64_t t_target = cfg.history + s;
        if (t_target >= set.steps()) break;
        const Tensor input = detail::window_to_input(window, cfg, npix);
        Tensor pred = model.predict(input);
        for (std::int64_t i = 0; i < pred.numel(); ++i)
            if (!std::isfinite(pred[i]))
                throw DivergenceError("rollout: non-finite activation at step " +
                                      std::to_string(s) + " (diverged surrogate)");
        const Tensor target = make_model_target(set, traj, t_target, cfg);
        result.smse_total += smse(pred, target, mask);
        detail::push_history(window, pred, cfg, npix);
        result.predictions.push_back(std::move(pred));
    }
    return result;
}

// One-step and rollout metrics over a whole trajectory set.
inline Metrics evaluate_model(const Model& model, const TrajectorySet& set,
                              std::int64_t rollout_steps = 5) {
    const SurrogateConfig& cfg = model.config;
    Metrics metrics;
    metrics.rollout_steps = rollout_steps;
    const auto mask_all = loss_plane_mask(cfg, FieldSubset::all);
    const auto mask_scalar = loss_plane_mask(cfg, FieldSubset::scalar);
    const auto mask_vector = loss_plane_mask(cfg, FieldSubset::vector);
    std::int64_t samples = 0;
    for (std::int64_t traj = 0; traj < set.trajectories(); ++traj) {
        for (std::int64_t t = cfg.history - 1; t + 1 < set.steps(); ++t) {
            const Tensor input = make_model_input(set, traj, t, cfg);
            const Tensor pred = model.predict(input);
            const Tensor target = make_model_target(set, traj, t + 1, cfg);
            metrics.smse_onestep += smse(pred, target, mask_all);
            metrics.smse_scalar += smse(pred, target, mask_scalar);
            metrics.smse_vector += smse(pred, target, mask_vector);
            ++samples;
        }
        metrics.smse_rollout += rollout(model, set, traj, rollout_steps).smse_total;
    }
    if (samples > 0) {
        metrics.smse_onestep /= static_cast<double>(samples);
        metrics.smse_scalar /= static_cast<double>(samples);
        metrics.smse_vector /= static_cast<double>(samples);
    }
    metrics.smse_rollout /= static_cast<double>(std::max<std::int64_t>(1, set.trajectories()));
    return metrics;
}

// ---------------------------------------------------------------------------
// Training: Adam with linear warmup + cosine annealing.

struct TrainConfig {
    std::int64_t epochs = 30;
    double lr = 2e-3;
    std::int64_t batch = 4;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double warmup_frac = 0.05;
    double valid_fraction = 0.1;
    std::uint64_t seed = 0;
    int threads = 1;
    double stop_at_reduction = 0.0;  // early stop once train SMSE <= initial / this
    std::int64_t start_epoch = 0;    // resume support: continue the schedule
};

struct CurveRow {
    std::int64_t step = 0;
    double train_smse = 0.0;
    double valid_smse = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<CurveRow> curve;
    double initial_train_smse = 0.0;
    double final_train_smse = 0.0;
    double initial_valid_smse = 0.0;
    double final_valid_smse = 0.0;
    bool diverged = false;
    std::int64_t steps = 0;
};

namespace detail {

struct Sample {
    std::int64_t traj, t_last;
};

inline double mean_onestep_smse(const Model& model, const TrajectorySet& set,
                                const std::vector<Sample>& samples, const std::vector<bool>& mask) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) {
        const Tensor input = make_model_input(set, s.traj, s.t_last, model.config);
        const Tensor pred = model.predict(input);
        const Tensor target = make_model_target(set, s.traj, s.t_last + 1, model.config);
        total += smse(pred, target, mask);
    }
    return total / static_cast<double>(samples.size());
}

}  // namespace detail

inline TrainResult train_model(Model model, const TrajectorySet& data, const TrainConfig& cfg) {
    const SurrogateConfig& mc = model.config;
    if (data.steps() < mc.history + 1)
        throw std::invalid_argument("train: trajectory too short for the history window");

    // Deterministic trajectory-level split.
    std::vector<std::int64_t> traj_order(data.trajectories());
    for (std::int64_t i = 0; i < data.trajectories(); ++i) traj_order[i] = i;
    Rng split_rng(cfg.seed ^ 0x5eedULL);
    for (std::int64_t i = data.trajectories() - 1; i > 0; --i)
        std::swap(traj_order[i], traj_order[split_rng.uniform_int(i + 1)]);
    const std::int64_t n_valid = std::max<std::int64_t>(
        data.trajectories() > 1 ? 1 : 0,
        static_cast<std::int64_t>(cfg.valid_fraction * static_cast<double>(data.trajectories())));
    std::vector<detail::Sample> train_samples, valid_samples;
    for (std::int64_t i = 0; i < data.trajectories(); ++i) {
        auto& bucket = i < data.trajectories() - n_valid ? train_samples : valid_samples;
        for (std::int64_t t = mc.history - 1; t + 1 < data.steps(); ++t)
            bucket.push_back({traj_order[i], t});
    }
    if (train_samples.empty()) throw std::invalid_argument("train: no training samples");

    const auto mask = loss_plane_mask(mc, FieldSubset::all);
    TrainResult result;
    result.initial_train_smse = detail::mean_onestep_smse(model, data, train_samples, mask);
    result.initial_valid_smse = detail::mean_onestep_smse(model, data, valid_samples, mask);

    std::vector<Tensor> m_state, v_state;
    for (const auto& p : model.params) {
        m_state.push_back(Tensor::zeros(p.shape()));
        v_state.push_back(Tensor::zeros(p.shape()));
    }
    const std::int64_t steps_per_epoch =
        (static_cast<std::int64_t>(train_samples.size()) + cfg.batch - 1) / cfg.batch;
    const std::int64_t total_steps = cfg.epochs * steps_per_epoch;
    const std::int64_t warmup = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(cfg.warmup_frac * static_cast<double>(total_steps)));
    std::int64_t global_step = cfg.start_epoch * steps_per_epoch;

    Rng shuffle_rng(cfg.seed ^ 0xabcdULL);
    std::vector<Tensor> best_params = model.params;
    double epoch_train = result.initial_train_smse;

    for (std::int64_t epoch = cfg.start_epoch; epoch < cfg.epochs; ++epoch) {
        std::vector<detail::Sample> order = train_samples;
        for (std::int64_t i = static_cast<std::int64_t>(order.size()) - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

        double loss_sum = 0.0;
        std::int64_t loss_count = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t count = std::min<std::size_t>(cfg.batch, order.size() - start);
            std::vector<std::vector<Tensor>> grads(count);
            std::vector<double> losses(count, 0.0);
            auto run_sample = [&](std::size_t k) {
                const auto& s = order[start + k];
                Tape tape;
                std::vector<NodeId> pids;
                for (const auto& p : model.params) pids.push_back(tape.leaf(p));
                const NodeId input = tape.leaf(make_model_input(data, s.traj, s.t_last, mc));
                const NodeId pred = model.forward(tape, pids, input);
                const Tensor target = make_model_target(data, s.traj, s.t_last + 1, mc);
                const std::int64_t npix = target.numel() / target.dim(0);
                const NodeId loss =
                    build::smse(tape, pred, target, mask, 1.0 / static_cast<double>(npix));
                losses[k] = tape.value(loss)[0];
                grads[k] = tape.grad(loss, pids).grads;
            };
            if (cfg.threads <= 1) {
                for (std::size_t k = 0; k < count; ++k) run_sample(k);
            } else {
                std::vector<std::thread> pool;
                for (int w = 0; w < cfg.threads; ++w)
                    pool.emplace_back([&, w] {
                        for (std::size_t k = static_cast<std::size_t>(w); k < count;
                             k += static_cast<std::size_t>(cfg.threads))
                            run_sample(k);
                    });
                for (auto& th : pool) th.join();
            }

            double batch_loss = 0.0;
            for (std::size_t k = 0; k < count; ++k) batch_loss += losses[k];
            batch_loss /= static_cast<double>(count);
            if (!std::isfinite(batch_loss)) {
                result.diverged = true;
                model.params = best_params;
                result.model = std::move(model);
                result.final_train_smse = epoch_train;
                result.final_valid_smse =
                    detail::mean_onestep_smse(result.model, data, valid_samples, mask);
                result.steps = global_step;
                return result;
            }
            loss_sum += batch_loss;
            ++loss_count;

            ++global_step;
            double lr = cfg.lr;
            const double progress = static_cast<double>(global_step);
            if (progress <= static_cast<double>(warmup)) {
                lr *= progress / static_cast<double>(warmup);
            } else {
                const double frac = (progress - static_cast<double>(warmup)) /
                                    std::max(1.0, static_cast<double>(total_steps - warmup));
                lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(1.0, frac)));
            }
            const double bc1 = 1.0 - std::pow(cfg.beta1, progress);
            const double bc2 = 1.0 - std::pow(cfg.beta2, progress);
            // Fixed reduction order keeps the update deterministic.
            for (std::size_t pi = 0; pi < model.params.size(); ++pi) {
                Tensor g = Tensor::zeros(model.params[pi].shape());
                for (std::size_t k = 0; k < count; ++k) g += grads[k][pi];
                g *= 1.0 / static_cast<double>(count);
                Tensor& p = model.params[pi];
                Tensor& m = m_state[pi];
                Tensor& v = v_state[pi];
                for (std::int64_t i = 0; i < p.numel(); ++i) {
                    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
                }
            }
        }
        epoch_train = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
        const double valid = detail::mean_onestep_smse(model, data, valid_samples, mask);
        result.curve.push_back({global_step, epoch_train, valid});
        best_params = model.params;
        if (cfg.stop_at_reduction > 0.0 &&
            epoch_train <= result.initial_train_smse / cfg.stop_at_reduction)
            break;
    }
    result.final_train_smse = epoch_train;
    result.model = std::move(model);
    result.final_valid_smse =
        detail::mean_onestep_smse(result.model, data, valid_samples, mask);
    result.steps = global_step;
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: flat little-endian f64 arrays + a JSON manifest carrying
// names, shapes, blade order and signature.

inline std::vector<std::string> blade_order_names(const Signature& sig) {
    std::vector<std::string> names;
    for (BladeMask mask : canonical_blades(sig.dim())) {
        if (mask == 0) {
            names.push_back("1");
            continue;
        }
        std::string n;
        for (int i = 0; i < sig.dim(); ++i)
            if (mask & (1u << i)) n += "e" + std::to_string(i + 1);
        names.push_back(n);
    }
    return names;
}

inline void save_checkpoint(const std::string& prefix, const Model& model) {
    nlohmann::json manifest;
    manifest["dtype"] = "f64";
    manifest["config"] = model.config.to_json();
    manifest["blade_order"] = blade_order_names(model.config.signature);
    manifest["signature"] = {{"p", model.config.signature.p}, {"q", model.config.signature.q}};
    nlohmann::json params = nlohmann::json::array();
    for (std::size_t i = 0; i < model.names.size(); ++i)
        params.push_back({{"name", model.names[i]}, {"shape", model.params[i].shape()}});
    manifest["params"] = params;
    std::ofstream mj(prefix + ".json");
    if (!mj) throw std::runtime_error("save_checkpoint: cannot write " + prefix + ".json");
    mj << manifest.dump(2) << "\n";
    std::ofstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("save_checkpoint: cannot write " + prefix + ".bin");
    for (const auto& p : model.params)
        bin.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.numel() * 8));
}

inline Model load_checkpoint(const std::string& prefix) {
    std::ifstream mj(prefix + ".json");
    if (!mj) throw std::runtime_error("load_checkpoint: cannot read " + prefix + ".json");
    nlohmann::json manifest;
    mj >> manifest;
    Model model;
    model.config = SurrogateConfig::from_json(manifest.at("config"));
    std::ifstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("load_checkpoint: cannot read " + prefix + ".bin");
    for (const auto& pj : manifest.at("params")) {
        const auto shape = pj.at("shape").get<std::vector<std::int64_t>>();
        Tensor p(shape);
        bin.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.numel() * 8));
        if (!bin) throw std::runtime_error("load_checkpoint: truncated " + prefix + ".bin");
        model.names.push_back(pj.at("name").get<std::string>());
        model.params.push_back(std::move(p));
    }
    return model;
}

}  // namespace clifford
