#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clifford/fields.hpp"
#include "clifford/rng.hpp"
#include "clifford/tensor.hpp"
#include "clifford/transforms.hpp"

namespace clifford {

// Time-indexed trajectory container, axes [traj, time, blade, channel,
// spatial...]. Payload values are quantized to the payload dtype at
// generation time so serialization round-trips bit-exactly.
struct TrajectorySet {
    Tensor data;
    double dt = 1.0;
    std::vector<double> dx;
    Signature signature;
    FieldPacking packing;
    std::string generator;
    std::string generator_params;  // JSON text
    std::uint64_t seed = 0;
    std::string dtype = "f32";

    std::int64_t trajectories() const { return data.dim(0); }
    std::int64_t steps() const { return data.dim(1); }
    std::int64_t blades() const { return data.dim(2); }
    std::int64_t channels() const { return data.dim(3); }
    std::vector<std::int64_t> spatial_shape() const {
        return {data.shape().begin() + 4, data.shape().end()};
    }
    std::int64_t frame_numel() const {
        std::int64_t n = 1;
        for (std::size_t i = 2; i < data.rank(); ++i) n *= data.dim(i);
        return n;
    }

    MultivectorField field_at(std::int64_t traj, std::int64_t t) const {
        MultivectorField f(signature, channels(), spatial_shape(), dx);
        const double* src = data.data() + (traj * steps() + t) * frame_numel();
        std::copy(src, src + frame_numel(), f.data.data());
        return f;
    }

    void put_field(std::int64_t traj, std::int64_t t, const MultivectorField& f) {
        double* dst = data.data() + (traj * steps() + t) * frame_numel();
        std::copy(f.data.data(), f.data.data() + frame_numel(), dst);
    }

    void quantize_to_dtype() {
        if (dtype == "f32")
            for (auto& v : data.vec()) v = static_cast<double>(static_cast<float>(v));
    }
};

enum class VelocityLaw { constant, solid_rotation };

namespace detail {

// Periodic mixture of Gaussian bumps; min-image distances keep it smooth
// across the wrap.
inline Tensor smooth_blob_mixture(std::int64_t m, Rng& rng, int bumps = 5) {
    Tensor s({m, m});
    std::vector<double> cx(bumps), cy(bumps), amp(bumps), width(bumps);
    for (int b = 0; b < bumps; ++b) {
        cx[b] = rng.uniform(0, static_cast<double>(m));
        cy[b] = rng.uniform(0, static_cast<double>(m));
        amp[b] = rng.uniform(0.4, 1.0);
        width[b] = rng.uniform(0.06, 0.15) * static_cast<double>(m);
    }
    for (std::int64_t y = 0; y < m; ++y)
        for (std::int64_t x = 0; x < m; ++x) {
            double v = 0.0;
            for (int b = 0; b < bumps; ++b) {
                double dy = std::abs(y - cy[b]), dxx = std::abs(x - cx[b]);
                dy = std::min(dy, m - dy);
                dxx = std::min(dxx, m - dxx);
                v += amp[b] * std::exp(-(dy * dy + dxx * dxx) / (2.0 * width[b] * width[b]));
            }
            s[y * m + x] = v;
        }
    return s;
}

// Exact periodic translation by a (possibly fractional) offset via the
// Fourier shift theorem.
inline Tensor spectral_shift_2d(const Tensor& s, double oy, double ox) {
    const std::int64_t m = s.dim(0);
    ComplexGrid g(std::vector<std::int64_t>{1, m, m});
    for (std::int64_t i = 0; i < m * m; ++i) g.re[i] = s[i];
    ComplexGrid hat = dft(g, false);
    for (std::int64_t k1 = 0; k1 < m; ++k1) {
        // Signed frequencies keep the shift real-symmetric.
        const double f1 = k1 <= m / 2 ? static_cast<double>(k1) : static_cast<double>(k1 - m);
        for (std::int64_t k2 = 0; k2 < m; ++k2) {
            const double f2 = k2 <= m / 2 ? static_cast<double>(k2) : static_cast<double>(k2 - m);
            const double ang = -2.0 * std::numbers::pi * (f1 * oy + f2 * ox) / static_cast<double>(m);
            const double c = std::cos(ang), si = std::sin(ang);
            const std::int64_t i = k1 * m + k2;
            const double re = hat.re[i], im = hat.im[i];
            hat.re[i] = re * c - im * si;
            hat.im[i] = re * si + im * c;
        }
    }
    const ComplexGrid back = dft(hat, true);
    Tensor out({m, m});
    for (std::int64_t i = 0; i < m * m; ++i) out[i] = back.re[i];
    return out;
}

inline double bilinear_periodic(const Tensor& s, double y, double x) {
    const std::int64_t m = s.dim(0);
    const auto wrapf = [m](double v) {
        v = std::fmod(v, static_cast<double>(m));
        return v < 0 ? v + m : v;
    };
    y = wrapf(y);
    x = wrapf(x);
    const std::int64_t y0 = static_cast<std::int64_t>(y), x0 = static_cast<std::int64_t>(x);
    const std::int64_t y1 = (y0 + 1) % m, x1 = (x0 + 1) % m;
    const double fy = y - y0, fx = x - x0;
    return s[y0 * m + x0] * (1 - fy) * (1 - fx) + s[y0 * m + x1] * (1 - fy) * fx +
           s[y1 * m + x0] * fy * (1 - fx) + s[y1 * m + x1] * fy * fx;
}

}  // namespace detail

// Scalar blob mixture transported along a constant or solid-rotation
// velocity law; velocity components ride in the vector blades.
inline TrajectorySet gen_advection2d(std::int64_t grid, std::int64_t trajectories, VelocityLaw law,
                                     double dt, std::uint64_t seed, std::int64_t steps = 10,
                                     double velocity_scale = 1.0, const std::string& dtype = "f32") {
    TrajectorySet set;
    set.dtype = dtype;
    set.signature = kCl20;
    set.packing = advection2d_packing();
    set.dt = dt;
    set.dx = {1.0, 1.0};
    set.seed = seed;
    set.generator = "advection2d";
    set.generator_params = nlohmann::json{{"grid", grid},
                                          {"trajectories", trajectories},
                                          {"law", law == VelocityLaw::constant ? "constant" : "solid-rotation"},
                                          {"dt", dt},
                                          {"steps", steps}}
                               .dump();
    set.data = Tensor::zeros({trajectories, steps, 4, 1, grid, grid});

    for (std::int64_t traj = 0; traj < trajectories; ++traj) {
        Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(traj));
        const Tensor s0 = detail::smooth_blob_mixture(grid, rng);
        if (law == VelocityLaw::constant) {
            const double vy = velocity_scale * rng.uniform(-2.0, 2.0);
            const double vx = velocity_scale * rng.uniform(-2.0, 2.0);
            for (std::int64_t t = 0; t < steps; ++t) {
                MultivectorField f(kCl20, 1, {grid, grid});
                const Tensor st = detail::spectral_shift_2d(s0, vy * dt * t, vx * dt * t);
                std::copy(st.data(), st.data() + grid * grid, f.plane(0, 0));
                for (std::int64_t i = 0; i < grid * grid; ++i) {
                    f.plane(1, 0)[i] = vx;
                    f.plane(2, 0)[i] = vy;
                }
                set.put_field(traj, t, f);
            }
        } else {
            const double omega = velocity_scale * rng.uniform(-0.2, 0.2);
            const double c = (grid - 1) / 2.0;
            Tensor st = s0;
            for (std::int64_t t = 0; t < steps; ++t) {
                MultivectorField f(kCl20, 1, {grid, grid});
                std::copy(st.data(), st.data() + grid * grid, f.plane(0, 0));
                for (std::int64_t y = 0; y < grid; ++y)
                    for (std::int64_t x = 0; x < grid; ++x) {
                        f.plane(1, 0)[y * grid + x] = -omega * (y - c);
                        f.plane(2, 0)[y * grid + x] = omega * (x - c);
                    }
                set.put_field(traj, t, f);
                // Semi-Lagrangian backtrace under the rotation field.
                Tensor next({grid, grid});
                const double ca = std::cos(omega * dt), sa = std::sin(omega * dt);
                for (std::int64_t y = 0; y < grid; ++y)
                    for (std::int64_t x = 0; x < grid; ++x) {
                        const double ry = y - c, rx = x - c;
                        const double sy = c + ca * ry - sa * rx;
                        const double sx = c + sa * ry + ca * rx;
                        next[y * grid + x] = detail::bilinear_periodic(st, sy, sx);
                    }
                st = next;
            }
        }
    }
    set.quantize_to_dtype();
    return set;
}

struct MaxwellSourceSpec {
    int count = 6;
    double amplitude_lo = 0.5, amplitude_hi = 1.5;
    double phase_lo = 0.0, phase_hi = 2.0 * std::numbers::pi;
    double wavelength = 8.0;  // grid cells
};

// Periodic Yee-grid FDTD state with unit constants (eps0 = mu0 = c = 1).
struct YeeGrid3d {
    std::int64_t m;
    Tensor ex, ey, ez, hx, hy, hz;

    explicit YeeGrid3d(std::int64_t grid)
        : m(grid), ex({grid, grid, grid}), ey({grid, grid, grid}), ez({grid, grid, grid}),
          hx({grid, grid, grid}), hy({grid, grid, grid}), hz({grid, grid, grid}) {}

    std::int64_t idx(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return (((i + m) % m) * m + ((j + m) % m)) * m + ((k + m) % m);
    }

    void advance_h(double dt) {
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < m; ++j)
                for (std::int64_t k = 0; k < m; ++k) {
                    const std::int64_t c = idx(i, j, k);
                    hx[c] -= dt * ((ez[idx(i, j + 1, k)] - ez[c]) - (ey[idx(i, j, k + 1)] - ey[c]));
                    hy[c] -= dt * ((ex[idx(i, j, k + 1)] - ex[c]) - (ez[idx(i + 1, j, k)] - ez[c]));
                    hz[c] -= dt * ((ey[idx(i + 1, j, k)] - ey[c]) - (ex[idx(i, j + 1, k)] - ex[c]));
                }
    }

    void advance_e(double dt) {
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < m; ++j)
                for (std::int64_t k = 0; k < m; ++k) {
                    const std::int64_t c = idx(i, j, k);
                    ex[c] += dt * ((hz[c] - hz[idx(i, j - 1, k)]) - (hy[c] - hy[idx(i, j, k - 1)]));
                    ey[c] += dt * ((hx[c] - hx[idx(i, j, k - 1)]) - (hz[c] - hz[idx(i - 1, j, k)]));
                    ez[c] += dt * ((hy[c] - hy[idx(i - 1, j, k)]) - (hx[c] - hx[idx(i, j - 1, k)]));
                }
    }

    // One leapfrog step: H advanced from curl E, then E from curl H.
    void step(double dt) {
        advance_h(dt);
        advance_e(dt);
    }

    // Advances one step and returns the discrete leapfrog energy
    // sum E_n^2 + H_{n-1/2} H_{n+1/2}, the invariant of the scheme
    // (time-centered H product).
    double step_energy(double dt) {
        const Tensor hx_prev = hx, hy_prev = hy, hz_prev = hz;
        advance_h(dt);
        double u = 0.0;
        for (std::int64_t i = 0; i < m * m * m; ++i)
            u += ex[i] * ex[i] + ey[i] * ey[i] + ez[i] * ez[i] + hx_prev[i] * hx[i] +
                 hy_prev[i] * hy[i] + hz_prev[i] * hz[i];
        advance_e(dt);
        return u;
    }

    double energy() const {
        double e = 0.0;
        for (std::int64_t i = 0; i < m * m * m; ++i)
            e += ex[i] * ex[i] + ey[i] * ey[i] + ez[i] * ez[i] + hx[i] * hx[i] + hy[i] * hy[i] +
                 hz[i] * hz[i];
        return e;
    }
};

inline double maxwell_courant_bound() { return 1.0 / std::sqrt(3.0); }

// Leapfrog FDTD with randomized boundary plane sources; D rides in the
// vector blades, H in the bivector blades per F = E + B i3.
inline TrajectorySet gen_maxwell3d(std::int64_t grid, std::int64_t trajectories,
                                   const MaxwellSourceSpec& sources, double dt, std::uint64_t seed,
                                   std::int64_t steps = 8, std::int64_t substeps = 4,
                                   const std::string& dtype = "f32") {
    if (dt > maxwell_courant_bound())
        throw std::invalid_argument("gen_maxwell3d: dt violates the Courant bound dx/(c sqrt(3))");
    TrajectorySet set;
    set.dtype = dtype;
    set.signature = kCl30;
    set.packing = maxwell3d_packing();
    set.dt = dt * static_cast<double>(substeps);
    set.dx = {1.0, 1.0, 1.0};
    set.seed = seed;
    set.generator = "maxwell3d";
    set.generator_params = nlohmann::json{{"grid", grid},
                                          {"trajectories", trajectories},
                                          {"sources", sources.count},
                                          {"dt", dt},
                                          {"steps", steps},
                                          {"substeps", substeps},
                                          {"wavelength", sources.wavelength}}
                               .dump();
    set.data = Tensor::zeros({trajectories, steps, 8, 1, grid, grid, grid});

    for (std::int64_t traj = 0; traj < trajectories; ++traj) {
        Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(traj));
        YeeGrid3d yee(grid);
        struct Source {
            int plane_axis;      // 0,1,2 which axis is fixed
            std::int64_t plane;  // fixed index (0 or m-1)
            int component;       // which E component is driven (!= axis)
            double amp, phase, omega;
        };
        std::vector<Source> srcs;
        for (int s = 0; s < sources.count; ++s) {
            Source src;
            src.plane_axis = static_cast<int>(rng.uniform_int(3));
            src.plane = rng.uniform_int(2) == 0 ? 0 : grid - 1;
            src.component = (src.plane_axis + 1 + static_cast<int>(rng.uniform_int(2))) % 3;
            src.amp = rng.uniform(sources.amplitude_lo, sources.amplitude_hi);
            src.phase = rng.uniform(sources.phase_lo, sources.phase_hi);
            src.omega = 2.0 * std::numbers::pi / sources.wavelength;  // c = 1
            srcs.push_back(src);
        }
        std::int64_t tick = 0;
        for (std::int64_t t = 0; t < steps; ++t) {
            // Record frame, then advance substeps.
            MultivectorField f(kCl30, 1, {grid, grid, grid});
            for (std::int64_t i = 0; i < grid * grid * grid; ++i) {
                f.plane(1, 0)[i] = yee.ex[i];
                f.plane(2, 0)[i] = yee.ey[i];
                f.plane(3, 0)[i] = yee.ez[i];
                f.plane(6, 0)[i] = yee.hx[i];   // B_x e1 i3 = B_x e2e3
                f.plane(5, 0)[i] = -yee.hy[i];  // B_y e2 i3 = -B_y e1e3
                f.plane(4, 0)[i] = yee.hz[i];   // B_z e3 i3 = B_z e1e2
            }
            set.put_field(traj, t, f);
            for (std::int64_t s = 0; s < substeps; ++s) {
                const double time = static_cast<double>(tick) * dt;
                for (const auto& src : srcs) {
                    Tensor& e = src.component == 0 ? yee.ex : src.component == 1 ? yee.ey : yee.ez;
                    const double drive = src.amp * std::sin(src.omega * time + src.phase) * dt;
                    for (std::int64_t a = 0; a < grid; ++a)
                        for (std::int64_t b = 0; b < grid; ++b) {
                            std::int64_t i = src.plane_axis == 0 ? src.plane : a;
                            std::int64_t j = src.plane_axis == 1 ? src.plane
                                                                 : (src.plane_axis == 0 ? a : b);
                            std::int64_t k = src.plane_axis == 2 ? src.plane : b;
                            e[yee.idx(i, j, k)] += drive;
                        }
                }
                yee.step(dt);
                ++tick;
            }
        }
    }
    set.quantize_to_dtype();
    return set;
}

// CLF1 container errors, one kind per failure mode.
struct ClfError : std::runtime_error {
    enum class Kind { bad_magic, truncated, mismatch, io };
    Kind kind;
    ClfError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

namespace detail {

inline nlohmann::json clf_header_json(const TrajectorySet& set) {
    nlohmann::json packing = nlohmann::json::array();
    for (const auto& slot : set.packing.slots)
        packing.push_back({{"name", slot.name}, {"blade", slot.blade}, {"sign", slot.sign}});
    return nlohmann::json{{"shape", set.data.shape()},
                          {"dtype", set.dtype},
                          {"dt", set.dt},
                          {"dx", set.dx},
                          {"signature", {{"p", set.signature.p}, {"q", set.signature.q}}},
                          {"packing", packing},
                          {"provenance",
                           {{"generator", set.generator},
                            {"seed", set.seed},
                            {"params", set.generator_params}}}};
}

inline TrajectorySet clf_from_header(const nlohmann::json& h) {
    TrajectorySet set;
    set.dtype = h.at("dtype").get<std::string>();
    if (set.dtype != "f32" && set.dtype != "f64")
        throw ClfError(ClfError::Kind::mismatch, "clf: unsupported dtype " + set.dtype);
    set.dt = h.at("dt").get<double>();
    set.dx = h.at("dx").get<std::vector<double>>();
    set.signature = {h.at("signature").at("p").get<int>(), h.at("signature").at("q").get<int>()};
    for (const auto& slot : h.at("packing"))
        set.packing.slots.push_back({slot.at("name").get<std::string>(), slot.at("blade").get<int>(),
                                     slot.at("sign").get<double>()});
    set.generator = h.at("provenance").at("generator").get<std::string>();
    set.seed = h.at("provenance").at("seed").get<std::uint64_t>();
    set.generator_params = h.at("provenance").at("params").get<std::string>();
    const auto shape = h.at("shape").get<std::vector<std::int64_t>>();
    if (shape.size() < 6)
        throw ClfError(ClfError::Kind::mismatch, "clf: header shape has too few axes");
    set.data = Tensor::zeros(shape);
    return set;
}

}  // namespace detail

inline void write_clf(const std::string& path, const TrajectorySet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ClfError(ClfError::Kind::io, "clf: cannot open for writing: " + path);
    const std::string header = detail::clf_header_json(set).dump();
    out.write("CLF1", 4);
    const std::uint32_t len = static_cast<std::uint32_t>(header.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    if (set.dtype == "f64") {
        out.write(reinterpret_cast<const char*>(set.data.data()),
                  static_cast<std::streamsize>(set.data.numel() * 8));
    } else {
        std::vector<float> payload(static_cast<std::size_t>(set.data.numel()));
        for (std::int64_t i = 0; i < set.data.numel(); ++i)
            payload[static_cast<std::size_t>(i)] = static_cast<float>(set.data[i]);
        out.write(reinterpret_cast<const char*>(payload.data()),
                  static_cast<std::streamsize>(payload.size() * 4));
    }
    if (!out) throw ClfError(ClfError::Kind::io, "clf: write failed: " + path);
}

// Header-only inspection: shapes and metadata without loading the payload.
inline TrajectorySet read_clf_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ClfError(ClfError::Kind::io, "clf: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "CLF1", 4) != 0)
        throw ClfError(ClfError::Kind::bad_magic, "clf: bad magic in " + path);
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    if (!in) throw ClfError(ClfError::Kind::truncated, "clf: truncated header length");
    std::string header(len, '\0');
    in.read(header.data(), len);
    if (!in) throw ClfError(ClfError::Kind::truncated, "clf: truncated header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
        return detail::clf_from_header(h);
    } catch (const nlohmann::json::exception& e) {
        throw ClfError(ClfError::Kind::mismatch, std::string("clf: malformed header: ") + e.what());
    }
}

inline TrajectorySet read_clf(const std::string& path) {
    TrajectorySet set = read_clf_header(path);
    std::ifstream in(path, std::ios::binary);
    in.seekg(0, std::ios::end);
    const std::int64_t file_size = static_cast<std::int64_t>(in.tellg());
    in.seekg(4);
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    const std::int64_t payload_off = 8 + len;
    const std::int64_t elem = set.dtype == "f64" ? 8 : 4;
    if (file_size - payload_off != set.data.numel() * elem)
        throw ClfError(ClfError::Kind::truncated,
                       "clf: payload size does not match header shape in " + path);
    in.seekg(payload_off);
    if (set.dtype == "f64") {
        in.read(reinterpret_cast<char*>(set.data.data()),
                static_cast<std::streamsize>(set.data.numel() * 8));
    } else {
        std::vector<float> payload(static_cast<std::size_t>(set.data.numel()));
        in.read(reinterpret_cast<char*>(payload.data()),
                static_cast<std::streamsize>(payload.size() * 4));
        for (std::int64_t i = 0; i < set.data.numel(); ++i)
            set.data[i] = static_cast<double>(payload[static_cast<std::size_t>(i)]);
    }
    if (!in) throw ClfError(ClfError::Kind::truncated, "clf: truncated payload in " + path);
    return set;
}

// FNV-1a content hash used in run manifests.
inline std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ClfError(ClfError::Kind::io, "hash: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

}  // namespace clifford
