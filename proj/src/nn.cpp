#include "hems/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

namespace hems {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Identity: return z;
    }
    return z;
}

double activate_deriv(Activation a, double z, double y) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Sigmoid: return y * (1.0 - y);
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void glorot_init(std::vector<double>& params, std::size_t offset, int fan_out,
                 int fan_in, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int i = 0; i < fan_out * fan_in; ++i)
        params[offset + static_cast<std::size_t>(i)] = dist(rng);
}

// y += W x, W stored row-major (rows x cols).
void matvec_add(const double* w, int rows, int cols, const double* x, double* y) {
    for (int i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* row = w + static_cast<std::ptrdiff_t>(i) * cols;
        for (int j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] += acc;
    }
}

// y += W^T d.
void matvec_t_add(const double* w, int rows, int cols, const double* d, double* y) {
    for (int i = 0; i < rows; ++i) {
        const double* row = w + static_cast<std::ptrdiff_t>(i) * cols;
        const double di = d[i];
        if (di == 0.0) continue;
        for (int j = 0; j < cols; ++j) y[j] += row[j] * di;
    }
}

// G += d x^T.
void outer_add(double* g, int rows, int cols, const double* d, const double* x) {
    for (int i = 0; i < rows; ++i) {
        double* row = g + static_cast<std::ptrdiff_t>(i) * cols;
        const double di = d[i];
        if (di == 0.0) continue;
        for (int j = 0; j < cols; ++j) row[j] += di * x[j];
    }
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "identity") return Activation::Identity;
    throw DataError("unknown activation: " + name);
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(int input, std::vector<LayerSpec> layers, std::uint64_t seed)
    : input_(input), layers_(std::move(layers)) {
    if (input_ < 0) throw DomainError("negative input size");
    std::size_t count = 0;
    int in = input_;
    for (const auto& l : layers_) {
        count += static_cast<std::size_t>(l.width) * in + l.width;
        in = l.width;
    }
    params_.assign(count, 0.0);
    std::mt19937_64 rng(seed);
    std::size_t off = 0;
    in = input_;
    for (const auto& l : layers_) {
        glorot_init(params_, off, l.width, in, rng);
        off += static_cast<std::size_t>(l.width) * in + l.width;  // biases stay zero
        in = l.width;
    }
}

int Mlp::output_size() const {
    return layers_.empty() ? input_ : layers_.back().width;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_) throw DomainError("mlp input size mismatch");
    std::vector<double> a(x.begin(), x.end());
    std::size_t off = 0;
    int in = input_;
    for (const auto& l : layers_) {
        std::vector<double> z(static_cast<std::size_t>(l.width));
        const double* w = params_.data() + off;
        const double* b = w + static_cast<std::ptrdiff_t>(l.width) * in;
        std::copy(b, b + l.width, z.begin());
        matvec_add(w, l.width, in, a.data(), z.data());
        for (int i = 0; i < l.width; ++i)
            z[static_cast<std::size_t>(i)] = activate(l.activation, z[static_cast<std::size_t>(i)]);
        a = std::move(z);
        off += static_cast<std::size_t>(l.width) * in + l.width;
        in = l.width;
    }
    return a;
}

void Mlp::accumulate_gradient(std::span<const double> x, std::span<const double> dy,
                              std::span<double> grad, std::vector<double>* dx) const {
    if (grad.size() != params_.size()) throw DomainError("gradient buffer size mismatch");
    // Forward pass caching pre-activations and activations.
    std::vector<std::vector<double>> zs, as;
    as.emplace_back(x.begin(), x.end());
    std::size_t off = 0;
    int in = input_;
    std::vector<std::size_t> offsets;
    for (const auto& l : layers_) {
        offsets.push_back(off);
        std::vector<double> z(static_cast<std::size_t>(l.width));
        const double* w = params_.data() + off;
        const double* b = w + static_cast<std::ptrdiff_t>(l.width) * in;
        std::copy(b, b + l.width, z.begin());
        matvec_add(w, l.width, in, as.back().data(), z.data());
        std::vector<double> a(static_cast<std::size_t>(l.width));
        for (int i = 0; i < l.width; ++i)
            a[static_cast<std::size_t>(i)] = activate(l.activation, z[static_cast<std::size_t>(i)]);
        zs.push_back(std::move(z));
        as.push_back(std::move(a));
        off += static_cast<std::size_t>(l.width) * in + l.width;
        in = l.width;
    }

    std::vector<double> delta(dy.begin(), dy.end());
    for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
        const auto& l = layers_[static_cast<std::size_t>(li)];
        const int lin = li == 0 ? input_ : layers_[static_cast<std::size_t>(li - 1)].width;
        const auto& z = zs[static_cast<std::size_t>(li)];
        const auto& a = as[static_cast<std::size_t>(li + 1)];
        for (int i = 0; i < l.width; ++i)
            delta[static_cast<std::size_t>(i)] *=
                activate_deriv(l.activation, z[static_cast<std::size_t>(i)],
                               a[static_cast<std::size_t>(i)]);
        double* gw = grad.data() + offsets[static_cast<std::size_t>(li)];
        double* gb = gw + static_cast<std::ptrdiff_t>(l.width) * lin;
        outer_add(gw, l.width, lin, delta.data(), as[static_cast<std::size_t>(li)].data());
        for (int i = 0; i < l.width; ++i) gb[i] += delta[static_cast<std::size_t>(i)];
        std::vector<double> prev(static_cast<std::size_t>(lin), 0.0);
        matvec_t_add(params_.data() + offsets[static_cast<std::size_t>(li)], l.width, lin,
                     delta.data(), prev.data());
        delta = std::move(prev);
    }
    if (dx) *dx = std::move(delta);
}

// ---------------------------------------------------------------------------
// GruStack

namespace {

// Per-layer parameter block sizes for a GRU layer with input i and hidden h:
// Wz, Wr, Wn (h x i), Uz, Ur, Un (h x h), bz, br, bn (h).
std::size_t gru_layer_size(int i, int h) {
    return 3u * (static_cast<std::size_t>(h) * i + static_cast<std::size_t>(h) * h + h);
}

struct GruLayerView {
    const double *wz, *uz, *bz, *wr, *ur, *br, *wn, *un, *bn;
    int in, hidden;
};

GruLayerView layer_view(const double* base, int in, int h) {
    GruLayerView v{};
    v.in = in;
    v.hidden = h;
    const std::size_t wi = static_cast<std::size_t>(h) * in;
    const std::size_t uh = static_cast<std::size_t>(h) * h;
    const double* p = base;
    v.wz = p; p += wi; v.uz = p; p += uh; v.bz = p; p += h;
    v.wr = p; p += wi; v.ur = p; p += uh; v.br = p; p += h;
    v.wn = p; p += wi; v.un = p; p += uh; v.bn = p; p += h;
    return v;
}

struct GruGradView {
    double *wz, *uz, *bz, *wr, *ur, *br, *wn, *un, *bn;
};

GruGradView grad_view(double* base, int in, int h) {
    GruGradView v{};
    const std::size_t wi = static_cast<std::size_t>(h) * in;
    const std::size_t uh = static_cast<std::size_t>(h) * h;
    double* p = base;
    v.wz = p; p += wi; v.uz = p; p += uh; v.bz = p; p += h;
    v.wr = p; p += wi; v.ur = p; p += uh; v.br = p; p += h;
    v.wn = p; p += wi; v.un = p; p += uh; v.bn = p; p += h;
    return v;
}

}  // namespace

struct GruStack::Trace {
    // [layer][step] hidden state after the step, plus gate values.
    std::vector<std::vector<std::vector<double>>> h, z, r, n, rh;
};

GruStack::GruStack(int features, int window, int num_layers, int hidden, int out,
                   std::uint64_t seed)
    : features_(features), window_(window), layers_(num_layers), hidden_(hidden),
      out_(out) {
    if (window_ < 1) throw DomainError("gru window must be >= 1");
    if (layers_ < 1 || hidden_ < 1) throw DomainError("gru needs layers and hidden >= 1");
    std::size_t count = 0;
    for (int l = 0; l < layers_; ++l)
        count += gru_layer_size(l == 0 ? features_ : hidden_, hidden_);
    count += static_cast<std::size_t>(out_) * hidden_ + out_;  // readout
    params_.assign(count, 0.0);

    std::mt19937_64 rng(seed);
    std::size_t off = 0;
    for (int l = 0; l < layers_; ++l) {
        const int in = l == 0 ? features_ : hidden_;
        const std::size_t wi = static_cast<std::size_t>(hidden_) * in;
        const std::size_t uh = static_cast<std::size_t>(hidden_) * hidden_;
        for (int gate = 0; gate < 3; ++gate) {
            glorot_init(params_, off, hidden_, in, rng);
            off += wi;
            glorot_init(params_, off, hidden_, hidden_, rng);
            off += uh;
            off += static_cast<std::size_t>(hidden_);  // bias zero
        }
    }
    glorot_init(params_, off, out_, hidden_, rng);
}

void GruStack::run(std::span<const double> x, Trace* trace,
                   std::vector<double>& out) const {
    if (static_cast<int>(x.size()) != features_ * window_)
        throw DomainError("gru input must be window*features long");
    const int H = hidden_;
    std::vector<std::vector<double>> h(static_cast<std::size_t>(layers_),
                                       std::vector<double>(static_cast<std::size_t>(H), 0.0));
    if (trace) {
        trace->h.assign(layers_, {});
        trace->z.assign(layers_, {});
        trace->r.assign(layers_, {});
        trace->n.assign(layers_, {});
        trace->rh.assign(layers_, {});
    }

    std::vector<double> input;
    for (int t = 0; t < window_; ++t) {
        input.assign(x.begin() + static_cast<std::ptrdiff_t>(t) * features_,
                     x.begin() + static_cast<std::ptrdiff_t>(t + 1) * features_);
        std::size_t off = 0;
        for (int l = 0; l < layers_; ++l) {
            const int in = l == 0 ? features_ : H;
            const GruLayerView v = layer_view(params_.data() + off, in, H);
            off += gru_layer_size(in, H);
            auto& hp = h[static_cast<std::size_t>(l)];

            std::vector<double> z(static_cast<std::size_t>(H)), r(static_cast<std::size_t>(H)),
                n(static_cast<std::size_t>(H)), rh(static_cast<std::size_t>(H));
            std::copy(v.bz, v.bz + H, z.begin());
            matvec_add(v.wz, H, in, input.data(), z.data());
            matvec_add(v.uz, H, H, hp.data(), z.data());
            std::copy(v.br, v.br + H, r.begin());
            matvec_add(v.wr, H, in, input.data(), r.data());
            matvec_add(v.ur, H, H, hp.data(), r.data());
            for (int i = 0; i < H; ++i) {
                z[static_cast<std::size_t>(i)] = sigmoid(z[static_cast<std::size_t>(i)]);
                r[static_cast<std::size_t>(i)] = sigmoid(r[static_cast<std::size_t>(i)]);
                rh[static_cast<std::size_t>(i)] =
                    r[static_cast<std::size_t>(i)] * hp[static_cast<std::size_t>(i)];
            }
            std::copy(v.bn, v.bn + H, n.begin());
            matvec_add(v.wn, H, in, input.data(), n.data());
            matvec_add(v.un, H, H, rh.data(), n.data());
            std::vector<double> hn(static_cast<std::size_t>(H));
            for (int i = 0; i < H; ++i) {
                n[static_cast<std::size_t>(i)] = std::tanh(n[static_cast<std::size_t>(i)]);
                hn[static_cast<std::size_t>(i)] =
                    (1.0 - z[static_cast<std::size_t>(i)]) * n[static_cast<std::size_t>(i)] +
                    z[static_cast<std::size_t>(i)] * hp[static_cast<std::size_t>(i)];
            }
            if (trace) {
                trace->z[static_cast<std::size_t>(l)].push_back(z);
                trace->r[static_cast<std::size_t>(l)].push_back(r);
                trace->n[static_cast<std::size_t>(l)].push_back(n);
                trace->rh[static_cast<std::size_t>(l)].push_back(rh);
                trace->h[static_cast<std::size_t>(l)].push_back(hn);
            }
            hp = std::move(hn);
            input = hp;
        }
    }

    // Readout from the top layer's final hidden state.
    std::size_t off = 0;
    for (int l = 0; l < layers_; ++l)
        off += gru_layer_size(l == 0 ? features_ : H, H);
    const double* wo = params_.data() + off;
    const double* bo = wo + static_cast<std::ptrdiff_t>(out_) * H;
    out.assign(bo, bo + out_);
    matvec_add(wo, out_, H, h[static_cast<std::size_t>(layers_ - 1)].data(), out.data());
}

std::vector<double> GruStack::forward(std::span<const double> x) const {
    std::vector<double> out;
    run(x, nullptr, out);
    return out;
}

void GruStack::accumulate_gradient(std::span<const double> x, std::span<const double> dy,
                                   std::span<double> grad, std::vector<double>* dx) const {
    if (grad.size() != params_.size()) throw DomainError("gradient buffer size mismatch");
    Trace trace;
    std::vector<double> out;
    run(x, &trace, out);
    const int H = hidden_;

    std::vector<std::size_t> layer_off(static_cast<std::size_t>(layers_));
    std::size_t off = 0;
    for (int l = 0; l < layers_; ++l) {
        layer_off[static_cast<std::size_t>(l)] = off;
        off += gru_layer_size(l == 0 ? features_ : H, H);
    }
    const std::size_t readout_off = off;

    auto h_prev = [&](int l, int t) -> const std::vector<double>& {
        static const std::vector<double> zero;
        if (t == 0) {
            static thread_local std::vector<double> z0;
            z0.assign(static_cast<std::size_t>(H), 0.0);
            return z0;
        }
        return trace.h[static_cast<std::size_t>(l)][static_cast<std::size_t>(t - 1)];
    };
    auto layer_input = [&](int l, int t) {
        if (l == 0)
            return std::vector<double>(
                x.begin() + static_cast<std::ptrdiff_t>(t) * features_,
                x.begin() + static_cast<std::ptrdiff_t>(t + 1) * features_);
        return trace.h[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(t)];
    };

    // Readout gradient feeds the top layer at the final step.
    const double* wo = params_.data() + readout_off;
    double* gwo = grad.data() + readout_off;
    double* gbo = gwo + static_cast<std::ptrdiff_t>(out_) * H;
    const auto& h_top = trace.h[static_cast<std::size_t>(layers_ - 1)].back();
    outer_add(gwo, out_, H, dy.data(), h_top.data());
    for (int i = 0; i < out_; ++i) gbo[i] += dy[static_cast<std::size_t>(i)];

    std::vector<std::vector<double>> dh_carry(
        static_cast<std::size_t>(layers_),
        std::vector<double>(static_cast<std::size_t>(H), 0.0));
    matvec_t_add(wo, out_, H, dy.data(),
                 dh_carry[static_cast<std::size_t>(layers_ - 1)].data());

    if (dx) dx->assign(x.size(), 0.0);

    for (int t = window_ - 1; t >= 0; --t) {
        std::vector<double> dx_lower;  // gradient flowing to the layer below at step t
        for (int l = layers_ - 1; l >= 0; --l) {
            const auto ls = static_cast<std::size_t>(l);
            const auto ts = static_cast<std::size_t>(t);
            const int in = l == 0 ? features_ : H;
            const GruLayerView v = layer_view(params_.data() + layer_off[ls], in, H);
            const GruGradView g = grad_view(grad.data() + layer_off[ls], in, H);

            std::vector<double> dh = dh_carry[ls];
            if (l < layers_ - 1 && !dx_lower.empty())
                for (int i = 0; i < H; ++i) dh[static_cast<std::size_t>(i)] += dx_lower[static_cast<std::size_t>(i)];

            const auto& z = trace.z[ls][ts];
            const auto& r = trace.r[ls][ts];
            const auto& n = trace.n[ls][ts];
            const auto& rh = trace.rh[ls][ts];
            const auto& hp = h_prev(l, t);
            const std::vector<double> xin = layer_input(l, t);

            std::vector<double> dz_pre(static_cast<std::size_t>(H)),
                dn_pre(static_cast<std::size_t>(H)), drh(static_cast<std::size_t>(H), 0.0),
                dr_pre(static_cast<std::size_t>(H)), dhp(static_cast<std::size_t>(H));
            for (int i = 0; i < H; ++i) {
                const auto is = static_cast<std::size_t>(i);
                dz_pre[is] = dh[is] * (hp[is] - n[is]) * z[is] * (1.0 - z[is]);
                dn_pre[is] = dh[is] * (1.0 - z[is]) * (1.0 - n[is] * n[is]);
                dhp[is] = dh[is] * z[is];
            }
            matvec_t_add(v.un, H, H, dn_pre.data(), drh.data());
            for (int i = 0; i < H; ++i) {
                const auto is = static_cast<std::size_t>(i);
                dr_pre[is] = drh[is] * hp[is] * r[is] * (1.0 - r[is]);
                dhp[is] += drh[is] * r[is];
            }
            matvec_t_add(v.uz, H, H, dz_pre.data(), dhp.data());
            matvec_t_add(v.ur, H, H, dr_pre.data(), dhp.data());

            outer_add(g.wz, H, in, dz_pre.data(), xin.data());
            outer_add(g.uz, H, H, dz_pre.data(), hp.data());
            outer_add(g.wr, H, in, dr_pre.data(), xin.data());
            outer_add(g.ur, H, H, dr_pre.data(), hp.data());
            outer_add(g.wn, H, in, dn_pre.data(), xin.data());
            outer_add(g.un, H, H, dn_pre.data(), rh.data());
            for (int i = 0; i < H; ++i) {
                const auto is = static_cast<std::size_t>(i);
                g.bz[i] += dz_pre[is];
                g.br[i] += dr_pre[is];
                g.bn[i] += dn_pre[is];
            }

            std::vector<double> dxin(static_cast<std::size_t>(in), 0.0);
            matvec_t_add(v.wz, H, in, dz_pre.data(), dxin.data());
            matvec_t_add(v.wr, H, in, dr_pre.data(), dxin.data());
            matvec_t_add(v.wn, H, in, dn_pre.data(), dxin.data());

            dh_carry[ls] = std::move(dhp);
            if (l == 0) {
                if (dx)
                    for (int i = 0; i < features_; ++i)
                        (*dx)[static_cast<std::size_t>(t) * features_ + i] +=
                            dxin[static_cast<std::size_t>(i)];
            } else {
                dx_lower = std::move(dxin);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Optimizer, training, checking

void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
    if (grads.size() != params.size()) throw DomainError("adam gradient size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.step = 0;
    }
    for (double g : grads)
        if (!std::isfinite(g)) throw TrainingError("non-finite gradient in adam_step");
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void Standardizer::fit(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DataError("cannot fit standardizer on empty data");
    const std::size_t dim = rows.front().size();
    mean.assign(dim, 0.0);
    std.assign(dim, 0.0);
    for (const auto& row : rows)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
    for (std::size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(rows.size());
    for (const auto& row : rows)
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = row[j] - mean[j];
            std[j] += d * d;
        }
    for (std::size_t j = 0; j < dim; ++j) {
        std[j] = std::sqrt(std[j] / static_cast<double>(rows.size()));
        if (std[j] < 1e-12) std[j] = 1.0;  // constant feature
    }
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
    if (x.size() != mean.size()) throw DomainError("standardizer dimension mismatch");
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / std[j];
    return z;
}

std::vector<double> Standardizer::invert(std::span<const double> z) const {
    if (z.size() != mean.size()) throw DomainError("standardizer dimension mismatch");
    std::vector<double> x(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * std[j] + mean[j];
    return x;
}

std::vector<double> Network::predict(std::span<const double> x) const {
    const std::vector<double> z = x_norm.apply(x);
    const std::vector<double> y = model->forward(z);
    return y_norm.invert(y);
}

std::vector<double> train(Network& net, const Dataset& data, const TrainOptions& opts) {
    if (data.inputs.empty() || data.inputs.size() != data.targets.size())
        throw DataError("training dataset is empty or misaligned");
    net.x_norm.fit(data.inputs);
    net.y_norm.fit(data.targets);
    std::vector<double> curve;
    if (opts.epochs == 0) return curve;

    std::vector<std::vector<double>> xs, ys;
    xs.reserve(data.inputs.size());
    ys.reserve(data.targets.size());
    for (std::size_t i = 0; i < data.inputs.size(); ++i) {
        xs.push_back(net.x_norm.apply(data.inputs[i]));
        ys.push_back(net.y_norm.apply(data.targets[i]));
    }

    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(net.model->params().size());

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(opts.batch)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(opts.batch));
            std::fill(grad.begin(), grad.end(), 0.0);
            const double inv = 1.0 / static_cast<double>(end - begin);
            for (std::size_t k = begin; k < end; ++k) {
                const auto& x = xs[order[k]];
                const auto& y = ys[order[k]];
                const std::vector<double> pred = net.model->forward(x);
                std::vector<double> dy(pred.size());
                for (std::size_t j = 0; j < pred.size(); ++j) {
                    const double err = pred[j] - y[j];
                    epoch_loss += err * err;
                    dy[j] = 2.0 * err * inv / static_cast<double>(pred.size());
                }
                net.model->accumulate_gradient(x, dy, grad);
            }
            adam_step(net.model->params(), grad, net.opt, opts.lr);
            seen += (end - begin);
        }
        const double mse =
            epoch_loss / static_cast<double>(seen * net.model->output_size());
        if (!std::isfinite(mse)) throw TrainingError("training diverged (non-finite loss)");
        curve.push_back(mse);
    }
    for (double p : net.model->params())
        if (!std::isfinite(p)) throw TrainingError("training produced non-finite parameters");
    return curve;
}

double grad_check(const Model& model, std::span<const double> x,
                  std::span<const double> target, double eps) {
    if (eps < 1e-7 || eps > 1e-3) throw DomainError("grad_check eps out of range");
    const std::size_t n = model.params().size();
    if (n == 0) return 0.0;

    auto loss_of = [&](const Model& m) {
        const std::vector<double> y = m.forward(x);
        double loss = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double e = y[j] - target[j];
            loss += e * e;
        }
        return loss;
    };

    std::vector<double> analytic(n, 0.0);
    {
        const std::vector<double> y = model.forward(x);
        std::vector<double> dy(y.size());
        for (std::size_t j = 0; j < y.size(); ++j) dy[j] = 2.0 * (y[j] - target[j]);
        model.accumulate_gradient(x, dy, analytic);
    }

    std::unique_ptr<Model> probe = model.clone();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double saved = probe->params()[i];
        probe->params()[i] = saved + eps;
        const double up = loss_of(*probe);
        probe->params()[i] = saved - eps;
        const double down = loss_of(*probe);
        probe->params()[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max(1e-6, std::abs(numeric) + std::abs(analytic[i]));
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Serialization: JSON header line + raw little-endian doubles.

namespace {
constexpr char kMagic[] = "HEMSNN1";

nlohmann::json standardizer_json(const Standardizer& s) {
    return {{"mean", s.mean}, {"std", s.std}};
}

Standardizer standardizer_from(const nlohmann::json& j) {
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    return s;
}
}  // namespace

void save_network(const Network& net, const std::string& path) {
    nlohmann::json header;
    header["version"] = 1;
    header["seed"] = net.seed;
    header["x_norm"] = standardizer_json(net.x_norm);
    header["y_norm"] = standardizer_json(net.y_norm);
    if (const auto* mlp = dynamic_cast<const Mlp*>(net.model.get())) {
        header["type"] = "mlp";
        header["input"] = mlp->input_size();
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : mlp->layers())
            layers.push_back({{"width", l.width},
                              {"activation", activation_name(l.activation)}});
        header["layers"] = layers;
    } else if (const auto* gru = dynamic_cast<const GruStack*>(net.model.get())) {
        header["type"] = "gru";
        header["features"] = gru->features();
        header["window"] = gru->window();
        header["num_layers"] = gru->num_layers();
        header["hidden"] = gru->hidden_size();
        header["out"] = gru->output_size();
    } else {
        throw DataError("cannot serialize unknown model type");
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const std::string h = header.dump();
    const std::uint64_t len = h.size();
    out.write(kMagic, sizeof(kMagic) - 1);
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    const auto& p = net.model->params();
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path);
}

Network load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[sizeof(kMagic) - 1];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw DataError("bad network file magic: " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string h(len, '\0');
    in.read(h.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError("truncated network header: " + path);
    const nlohmann::json header = nlohmann::json::parse(h);

    Network net;
    net.seed = header.at("seed").get<std::uint64_t>();
    net.x_norm = standardizer_from(header.at("x_norm"));
    net.y_norm = standardizer_from(header.at("y_norm"));
    const std::string type = header.at("type").get<std::string>();
    if (type == "mlp") {
        std::vector<Mlp::LayerSpec> layers;
        for (const auto& l : header.at("layers"))
            layers.push_back({l.at("width").get<int>(),
                              activation_from_name(l.at("activation").get<std::string>())});
        net.model = std::make_unique<Mlp>(header.at("input").get<int>(), layers, net.seed);
    } else if (type == "gru") {
        net.model = std::make_unique<GruStack>(
            header.at("features").get<int>(), header.at("window").get<int>(),
            header.at("num_layers").get<int>(), header.at("hidden").get<int>(),
            header.at("out").get<int>(), net.seed);
    } else {
        throw DataError("unknown model type in file: " + type);
    }
    auto& p = net.model->params();
    in.read(reinterpret_cast<char*>(p.data()),
            static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!in) throw DataError("truncated parameter payload: " + path);
    return net;
}

}  // namespace hems
