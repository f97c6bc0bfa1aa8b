#include "srl/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "srl/io_util.hpp"
#include "srl/rng.hpp"

namespace srl {

// ---------------------------------------------------------------------------
// Architecture
// ---------------------------------------------------------------------------

void NetworkArch::validate() const {
    if (history < 1 || history > kMaxHistory) throw ConfigError("bad history length");
    if (bx < 1 || by < 1 || bz < 1) throw ConfigError("bad input dims");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd");
    for (int32_t c : conv_channels)
        if (c < 1) throw ConfigError("conv channels must be positive");
    if (fc_widths[0] < 1 || fc_widths[1] < 1) throw ConfigError("fc widths must be positive");
    if (fc_widths[2] != kNumActions)
        throw ConfigError("head output width must equal the action count");
}

std::array<NetworkArch::Dims, 5> NetworkArch::stage_dims() const {
    const auto pool = [](int32_t d) { return d >= 2 ? d / 2 : d; };
    std::array<Dims, 5> out;
    out[0] = {bx, by, bz};
    for (int i = 1; i <= 4; ++i)
        out[i] = {pool(out[i - 1].x), pool(out[i - 1].y), pool(out[i - 1].z)};
    return out;
}

int32_t NetworkArch::flatten_width() const {
    return stage_dims()[4].count() * conv_channels[3];
}

// ---------------------------------------------------------------------------
// Parameter shaping and initialization
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void shape_conv(ConvLayer<T>& L, int32_t in_c, int32_t out_c, int32_t kernel) {
    L.in_c = in_c;
    L.out_c = out_c;
    L.kernel = kernel;
    L.w.assign(static_cast<size_t>(kernel) * kernel * kernel * in_c * out_c, T(0));
    L.b.assign(static_cast<size_t>(out_c), T(0));
}

template <typename T>
void shape_dense(DenseLayer<T>& L, int32_t in_w, int32_t out_w) {
    L.in_w = in_w;
    L.out_w = out_w;
    L.w.assign(static_cast<size_t>(in_w) * out_w, T(0));
    L.b.assign(static_cast<size_t>(out_w), T(0));
}

template <typename T>
void shape_trunk(QNetwork<T>& net) {
    int32_t in_c = net.arch.history;
    for (int i = 0; i < 4; ++i) {
        shape_conv(net.conv[i], in_c, net.arch.conv_channels[i], net.arch.kernel);
        in_c = net.arch.conv_channels[i];
    }
}

template <typename T>
void shape_head(Head<T>& h, const NetworkArch& arch) {
    int32_t in_w = arch.flatten_width();
    for (int j = 0; j < 3; ++j) {
        shape_dense(h.fc[j], in_w, arch.fc_widths[j]);
        in_w = arch.fc_widths[j];
    }
}

// Uniform in +-sqrt(6 / fan_in); biases stay zero.
template <typename T>
void fill_uniform(std::vector<T>& w, size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (T& v : w) v = static_cast<T>((2.0 * rng.next_double() - 1.0) * bound);
}

}  // namespace

template <typename T>
QNetwork<T>::QNetwork(const NetworkArch& a, uint64_t seed) : arch(a) {
    arch.validate();
    shape_trunk(*this);
    Rng rng(seed);
    for (auto& L : conv)
        fill_uniform(L.w, static_cast<size_t>(L.in_c) * L.kernel * L.kernel * L.kernel, rng);
}

template <typename T>
void QNetwork<T>::add_head(TaskId task, uint64_t seed) {
    if (has_head(task)) throw ConfigError("head already present: " + to_string(task));
    Head<T> h;
    h.task = task;
    shape_head(h, arch);
    Rng rng(seed);
    for (auto& fc : h.fc) fill_uniform(fc.w, static_cast<size_t>(fc.in_w), rng);
    heads.push_back(std::move(h));
}

template <typename T>
bool QNetwork<T>::has_head(TaskId task) const {
    for (const auto& h : heads)
        if (h.task == task) return true;
    return false;
}

template <typename T>
int QNetwork<T>::head_index(TaskId task) const {
    for (size_t i = 0; i < heads.size(); ++i)
        if (heads[i].task == task) return static_cast<int>(i);
    throw ConfigError("no head for task " + to_string(task));
}

template <typename To, typename From>
QNetwork<To> cast_network(const QNetwork<From>& net) {
    QNetwork<To> out;
    out.arch = net.arch;
    shape_trunk(out);
    out.heads.resize(net.heads.size());
    for (size_t i = 0; i < net.heads.size(); ++i) {
        out.heads[i].task = net.heads[i].task;
        shape_head(out.heads[i], out.arch);
    }
    auto src = [&]() {
        std::vector<const std::vector<From>*> v;
        for_each_tensor(net, [&](const std::string&, const std::vector<From>& t) {
            v.push_back(&t);
        });
        return v;
    }();
    size_t i = 0;
    for_each_tensor(out, [&](const std::string&, std::vector<To>& t) {
        const auto& s = *src[i++];
        for (size_t j = 0; j < t.size(); ++j) t[j] = static_cast<To>(s[j]);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Gradients / workspace
// ---------------------------------------------------------------------------

template <typename T>
void Grads<T>::resize_like(const QNetwork<T>& net) {
    g.clear();
    for_each_tensor(net, [&](const std::string&, const std::vector<T>& t) {
        g.emplace_back(t.size(), T(0));
    });
}

template <typename T>
void Grads<T>::zero() {
    for (auto& t : g) std::fill(t.begin(), t.end(), T(0));
}

template <typename T>
void Workspace<T>::resize(const NetworkArch& a) {
    const auto dims = a.stage_dims();
    size_t max_w = 0;
    for (int i = 0; i < 4; ++i) {
        const size_t n = static_cast<size_t>(dims[i].count()) * a.conv_channels[i];
        const size_t m = static_cast<size_t>(dims[i + 1].count()) * a.conv_channels[i];
        conv_out[i].assign(n, T(0));
        d_conv[i].assign(n, T(0));
        act[i].assign(m, T(0));
        d_act[i].assign(m, T(0));
        const size_t in_c = i == 0 ? a.history : a.conv_channels[i - 1];
        max_w = std::max(max_w, static_cast<size_t>(a.kernel) * a.kernel * a.kernel * in_c *
                                    a.conv_channels[i]);
    }
    for (int j = 0; j < 3; ++j) {
        fc_out[j].assign(static_cast<size_t>(a.fc_widths[j]), T(0));
        d_fc[j].assign(static_cast<size_t>(a.fc_widths[j]), T(0));
    }
    w_t.assign(max_w, T(0));
    input = nullptr;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------
// Skipping zero multiplicands below is bit-exact: accumulators never hold -0
// (biases initialize to +0 and IEEE round-to-nearest subtraction cannot
// produce -0 from distinct operands), and adding +-0 to such a value is the
// identity. Zeros are common (zero-filled crop borders, rectifier outputs),
// so the skip roughly halves multiply traffic.

namespace {

using Dims = NetworkArch::Dims;

template <typename T>
void conv3d_forward(const ConvLayer<T>& L, const T* in, Dims d, T* out) {
    const int32_t X = d.x, Y = d.y, Z = d.z, IC = L.in_c, OC = L.out_c, K = L.kernel, P = K / 2;
    for (int32_t x = 0; x < X; ++x) {
        const int32_t kx0 = std::max(0, P - x), kx1 = std::min(K, X + P - x);
        for (int32_t y = 0; y < Y; ++y) {
            const int32_t ky0 = std::max(0, P - y), ky1 = std::min(K, Y + P - y);
            for (int32_t z = 0; z < Z; ++z) {
                const int32_t kz0 = std::max(0, P - z), kz1 = std::min(K, Z + P - z);
                T* o = out + (static_cast<size_t>(x * Y + y) * Z + z) * OC;
                for (int32_t c = 0; c < OC; ++c) o[c] = L.b[c];
                for (int32_t kx = kx0; kx < kx1; ++kx) {
                    const int32_t ix = x + kx - P;
                    for (int32_t ky = ky0; ky < ky1; ++ky) {
                        const int32_t iy = y + ky - P;
                        const T* irow0 = in + (static_cast<size_t>(ix * Y + iy) * Z) * IC;
                        const T* wrow0 =
                            L.w.data() +
                            (static_cast<size_t>(kx) * K + ky) * K * IC * OC;
                        for (int32_t kz = kz0; kz < kz1; ++kz) {
                            const T* irow = irow0 + static_cast<size_t>(z + kz - P) * IC;
                            const T* wrow = wrow0 + static_cast<size_t>(kz) * IC * OC;
                            for (int32_t ic = 0; ic < IC; ++ic) {
                                const T s = irow[ic];
                                if (s == T(0)) continue;
                                const T* wr = wrow + static_cast<size_t>(ic) * OC;
                                for (int32_t c = 0; c < OC; ++c) o[c] += s * wr[c];
                            }
                        }
                    }
                }
            }
        }
    }
}

// dW/dB always; dIn only when din != nullptr (stage 0 skips it). w_t holds the
// kernel-position-major transpose [k][oc][ic] built by the caller.
template <typename T>
void conv3d_backward(const ConvLayer<T>& L, const T* in, Dims d, const T* dout, const T* w_t,
                     T* dw, T* db, T* din) {
    const int32_t X = d.x, Y = d.y, Z = d.z, IC = L.in_c, OC = L.out_c, K = L.kernel, P = K / 2;
    for (int32_t x = 0; x < X; ++x) {
        const int32_t kx0 = std::max(0, P - x), kx1 = std::min(K, X + P - x);
        for (int32_t y = 0; y < Y; ++y) {
            const int32_t ky0 = std::max(0, P - y), ky1 = std::min(K, Y + P - y);
            for (int32_t z = 0; z < Z; ++z) {
                const int32_t kz0 = std::max(0, P - z), kz1 = std::min(K, Z + P - z);
                const T* go = dout + (static_cast<size_t>(x * Y + y) * Z + z) * OC;
                for (int32_t c = 0; c < OC; ++c) db[c] += go[c];
                for (int32_t kx = kx0; kx < kx1; ++kx) {
                    const int32_t ix = x + kx - P;
                    for (int32_t ky = ky0; ky < ky1; ++ky) {
                        const int32_t iy = y + ky - P;
                        const size_t in_base = (static_cast<size_t>(ix * Y + iy) * Z) * IC;
                        const size_t k_base =
                            (static_cast<size_t>(kx) * K + ky) * K * IC * OC;
                        for (int32_t kz = kz0; kz < kz1; ++kz) {
                            const size_t in_off =
                                in_base + static_cast<size_t>(z + kz - P) * IC;
                            const T* irow = in + in_off;
                            T* dwrow = dw + k_base + static_cast<size_t>(kz) * IC * OC;
                            for (int32_t ic = 0; ic < IC; ++ic) {
                                const T s = irow[ic];
                                if (s == T(0)) continue;
                                T* dwr = dwrow + static_cast<size_t>(ic) * OC;
                                for (int32_t c = 0; c < OC; ++c) dwr[c] += s * go[c];
                            }
                            if (din != nullptr) {
                                T* dirow = din + in_off;
                                const T* wtr =
                                    w_t + k_base + static_cast<size_t>(kz) * IC * OC;
                                for (int32_t c = 0; c < OC; ++c) {
                                    const T s = go[c];
                                    if (s == T(0)) continue;
                                    const T* wr = wtr + static_cast<size_t>(c) * IC;
                                    for (int32_t ic = 0; ic < IC; ++ic) dirow[ic] += s * wr[ic];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void transpose_weights(const ConvLayer<T>& L, T* w_t) {
    const int32_t IC = L.in_c, OC = L.out_c;
    const int32_t KK = L.kernel * L.kernel * L.kernel;
    for (int32_t k = 0; k < KK; ++k) {
        const T* src = L.w.data() + static_cast<size_t>(k) * IC * OC;
        T* dst = w_t + static_cast<size_t>(k) * IC * OC;
        for (int32_t ic = 0; ic < IC; ++ic)
            for (int32_t c = 0; c < OC; ++c)
                dst[static_cast<size_t>(c) * IC + ic] = src[static_cast<size_t>(ic) * OC + c];
    }
}

template <typename T>
void maxpool_forward(const T* in, Dims din, int32_t C, T* out, Dims dout) {
    const int32_t wx = din.x >= 2 ? 2 : 1, wy = din.y >= 2 ? 2 : 1, wz = din.z >= 2 ? 2 : 1;
    for (int32_t ox = 0; ox < dout.x; ++ox) {
        for (int32_t oy = 0; oy < dout.y; ++oy) {
            for (int32_t oz = 0; oz < dout.z; ++oz) {
                T* o = out + (static_cast<size_t>(ox * dout.y + oy) * dout.z + oz) * C;
                const int32_t x0 = ox * wx, y0 = oy * wy, z0 = oz * wz;
                bool first = true;
                for (int32_t i = 0; i < wx; ++i)
                    for (int32_t j = 0; j < wy; ++j)
                        for (int32_t l = 0; l < wz; ++l) {
                            const T* p =
                                in + (static_cast<size_t>((x0 + i) * din.y + (y0 + j)) * din.z +
                                      (z0 + l)) *
                                         C;
                            if (first) {
                                std::memcpy(o, p, static_cast<size_t>(C) * sizeof(T));
                                first = false;
                            } else {
                                for (int32_t c = 0; c < C; ++c) o[c] = std::max(o[c], p[c]);
                            }
                        }
            }
        }
    }
}

// Routes each pooled gradient to the first window element attaining the max
// (recomputed; matches forward since max() scans the same order).
template <typename T>
void maxpool_backward(const T* in, Dims din, int32_t C, const T* dpool, Dims dout, T* din_grad) {
    const int32_t wx = din.x >= 2 ? 2 : 1, wy = din.y >= 2 ? 2 : 1, wz = din.z >= 2 ? 2 : 1;
    for (int32_t ox = 0; ox < dout.x; ++ox) {
        for (int32_t oy = 0; oy < dout.y; ++oy) {
            for (int32_t oz = 0; oz < dout.z; ++oz) {
                const T* g = dpool + (static_cast<size_t>(ox * dout.y + oy) * dout.z + oz) * C;
                const int32_t x0 = ox * wx, y0 = oy * wy, z0 = oz * wz;
                for (int32_t c = 0; c < C; ++c) {
                    if (g[c] == T(0)) continue;
                    size_t best_off = 0;
                    T best = -std::numeric_limits<T>::infinity();
                    for (int32_t i = 0; i < wx; ++i)
                        for (int32_t j = 0; j < wy; ++j)
                            for (int32_t l = 0; l < wz; ++l) {
                                const size_t off =
                                    (static_cast<size_t>((x0 + i) * din.y + (y0 + j)) * din.z +
                                     (z0 + l)) *
                                        C +
                                    c;
                                if (in[off] > best) {
                                    best = in[off];
                                    best_off = off;
                                }
                            }
                    din_grad[best_off] += g[c];
                }
            }
        }
    }
}

template <typename T>
void relu_inplace(std::vector<T>& x) {
    for (T& v : x) v = v > T(0) ? v : T(0);
}

template <typename T>
void dense_forward(const DenseLayer<T>& L, const T* in, T* out) {
    const int32_t IW = L.in_w, OW = L.out_w;
    std::memcpy(out, L.b.data(), static_cast<size_t>(OW) * sizeof(T));
    for (int32_t i = 0; i < IW; ++i) {
        const T s = in[i];
        if (s == T(0)) continue;
        const T* wr = L.w.data() + static_cast<size_t>(i) * OW;
        for (int32_t o = 0; o < OW; ++o) out[o] += s * wr[o];
    }
}

// din may be null for the first trunk-facing call when unwanted.
template <typename T>
void dense_backward(const DenseLayer<T>& L, const T* in, const T* dout, T* dw, T* db, T* din) {
    const int32_t IW = L.in_w, OW = L.out_w;
    for (int32_t o = 0; o < OW; ++o) db[o] += dout[o];
    for (int32_t i = 0; i < IW; ++i) {
        const T s = in[i];
        if (s != T(0)) {
            T* dwr = dw + static_cast<size_t>(i) * OW;
            for (int32_t o = 0; o < OW; ++o) dwr[o] += s * dout[o];
        }
        if (din != nullptr) {
            const T* wr = L.w.data() + static_cast<size_t>(i) * OW;
            T acc = T(0);
            for (int32_t o = 0; o < OW; ++o) acc += wr[o] * dout[o];
            din[i] = acc;
        }
    }
}

// ---------------------------------------------------------------------------
// Composite passes
// ---------------------------------------------------------------------------

template <typename T>
const std::vector<T>& forward_trunk(const QNetwork<T>& net, const T* input, Workspace<T>& ws) {
    const auto dims = net.arch.stage_dims();
    ws.input = input;
    const T* cur = input;
    for (int i = 0; i < 4; ++i) {
        conv3d_forward(net.conv[i], cur, dims[i], ws.conv_out[i].data());
        maxpool_forward(ws.conv_out[i].data(), dims[i], net.arch.conv_channels[i],
                        ws.act[i].data(), dims[i + 1]);
        relu_inplace(ws.act[i]);
        cur = ws.act[i].data();
    }
    return ws.act[3];
}

template <typename T>
void forward_head(const Head<T>& head, const std::vector<T>& flat, Workspace<T>& ws) {
    dense_forward(head.fc[0], flat.data(), ws.fc_out[0].data());
    relu_inplace(ws.fc_out[0]);
    dense_forward(head.fc[1], ws.fc_out[0].data(), ws.fc_out[1].data());
    relu_inplace(ws.fc_out[1]);
    dense_forward(head.fc[2], ws.fc_out[1].data(), ws.fc_out[2].data());
}

constexpr int kTrunkTensors = 8;  // 4 conv layers x (w, b)
constexpr int kHeadTensors = 6;   // 3 dense layers x (w, b)

template <typename T>
double huber(T e) {
    const double a = std::abs(static_cast<double>(e));
    return a <= 1.0 ? 0.5 * a * a : a - 0.5;
}

}  // namespace

template <typename T>
std::array<T, kNumActions> qvalues(const QNetwork<T>& net, const T* input, TaskId task,
                                   Workspace<T>& ws) {
    const auto& flat = forward_trunk(net, input, ws);
    forward_head(net.heads[net.head_index(task)], flat, ws);
    std::array<T, kNumActions> q{};
    std::copy(ws.fc_out[2].begin(), ws.fc_out[2].end(), q.begin());
    return q;
}

template <typename T>
static double batch_pass(const QNetwork<T>& net, const QNetwork<T>& target,
                         const std::vector<BatchItem<T>>& batch, double gamma, Grads<T>* grads,
                         Workspace<T>& ws) {
    if (batch.empty()) throw ConfigError("empty training batch");
    const auto dims = net.arch.stage_dims();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double loss_sum = 0.0;

    for (const auto& item : batch) {
        double y = static_cast<double>(item.r);
        if (!item.done) {
            const auto qn = qvalues(target, item.s_next, item.task, ws);
            y += gamma * static_cast<double>(*std::max_element(qn.begin(), qn.end()));
        }

        const auto& flat = forward_trunk(net, item.s, ws);
        const int hi = net.head_index(item.task);
        forward_head(net.heads[hi], flat, ws);
        const double q = static_cast<double>(ws.fc_out[2][static_cast<size_t>(item.a)]);
        const double e = q - y;
        loss_sum += huber(e);
        if (grads == nullptr) continue;

        // dLoss/dQ(s,a): Huber derivative, averaged over the batch.
        const T dq = static_cast<T>(std::clamp(e, -1.0, 1.0) * inv_n);
        auto& g = grads->g;
        const auto& head = net.heads[hi];
        const int gh = kTrunkTensors + hi * kHeadTensors;

        std::fill(ws.d_fc[2].begin(), ws.d_fc[2].end(), T(0));
        ws.d_fc[2][static_cast<size_t>(item.a)] = dq;
        dense_backward(head.fc[2], ws.fc_out[1].data(), ws.d_fc[2].data(), g[gh + 4].data(),
                       g[gh + 5].data(), ws.d_fc[1].data());
        for (size_t j = 0; j < ws.d_fc[1].size(); ++j)
            if (ws.fc_out[1][j] <= T(0)) ws.d_fc[1][j] = T(0);
        dense_backward(head.fc[1], ws.fc_out[0].data(), ws.d_fc[1].data(), g[gh + 2].data(),
                       g[gh + 3].data(), ws.d_fc[0].data());
        for (size_t j = 0; j < ws.d_fc[0].size(); ++j)
            if (ws.fc_out[0][j] <= T(0)) ws.d_fc[0][j] = T(0);
        dense_backward(head.fc[0], flat.data(), ws.d_fc[0].data(), g[gh + 0].data(),
                       g[gh + 1].data(), ws.d_act[3].data());

        for (int i = 3; i >= 0; --i) {
            // rectifier mask, then un-pool, then convolution backward
            for (size_t j = 0; j < ws.d_act[i].size(); ++j)
                if (ws.act[i][j] <= T(0)) ws.d_act[i][j] = T(0);
            std::fill(ws.d_conv[i].begin(), ws.d_conv[i].end(), T(0));
            maxpool_backward(ws.conv_out[i].data(), dims[i], net.arch.conv_channels[i],
                             ws.d_act[i].data(), dims[i + 1], ws.d_conv[i].data());
            const T* stage_in = i == 0 ? ws.input : ws.act[i - 1].data();
            T* din = nullptr;
            if (i > 0) {
                std::fill(ws.d_act[i - 1].begin(), ws.d_act[i - 1].end(), T(0));
                din = ws.d_act[i - 1].data();
                transpose_weights(net.conv[i], ws.w_t.data());
            }
            conv3d_backward(net.conv[i], stage_in, dims[i], ws.d_conv[i].data(), ws.w_t.data(),
                            g[2 * i].data(), g[2 * i + 1].data(), din);
        }
    }
    return loss_sum * inv_n;
}

template <typename T>
double dqn_loss_and_grad(const QNetwork<T>& net, const QNetwork<T>& target,
                         const std::vector<BatchItem<T>>& batch, double gamma, Grads<T>& grads,
                         Workspace<T>& ws) {
    const size_t want = 8 + 6 * net.heads.size();
    if (grads.g.size() != want) grads.resize_like(net);
    grads.zero();
    return batch_pass(net, target, batch, gamma, &grads, ws);
}

template <typename T>
double dqn_loss(const QNetwork<T>& net, const QNetwork<T>& target,
                const std::vector<BatchItem<T>>& batch, double gamma, Workspace<T>& ws) {
    return batch_pass<T>(net, target, batch, gamma, nullptr, ws);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

template <typename T>
void Adam<T>::step(QNetwork<T>& net, const Grads<T>& grads) {
    ++t_;
    const T c1 = static_cast<T>(1.0 - std::pow(b1_, static_cast<double>(t_)));
    const T c2 = static_cast<T>(1.0 - std::pow(b2_, static_cast<double>(t_)));
    const T lr = static_cast<T>(lr_), b1 = static_cast<T>(b1_), b2 = static_cast<T>(b2_);
    const T eps = static_cast<T>(eps_);

    size_t i = 0;
    for_each_tensor(net, [&](const std::string& name, std::vector<T>& p) {
        const auto& g = grads.g.at(i);
        if (m_.size() <= i) {
            m_.emplace_back(p.size(), T(0));
            v_.emplace_back(p.size(), T(0));
        }
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < p.size(); ++j) {
            const T gj = g[j];
            if (!std::isfinite(static_cast<double>(gj)))
                throw DivergenceError("non-finite gradient in " + name);
            m[j] = b1 * m[j] + (T(1) - b1) * gj;
            v[j] = b2 * v[j] + (T(1) - b2) * gj * gj;
            p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
        }
        ++i;
    });
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

static constexpr char kCkptMagic[4] = {'S', 'R', 'L', 'C'};

void save_checkpoint(const std::filesystem::path& path, const QNetwork<float>& net) {
    std::ostringstream payload(std::ios::binary);
    io::write_u32(payload, static_cast<uint32_t>(net.arch.history));
    io::write_u32(payload, static_cast<uint32_t>(net.arch.bx));
    io::write_u32(payload, static_cast<uint32_t>(net.arch.by));
    io::write_u32(payload, static_cast<uint32_t>(net.arch.bz));
    io::write_u32(payload, 4);
    for (int32_t c : net.arch.conv_channels) io::write_u32(payload, static_cast<uint32_t>(c));
    io::write_u32(payload, static_cast<uint32_t>(net.arch.kernel));
    io::write_u32(payload, 3);
    for (int32_t w : net.arch.fc_widths) io::write_u32(payload, static_cast<uint32_t>(w));
    io::write_u32(payload, static_cast<uint32_t>(net.heads.size()));
    for (const auto& h : net.heads) io::write_u8(payload, static_cast<uint8_t>(h.task));
    for_each_tensor(net, [&](const std::string&, const std::vector<float>& t) {
        io::write_bytes(payload, t.data(), t.size() * sizeof(float));
    });

    const std::string body = payload.str();
    io::atomic_write_file(path, [&](std::ostream& os) {
        io::write_bytes(os, kCkptMagic, 4);
        io::write_u32(os, 1);
        io::write_bytes(os, body.data(), body.size());
        io::write_u64(os, io::fnv1a(body.data(), body.size()));
    });
}

QNetwork<float> load_checkpoint(const std::filesystem::path& path) {
    const auto data = io::read_binary_file(path, "checkpoint");
    if (data.size() < 16) throw ArtifactError("checkpoint too short: " + path.string());
    std::istringstream is(std::string(data.begin(), data.end()), std::ios::binary);
    io::expect_magic(is, kCkptMagic, "checkpoint");
    const uint32_t version = io::read_u32(is);
    if (version != 1)
        throw ArtifactError("unsupported checkpoint version " + std::to_string(version));

    const size_t body_len = data.size() - 16;
    const uint64_t want = io::fnv1a(data.data() + 8, body_len);
    uint64_t got;
    std::memcpy(&got, data.data() + data.size() - 8, 8);
    if (want != got) throw ArtifactError("checkpoint checksum mismatch: " + path.string());

    NetworkArch arch;
    arch.history = static_cast<int32_t>(io::read_u32(is));
    arch.bx = static_cast<int32_t>(io::read_u32(is));
    arch.by = static_cast<int32_t>(io::read_u32(is));
    arch.bz = static_cast<int32_t>(io::read_u32(is));
    if (io::read_u32(is) != 4) throw ArtifactError("unexpected conv layer count");
    for (auto& c : arch.conv_channels) c = static_cast<int32_t>(io::read_u32(is));
    arch.kernel = static_cast<int32_t>(io::read_u32(is));
    if (io::read_u32(is) != 3) throw ArtifactError("unexpected dense layer count");
    for (auto& w : arch.fc_widths) w = static_cast<int32_t>(io::read_u32(is));
    try {
        arch.validate();
    } catch (const ConfigError& e) {
        throw ArtifactError(std::string("checkpoint arch invalid: ") + e.what());
    }

    QNetwork<float> net;
    net.arch = arch;
    shape_trunk(net);
    const uint32_t head_count = io::read_u32(is);
    if (head_count > kNumTasks) throw ArtifactError("too many heads in checkpoint");
    for (uint32_t i = 0; i < head_count; ++i) {
        const uint8_t t = io::read_u8(is);
        if (t >= kNumTasks) throw ArtifactError("bad head task id in checkpoint");
        Head<float> h;
        h.task = static_cast<TaskId>(t);
        if (net.has_head(h.task)) throw ArtifactError("duplicate head in checkpoint");
        shape_head(h, arch);
        net.heads.push_back(std::move(h));
    }
    for_each_tensor(net, [&](const std::string& name, std::vector<float>& t) {
        io::read_bytes(is, t.data(), t.size() * sizeof(float));
        for (float v : t)
            if (!std::isfinite(v))
                throw ArtifactError("non-finite parameter in checkpoint tensor " + name);
    });
    io::read_u64(is);  // checksum, already verified
    if (is.peek() != EOF) throw ArtifactError("trailing bytes in checkpoint");
    return net;
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

template struct QNetwork<float>;
template struct QNetwork<double>;
template struct Grads<float>;
template struct Grads<double>;
template struct Workspace<float>;
template struct Workspace<double>;
template class Adam<float>;
template class Adam<double>;

template QNetwork<double> cast_network<double, float>(const QNetwork<float>&);
template QNetwork<float> cast_network<float, double>(const QNetwork<double>&);
template QNetwork<float> cast_network<float, float>(const QNetwork<float>&);

template std::array<float, kNumActions> qvalues(const QNetwork<float>&, const float*, TaskId,
                                                Workspace<float>&);
template std::array<double, kNumActions> qvalues(const QNetwork<double>&, const double*, TaskId,
                                                 Workspace<double>&);
template double dqn_loss_and_grad(const QNetwork<float>&, const QNetwork<float>&,
                                  const std::vector<BatchItem<float>>&, double, Grads<float>&,
                                  Workspace<float>&);
template double dqn_loss_and_grad(const QNetwork<double>&, const QNetwork<double>&,
                                  const std::vector<BatchItem<double>>&, double, Grads<double>&,
                                  Workspace<double>&);
template double dqn_loss(const QNetwork<float>&, const QNetwork<float>&,
                         const std::vector<BatchItem<float>>&, double, Workspace<float>&);
template double dqn_loss(const QNetwork<double>&, const QNetwork<double>&,
                         const std::vector<BatchItem<double>>&, double, Workspace<double>&);

}  // namespace srl
