#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srl/common.hpp"
#include "srl/volume.hpp"

namespace srl {

// ---------------------------------------------------------------------------
// Architecture
// ---------------------------------------------------------------------------
// Shared trunk: 4 conv layers (cubic kernel, stride 1, zero padding kernel/2),
// each followed by a 2x2x2 max-pool on every axis whose dim is >= 2, then a
// rectifier. Per-task heads: 3 dense layers, rectified except the last, ending
// in one Q-value per action.
//
// All activations are channels-last: a [X][Y][Z][C] block flattened with C
// fastest. The network input is the H-frame crop stack in that layout.

struct NetworkArch {
    int32_t history = 4;
    int32_t bx = 15, by = 15, bz = 7;
    std::array<int32_t, 4> conv_channels{8, 16, 16, 32};
    int32_t kernel = 3;
    std::array<int32_t, 3> fc_widths{128, 64, kNumActions};

    static NetworkArch for_geometry(const Geometry& g) {
        NetworkArch a;
        a.history = g.history;
        a.bx = g.bx;
        a.by = g.by;
        a.bz = g.bz;
        return a;
    }

    void validate() const;  // throws ConfigError

    struct Dims {
        int32_t x = 0, y = 0, z = 0;
        int32_t count() const { return x * y * z; }
    };
    // Spatial dims entering conv stage i (0..3); index 4 = after the last pool.
    std::array<Dims, 5> stage_dims() const;
    int32_t flatten_width() const;
    size_t input_size() const { return static_cast<size_t>(bx) * by * bz * history; }

    bool operator==(const NetworkArch&) const = default;
};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

template <typename T>
struct ConvLayer {
    int32_t in_c = 0, out_c = 0, kernel = 3;
    std::vector<T> w;  // [kernel^3][in_c][out_c], out_c fastest
    std::vector<T> b;  // [out_c]
};

template <typename T>
struct DenseLayer {
    int32_t in_w = 0, out_w = 0;
    std::vector<T> w;  // [in_w][out_w], out_w fastest
    std::vector<T> b;  // [out_w]
};

template <typename T>
struct Head {
    TaskId task = TaskId::TopLeft;
    std::array<DenseLayer<T>, 3> fc;
};

// The scalar type is float for training and double for finite-difference
// verification builds.
template <typename T>
struct QNetwork {
    NetworkArch arch;
    std::array<ConvLayer<T>, 4> conv;
    std::vector<Head<T>> heads;  // append-only

    QNetwork() = default;
    // Trunk only; weights uniform in +-sqrt(6/fan_in), biases zero.
    QNetwork(const NetworkArch& a, uint64_t seed);

    void add_head(TaskId task, uint64_t seed);  // duplicate task -> ConfigError
    bool has_head(TaskId task) const;
    int head_index(TaskId task) const;  // missing head -> ConfigError
};

// Deep copy used as the frozen bootstrap network.
template <typename T>
QNetwork<T> sync_target(const QNetwork<T>& net) {
    return net;
}

template <typename To, typename From>
QNetwork<To> cast_network(const QNetwork<From>& net);

// Visits every parameter tensor in declaration order (conv1.w, conv1.b, ...,
// then per head fc1.w, fc1.b, fc2.w, ...). fn(name, vector&). Declaration
// order is also the checkpoint serialization order and the gradient layout.
template <typename Net, typename Fn>
void for_each_tensor(Net& net, Fn&& fn) {
    for (size_t i = 0; i < net.conv.size(); ++i) {
        const std::string base = "conv" + std::to_string(i + 1);
        fn(base + ".w", net.conv[i].w);
        fn(base + ".b", net.conv[i].b);
    }
    for (auto& head : net.heads) {
        const std::string base = "head." + to_string(head.task);
        for (size_t j = 0; j < head.fc.size(); ++j) {
            const std::string layer = base + ".fc" + std::to_string(j + 1);
            fn(layer + ".w", head.fc[j].w);
            fn(layer + ".b", head.fc[j].b);
        }
    }
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

template <typename T>
struct Grads {
    std::vector<std::vector<T>> g;  // parallel to for_each_tensor order

    void resize_like(const QNetwork<T>& net);
    void zero();
};

// ---------------------------------------------------------------------------
// Scratch buffers (one per thread; forward/backward never allocate)
// ---------------------------------------------------------------------------

template <typename T>
struct Workspace {
    const T* input = nullptr;                // borrowed during forward/backward
    std::array<std::vector<T>, 4> conv_out;  // pre-pool conv outputs
    std::array<std::vector<T>, 4> act;       // post pool+rectifier, per stage
    std::array<std::vector<T>, 3> fc_out;    // head activations
    std::array<std::vector<T>, 4> d_conv;    // gradient w.r.t. conv_out
    std::array<std::vector<T>, 4> d_act;     // gradient w.r.t. act
    std::array<std::vector<T>, 3> d_fc;
    std::vector<T> w_t;  // transposed conv weights, built during backward

    void resize(const NetworkArch& a);
};

// ---------------------------------------------------------------------------
// Forward / loss / backward
// ---------------------------------------------------------------------------

// Q-values for one state tensor (length arch.input_size(), channels-last).
template <typename T>
std::array<T, kNumActions> qvalues(const QNetwork<T>& net, const T* input, TaskId task,
                                   Workspace<T>& ws);

template <typename T>
struct BatchItem {
    const T* s = nullptr;       // state tensor
    const T* s_next = nullptr;  // successor tensor; ignored when done
    Action a = Action::PosX;
    T r = 0;
    bool done = false;
    TaskId task = TaskId::TopLeft;
};

// Mean Huber(delta=1) loss of Q(s,a) against the frozen bootstrap target
// y = r (terminal) or r + gamma * max_a' Q_target(s',a'), with exact
// backpropagation through the trunk and each touched head. Returns the loss;
// grads are overwritten (not accumulated into).
template <typename T>
double dqn_loss_and_grad(const QNetwork<T>& net, const QNetwork<T>& target,
                         const std::vector<BatchItem<T>>& batch, double gamma, Grads<T>& grads,
                         Workspace<T>& ws);

// Loss only (used by the finite-difference oracle).
template <typename T>
double dqn_loss(const QNetwork<T>& net, const QNetwork<T>& target,
                const std::vector<BatchItem<T>>& batch, double gamma, Workspace<T>& ws);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

template <typename T>
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    // Applies one update to every tensor. A non-finite gradient raises
    // DivergenceError naming the offending tensor.
    void step(QNetwork<T>& net, const Grads<T>& grads);

    int64_t steps_taken() const { return t_; }
    double lr() const { return lr_; }

private:
    double lr_, b1_, b2_, eps_;
    int64_t t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

// ---------------------------------------------------------------------------
// Checkpoint file ".ckpt"
// ---------------------------------------------------------------------------
// Little-endian: magic "SRLC", version u32=1, then the payload -- arch
// descriptor (history, box dims, conv count + channels, kernel, fc count +
// widths, all u32), head count u32, per-head TaskId u8, every parameter tensor
// as float32 in declaration order -- then FNV-1a/64 of the payload bytes.

void save_checkpoint(const std::filesystem::path& path, const QNetwork<float>& net);
QNetwork<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace srl
