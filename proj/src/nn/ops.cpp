// Copyright 2026 The antispoof Authors
//
// Licensed under the Apache License, Version 2.0

#include "antispoof/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "antispoof/error.hpp"

namespace antispoof::nn {

namespace {

constexpr std::size_t kColumnBlock = 512;

struct RoutingState {
  RoutingTape* tape = nullptr;
  RoutingScope::Mode mode = RoutingScope::Mode::kRecord;
  std::size_t cursor = 0;
};
thread_local RoutingState g_routing;

// Recorded winners for the next max-type op, or nullptr when not replaying.
const std::vector<std::uint32_t>* replayed_winners(std::size_t count) {
  if (!g_routing.tape || g_routing.mode != RoutingScope::Mode::kReplay) return nullptr;
  auto& choices = g_routing.tape->choices;
  if (g_routing.cursor >= choices.size() || choices[g_routing.cursor].size() != count)
    throw std::logic_error("routing replay does not match the recorded forward pass");
  return &choices[g_routing.cursor++];
}

template <typename I>
void record_winners(const std::vector<I>& winners) {
  if (g_routing.tape && g_routing.mode == RoutingScope::Mode::kRecord)
    g_routing.tape->choices.emplace_back(winners.begin(), winners.end());
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int u = 0; u < 8; ++u) acc[u] += a[i + u] * b[i + u];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

// C[MxN] += A[MxK] * B[KxN]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t n0 = 0; n0 < n; n0 += kColumnBlock) {
    const std::size_t nb = std::min(kColumnBlock, n - n0);
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * n + n0;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = a[i * k + p];
        const T* brow = b + p * n + n0;
        for (std::size_t j = 0; j < nb; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

// C[MxN] += A[MxK] * B[NxK]^T
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
  }
}

// C[MxN] += A[KxM]^T * B[KxN]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t n0 = 0; n0 < n; n0 += kColumnBlock) {
    const std::size_t nb = std::min(kColumnBlock, n - n0);
    for (std::size_t p = 0; p < k; ++p) {
      const T* brow = b + p * n + n0;
      for (std::size_t i = 0; i < m; ++i) {
        const T av = a[p * m + i];
        T* crow = c + i * n + n0;
        for (std::size_t j = 0; j < nb; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

template <typename T>
void im2col(const T* x, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            std::size_t pad, T* col) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        T* out = col + ((c * k + ki) * k + kj) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ki) - static_cast<std::ptrdiff_t>(pad);
          T* orow = out + y * w;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(orow, orow + w, T(0));
            continue;
          }
          const T* xrow = x + (c * h + static_cast<std::size_t>(sy)) * w;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const auto sx = static_cast<std::ptrdiff_t>(xx + kj) - static_cast<std::ptrdiff_t>(pad);
            orow[xx] = (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) ? T(0) : xrow[sx];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
                std::size_t pad, T* x) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const T* in = col + ((c * k + ki) * k + kj) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ki) - static_cast<std::ptrdiff_t>(pad);
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          T* xrow = x + (c * h + static_cast<std::size_t>(sy)) * w;
          const T* irow = in + y * w;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const auto sx = static_cast<std::ptrdiff_t>(xx + kj) - static_cast<std::ptrdiff_t>(pad);
            if (sx >= 0 && sx < static_cast<std::ptrdiff_t>(w)) xrow[sx] += irow[xx];
          }
        }
      }
    }
  }
}

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

RoutingScope::RoutingScope(RoutingTape& tape, Mode mode)
    : prev_tape_(g_routing.tape), prev_mode_(g_routing.mode), prev_cursor_(g_routing.cursor) {
  g_routing = {&tape, mode, 0};
}

RoutingScope::~RoutingScope() { g_routing = {prev_tape_, prev_mode_, prev_cursor_}; }

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t pad) {
  require(x.rank() == 4 && weight.rank() == 4, "conv2d: expects rank-4 input and weight");
  const std::size_t batch = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t co = weight.dim(0), k = weight.dim(2);
  require(weight.dim(1) == ci, "conv2d: input has " + std::to_string(ci) + " channels, weight expects " +
                                   std::to_string(weight.dim(1)));
  require(weight.dim(3) == k && 2 * pad + 1 == k, "conv2d: only square kernels with 'same' padding");
  require(bias.numel() == co, "conv2d: bias size mismatch");

  const std::size_t hw = h * w, rows = ci * k * k;
  const bool pointwise = k == 1;
  std::vector<T> out(batch * co * hw);
  std::vector<T> col(pointwise ? 0 : rows * hw);
  const T* xv = x.data().data();
  const T* wv = weight.data().data();
  const T* bv = bias.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    T* ob = out.data() + b * co * hw;
    for (std::size_t o = 0; o < co; ++o) std::fill(ob + o * hw, ob + (o + 1) * hw, bv[o]);
    const T* src = xv + b * ci * hw;
    if (!pointwise) {
      im2col(src, ci, h, w, k, pad, col.data());
      src = col.data();
    }
    gemm_nn(co, hw, rows, wv, src, ob);
  }

  return make_result<T>({batch, co, h, w}, std::move(out), {x, weight, bias},
                        [=](Node<T>& self) {
                          auto& xn = *self.inputs[0];
                          auto& wn = *self.inputs[1];
                          auto& bn = *self.inputs[2];
                          const T* dy = self.grad.data();
                          std::vector<T> colb(pointwise ? 0 : rows * hw);
                          std::vector<T> dcol(rows * hw);
                          for (std::size_t b = 0; b < batch; ++b) {
                            const T* dyb = dy + b * co * hw;
                            if (bn.requires_grad) {
                              auto& g = bn.ensure_grad();
                              for (std::size_t o = 0; o < co; ++o) {
                                T s = 0;
                                for (std::size_t i = 0; i < hw; ++i) s += dyb[o * hw + i];
                                g[o] += s;
                              }
                            }
                            const T* src = xn.value.data() + b * ci * hw;
                            if (wn.requires_grad) {
                              if (!pointwise) {
                                im2col(src, ci, h, w, k, pad, colb.data());
                                src = colb.data();
                              }
                              gemm_nt(co, rows, hw, dyb, src, wn.ensure_grad().data());
                            }
                            if (xn.requires_grad) {
                              T* dx = xn.ensure_grad().data() + b * ci * hw;
                              if (pointwise) {
                                gemm_tn(rows, hw, co, wn.value.data(), dyb, dx);
                              } else {
                                std::fill(dcol.begin(), dcol.end(), T(0));
                                gemm_tn(rows, hw, co, wn.value.data(), dyb, dcol.data());
                                col2im_add(dcol.data(), ci, h, w, k, pad, dx);
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> mfm(const Tensor<T>& x) {
  require(x.rank() >= 2, "mfm: expects a channel dimension");
  const std::size_t batch = x.dim(0), c = x.dim(1);
  require(c % 2 == 0, "mfm: channel count " + std::to_string(c) + " is odd");
  const std::size_t inner = x.numel() / (batch * c);
  const std::size_t half = c / 2;
  Shape shape = x.shape();
  shape[1] = half;
  std::vector<T> out(x.numel() / 2);
  std::vector<std::uint8_t> second(out.size());
  const auto* replay = replayed_winners(out.size());
  const T* xv = x.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t ch = 0; ch < half; ++ch) {
      const T* lo = xv + (b * c + ch) * inner;
      const T* hi = xv + (b * c + ch + half) * inner;
      const std::size_t base = (b * half + ch) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const bool take_hi = replay ? (*replay)[base + i] != 0 : hi[i] > lo[i];
        out[base + i] = take_hi ? hi[i] : lo[i];
        second[base + i] = take_hi;
      }
    }
  }
  record_winners(second);
  return make_result<T>(std::move(shape), std::move(out), {x},
                        [=, second = std::move(second)](Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          for (std::size_t b = 0; b < batch; ++b) {
                            for (std::size_t ch = 0; ch < half; ++ch) {
                              const std::size_t base = (b * half + ch) * inner;
                              for (std::size_t i = 0; i < inner; ++i) {
                                const std::size_t src = second[base + i] ? ch + half : ch;
                                g[(b * c + src) * inner + i] += self.grad[base + i];
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x) {
  require(x.rank() == 4, "max_pool2d: expects rank-4 input");
  const std::size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  require(oh > 0 && ow > 0, "max_pool2d: input " + shape_string(x.shape()) + " too small");
  std::vector<T> out(batch * c * oh * ow);
  std::vector<std::uint32_t> arg(out.size());
  const auto* replay = replayed_winners(out.size());
  const T* xv = x.data().data();
  for (std::size_t bc = 0; bc < batch * c; ++bc) {
    const T* plane = xv + bc * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const std::size_t o = (bc * oh + y) * ow + xx;
        std::size_t best = (2 * y) * w + 2 * xx;
        if (replay) {
          best = (*replay)[o];
        } else {
          const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
          for (auto ci : cand) {
            if (plane[ci] > plane[best]) best = ci;
          }
        }
        out[o] = plane[best];
        arg[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  record_winners(arg);
  return make_result<T>({batch, c, oh, ow}, std::move(out), {x},
                        [=, arg = std::move(arg)](Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          const std::size_t plane_out = oh * ow;
                          for (std::size_t o = 0; o < self.grad.size(); ++o) {
                            g[(o / plane_out) * h * w + arg[o]] += self.grad[o];
                          }
                        });
}

template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       Tensor<T>& running_mean, Tensor<T>& running_var, bool train, double momentum,
                       double eps) {
  require(x.rank() == 4, "batch_norm2d: expects rank-4 input");
  const std::size_t batch = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  require(gamma.numel() == c && beta.numel() == c && running_mean.numel() == c && running_var.numel() == c,
          "batch_norm2d: parameter size mismatch");
  const std::size_t count = batch * hw;
  const T* xv = x.data().data();
  std::vector<T> mean(c), inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (train) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = xv + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / count;
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = xv + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / count;
      mean[ch] = static_cast<T>(mu);
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var + eps));
      const double unbiased = count > 1 ? ss / (count - 1) : var;
      auto rm = running_mean.data();
      auto rv = running_var.data();
      rm[ch] = static_cast<T>((1.0 - momentum) * rm[ch] + momentum * mu);
      rv[ch] = static_cast<T>((1.0 - momentum) * rv[ch] + momentum * unbiased);
    } else {
      mean[ch] = running_mean.data()[ch];
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var.data()[ch]) + eps));
    }
  }
  std::vector<T> xhat(x.numel()), out(x.numel());
  const T* gv = gamma.data().data();
  const T* bv = beta.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const T v = (xv[base + i] - mean[ch]) * inv_std[ch];
        xhat[base + i] = v;
        out[base + i] = gv[ch] * v + bv[ch];
      }
    }
  }
  return make_result<T>(x.shape(), std::move(out), {x, gamma, beta},
                        [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
                          auto& xn = *self.inputs[0];
                          auto& gn = *self.inputs[1];
                          auto& bn = *self.inputs[2];
                          const T* dy = self.grad.data();
                          for (std::size_t ch = 0; ch < c; ++ch) {
                            double sum_dy = 0.0, sum_dy_xhat = 0.0;
                            for (std::size_t b = 0; b < batch; ++b) {
                              const std::size_t base = (b * c + ch) * hw;
                              for (std::size_t i = 0; i < hw; ++i) {
                                sum_dy += dy[base + i];
                                sum_dy_xhat += static_cast<double>(dy[base + i]) * xhat[base + i];
                              }
                            }
                            if (gn.requires_grad) gn.ensure_grad()[ch] += static_cast<T>(sum_dy_xhat);
                            if (bn.requires_grad) bn.ensure_grad()[ch] += static_cast<T>(sum_dy);
                            if (!xn.requires_grad) continue;
                            auto& dx = xn.ensure_grad();
                            const T g = gn.value[ch];
                            if (train) {
                              const T m1 = static_cast<T>(sum_dy / count);
                              const T m2 = static_cast<T>(sum_dy_xhat / count);
                              for (std::size_t b = 0; b < batch; ++b) {
                                const std::size_t base = (b * c + ch) * hw;
                                for (std::size_t i = 0; i < hw; ++i) {
                                  dx[base + i] += g * inv_std[ch] * (dy[base + i] - m1 - xhat[base + i] * m2);
                                }
                              }
                            } else {
                              for (std::size_t b = 0; b < batch; ++b) {
                                const std::size_t base = (b * c + ch) * hw;
                                for (std::size_t i = 0; i < hw; ++i) dx[base + i] += g * inv_std[ch] * dy[base + i];
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> time_sequence(const Tensor<T>& x) {
  require(x.rank() == 4, "time_sequence: expects rank-4 input");
  const std::size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t feat = c * h;
  std::vector<T> out(x.numel());
  const T* xv = x.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        const T* row = xv + ((b * c + ch) * h + y) * w;
        for (std::size_t t = 0; t < w; ++t) out[(b * w + t) * feat + ch * h + y] = row[t];
      }
    }
  }
  return make_result<T>({batch, w, feat}, std::move(out), {x}, [=](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
          T* row = g.data() + ((b * c + ch) * h + y) * w;
          for (std::size_t t = 0; t < w; ++t) row[t] += self.grad[(b * w + t) * feat + ch * h + y];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> lstm(const Tensor<T>& x, const LstmWeights<T>& wts, bool reverse) {
  require(x.rank() == 3, "lstm: expects [B,T,F] input");
  const std::size_t batch = x.dim(0), steps = x.dim(1), in = x.dim(2);
  const std::size_t gates = wts.w_ih.dim(0), hid = gates / 4;
  require(gates == 4 * hid && wts.w_ih.dim(1) == in, "lstm: input width " + std::to_string(in) +
                                                         " does not match weights " +
                                                         shape_string(wts.w_ih.shape()));
  require(wts.w_hh.dim(0) == gates && wts.w_hh.dim(1) == hid && wts.bias.numel() == gates,
          "lstm: recurrent weight shape mismatch");

  // Per step activations, stored in processing order: i f g o, c, tanh(c).
  std::vector<T> act(batch * steps * gates), cell(batch * steps * hid), tcell(batch * steps * hid);
  std::vector<T> out(batch * steps * hid);
  const T* wih = wts.w_ih.data().data();
  const T* whh = wts.w_hh.data().data();
  const T* bias = wts.bias.data().data();
  std::vector<T> pre(steps * gates), h(hid);
  for (std::size_t b = 0; b < batch; ++b) {
    std::fill(pre.begin(), pre.end(), T(0));
    gemm_nt(steps, gates, in, x.data().data() + b * steps * in, wih, pre.data());
    std::fill(h.begin(), h.end(), T(0));
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t t = reverse ? steps - 1 - s : s;
      T* z = act.data() + (b * steps + s) * gates;
      for (std::size_t j = 0; j < gates; ++j) z[j] = pre[t * gates + j] + bias[j];
      gemm_nt(1, gates, hid, h.data(), whh, z);
      T* cs = cell.data() + (b * steps + s) * hid;
      T* ts = tcell.data() + (b * steps + s) * hid;
      const T* cprev = s ? cs - hid : nullptr;
      for (std::size_t j = 0; j < hid; ++j) {
        const T ig = sigmoid(z[j]);
        const T fg = sigmoid(z[hid + j]);
        const T gg = std::tanh(z[2 * hid + j]);
        const T og = sigmoid(z[3 * hid + j]);
        z[j] = ig;
        z[hid + j] = fg;
        z[2 * hid + j] = gg;
        z[3 * hid + j] = og;
        cs[j] = (cprev ? fg * cprev[j] : T(0)) + ig * gg;
        ts[j] = std::tanh(cs[j]);
        h[j] = og * ts[j];
        out[(b * steps + t) * hid + j] = h[j];
      }
    }
  }

  return make_result<T>(
      {batch, steps, hid}, std::move(out), {x, wts.w_ih, wts.w_hh, wts.bias},
      [=, act = std::move(act), cell = std::move(cell), tcell = std::move(tcell)](Node<T>& self) {
        auto& xn = *self.inputs[0];
        auto& wihn = *self.inputs[1];
        auto& whhn = *self.inputs[2];
        auto& bn = *self.inputs[3];
        std::vector<T> dz(steps * gates), hprev(steps * hid), dh(hid), dc(hid), xs(steps * in);
        for (std::size_t b = 0; b < batch; ++b) {
          std::fill(dh.begin(), dh.end(), T(0));
          std::fill(dc.begin(), dc.end(), T(0));
          for (std::size_t s = steps; s-- > 0;) {
            const std::size_t t = reverse ? steps - 1 - s : s;
            const T* z = act.data() + (b * steps + s) * gates;
            const T* ts = tcell.data() + (b * steps + s) * hid;
            const T* cprev = s ? cell.data() + (b * steps + s - 1) * hid : nullptr;
            T* d = dz.data() + s * gates;
            for (std::size_t j = 0; j < hid; ++j) {
              const T ig = z[j], fg = z[hid + j], gg = z[2 * hid + j], og = z[3 * hid + j];
              const T dhj = dh[j] + self.grad[(b * steps + t) * hid + j];
              const T dcj = dc[j] + dhj * og * (T(1) - ts[j] * ts[j]);
              d[j] = dcj * gg * ig * (T(1) - ig);
              d[hid + j] = cprev ? dcj * cprev[j] * fg * (T(1) - fg) : T(0);
              d[2 * hid + j] = dcj * ig * (T(1) - gg * gg);
              d[3 * hid + j] = dhj * ts[j] * og * (T(1) - og);
              dc[j] = dcj * fg;
            }
            std::fill(dh.begin(), dh.end(), T(0));
            gemm_nn(1, hid, gates, d, whhn.value.data(), dh.data());
          }
          // Gather h_{s-1} and x_t in processing order for the weight gradients.
          for (std::size_t s = 0; s < steps; ++s) {
            const std::size_t t = reverse ? steps - 1 - s : s;
            T* hp = hprev.data() + s * hid;
            if (s == 0) {
              std::fill(hp, hp + hid, T(0));
            } else {
              const T* zp = act.data() + (b * steps + s - 1) * gates;
              const T* tp = tcell.data() + (b * steps + s - 1) * hid;
              for (std::size_t j = 0; j < hid; ++j) hp[j] = zp[3 * hid + j] * tp[j];
            }
            std::copy_n(xn.value.data() + (b * steps + t) * in, in, xs.data() + s * in);
          }
          if (whhn.requires_grad) gemm_tn(gates, hid, steps, dz.data(), hprev.data(), whhn.ensure_grad().data());
          if (wihn.requires_grad) gemm_tn(gates, in, steps, dz.data(), xs.data(), wihn.ensure_grad().data());
          if (bn.requires_grad) {
            auto& g = bn.ensure_grad();
            for (std::size_t s = 0; s < steps; ++s) {
              for (std::size_t j = 0; j < gates; ++j) g[j] += dz[s * gates + j];
            }
          }
          if (xn.requires_grad) {
            std::vector<T> dxs(steps * in, T(0));
            gemm_nn(steps, in, gates, dz.data(), wihn.value.data(), dxs.data());
            auto& g = xn.ensure_grad();
            for (std::size_t s = 0; s < steps; ++s) {
              const std::size_t t = reverse ? steps - 1 - s : s;
              T* dst = g.data() + (b * steps + t) * in;
              for (std::size_t j = 0; j < in; ++j) dst[j] += dxs[s * in + j];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0) && a.dim(1) == b.dim(1),
          "concat_last: shape mismatch");
  const std::size_t rows = a.dim(0) * a.dim(1), fa = a.dim(2), fb = b.dim(2);
  std::vector<T> out(rows * (fa + fb));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().data() + r * fa, fa, out.data() + r * (fa + fb));
    std::copy_n(b.data().data() + r * fb, fb, out.data() + r * (fa + fb) + fa);
  }
  return make_result<T>({a.dim(0), a.dim(1), fa + fb}, std::move(out), {a, b}, [=](Node<T>& self) {
    auto& an = *self.inputs[0];
    auto& bn = *self.inputs[1];
    for (std::size_t r = 0; r < rows; ++r) {
      const T* g = self.grad.data() + r * (fa + fb);
      if (an.requires_grad) {
        T* d = an.ensure_grad().data() + r * fa;
        for (std::size_t j = 0; j < fa; ++j) d[j] += g[j];
      }
      if (bn.requires_grad) {
        T* d = bn.ensure_grad().data() + r * fb;
        for (std::size_t j = 0; j < fb; ++j) d[j] += g[fa + j];
      }
    }
  });
}

template <typename T>
Tensor<T> blstm(const Tensor<T>& x, const LstmWeights<T>& forward, const LstmWeights<T>& backward) {
  return concat_last(lstm(x, forward, false), lstm(x, backward, true));
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " + shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto& g = in->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& an = *self.inputs[0];
    auto& bn = *self.inputs[1];
    if (an.requires_grad) {
      auto& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn.value[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an.value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return make_result<T>(a.shape(), std::move(out), {a}, [factor](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v;
  return make_result<T>({}, {s}, {a}, [](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean_time(const Tensor<T>& x) {
  require(x.rank() == 3, "mean_time: expects [B,T,F] input");
  const std::size_t batch = x.dim(0), steps = x.dim(1), feat = x.dim(2);
  std::vector<T> out(batch * feat, T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const T* row = x.data().data() + (b * steps + t) * feat;
      for (std::size_t j = 0; j < feat; ++j) out[b * feat + j] += row[j];
    }
    for (std::size_t j = 0; j < feat; ++j) out[b * feat + j] /= static_cast<T>(steps);
  }
  return make_result<T>({batch, feat}, std::move(out), {x}, [=](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    const T inv = T(1) / static_cast<T>(steps);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < steps; ++t) {
        T* row = g.data() + (b * steps + t) * feat;
        for (std::size_t j = 0; j < feat; ++j) row[j] += self.grad[b * feat + j] * inv;
      }
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require(x.rank() == 2 && weight.rank() == 2, "linear: expects [B,In] input and [Out,In] weight");
  const std::size_t batch = x.dim(0), in = x.dim(1), outf = weight.dim(0);
  require(weight.dim(1) == in, "linear: input width " + std::to_string(in) + " vs weight " +
                                   shape_string(weight.shape()));
  const bool has_bias = bias.defined();
  require(!has_bias || bias.numel() == outf, "linear: bias size mismatch");
  std::vector<T> out(batch * outf, T(0));
  if (has_bias) {
    for (std::size_t b = 0; b < batch; ++b) std::copy_n(bias.data().data(), outf, out.data() + b * outf);
  }
  gemm_nt(batch, outf, in, x.data().data(), weight.data().data(), out.data());
  std::vector<Tensor<T>> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result<T>({batch, outf}, std::move(out), inputs, [=](Node<T>& self) {
    auto& xn = *self.inputs[0];
    auto& wn = *self.inputs[1];
    if (xn.requires_grad) gemm_nn(batch, in, outf, self.grad.data(), wn.value.data(), xn.ensure_grad().data());
    if (wn.requires_grad) gemm_tn(outf, in, batch, self.grad.data(), xn.value.data(), wn.ensure_grad().data());
    if (has_bias && self.inputs[2]->requires_grad) {
      auto& g = self.inputs[2]->ensure_grad();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < outf; ++j) g[j] += self.grad[b * outf + j];
      }
    }
  });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool train, std::mt19937_64& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
  if (!train || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const T scale_kept = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.numel());
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask[i] = keep(rng) ? scale_kept : T(0);
    out[i] = x.data()[i] * mask[i];
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& x, const Tensor<T>& w) {
  require(x.rank() == 2 && w.rank() == 2 && x.dim(1) == w.dim(1), "cosine_similarity: shape mismatch");
  const std::size_t batch = x.dim(0), k = w.dim(0), e = x.dim(1);
  auto norms = [e](const T* p, std::size_t rows, const char* what) {
    std::vector<T> n(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      n[r] = std::sqrt(dot(p + r * e, p + r * e, e));
      if (!(n[r] > T(0))) throw NumericalError(std::string("cosine_similarity: zero-norm ") + what);
    }
    return n;
  };
  const auto xn = norms(x.data().data(), batch, "embedding");
  const auto wn = norms(w.data().data(), k, "class vector");
  std::vector<T> out(batch * k);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < k; ++j) {
      out[b * k + j] = dot(x.data().data() + b * e, w.data().data() + j * e, e) / (xn[b] * wn[j]);
    }
  }
  return make_result<T>({batch, k}, out, {x, w}, [=](Node<T>& self) {
    auto& xnode = *self.inputs[0];
    auto& wnode = *self.inputs[1];
    for (std::size_t b = 0; b < batch; ++b) {
      const T* xv = xnode.value.data() + b * e;
      for (std::size_t j = 0; j < k; ++j) {
        const T g = self.grad[b * k + j];
        if (g == T(0)) continue;
        const T* wv = wnode.value.data() + j * e;
        const T cosv = out[b * k + j];
        if (xnode.requires_grad) {
          T* dx = xnode.ensure_grad().data() + b * e;
          for (std::size_t i = 0; i < e; ++i) {
            dx[i] += g * (wv[i] / (xn[b] * wn[j]) - cosv * xv[i] / (xn[b] * xn[b]));
          }
        }
        if (wnode.requires_grad) {
          T* dw = wnode.ensure_grad().data() + j * e;
          for (std::size_t i = 0; i < e; ++i) {
            dw[i] += g * (xv[i] / (xn[b] * wn[j]) - cosv * wv[i] / (wn[j] * wn[j]));
          }
        }
      }
    }
  });
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels, double scale_factor,
                                double margin) {
  require(logits.rank() == 2, "softmax_cross_entropy: expects [B,K] logits");
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  require(labels.size() == batch, "softmax_cross_entropy: label count mismatch");
  std::vector<T> prob(batch * k);
  std::vector<int> lab(labels.begin(), labels.end());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    require(lab[b] >= 0 && static_cast<std::size_t>(lab[b]) < k, "softmax_cross_entropy: label out of range");
    std::vector<double> z(k);
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      z[j] = scale_factor * (logits.data()[b * k + j] - (static_cast<int>(j) == lab[b] ? margin : 0.0));
      zmax = std::max(zmax, z[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(z[j] - zmax);
    const double lse = zmax + std::log(s);
    loss += lse - z[lab[b]];
    for (std::size_t j = 0; j < k; ++j) prob[b * k + j] = static_cast<T>(std::exp(z[j] - lse));
  }
  loss /= batch;
  return make_result<T>({}, {static_cast<T>(loss)}, {logits},
                        [=, prob = std::move(prob), lab = std::move(lab)](Node<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          const T coef = static_cast<T>(scale_factor / batch) * self.grad[0];
                          for (std::size_t b = 0; b < batch; ++b) {
                            for (std::size_t j = 0; j < k; ++j) {
                              const T target = static_cast<int>(j) == lab[b] ? T(1) : T(0);
                              g[b * k + j] += coef * (prob[b * k + j] - target);
                            }
                          }
                        });
}

#define ANTISPOOF_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t);        \
  template Tensor<T> mfm(const Tensor<T>&);                                                            \
  template Tensor<T> max_pool2d(const Tensor<T>&);                                                     \
  template Tensor<T> batch_norm2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&,    \
                                  Tensor<T>&, bool, double, double);                                   \
  template Tensor<T> time_sequence(const Tensor<T>&);                                                  \
  template Tensor<T> lstm(const Tensor<T>&, const LstmWeights<T>&, bool);                              \
  template Tensor<T> concat_last(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> blstm(const Tensor<T>&, const LstmWeights<T>&, const LstmWeights<T>&);            \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> scale(const Tensor<T>&, T);                                                       \
  template Tensor<T> sum(const Tensor<T>&);                                                            \
  template Tensor<T> mean_time(const Tensor<T>&);                                                      \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> dropout(const Tensor<T>&, double, bool, std::mt19937_64&);                        \
  template Tensor<T> cosine_similarity(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>, double, double);

ANTISPOOF_INSTANTIATE_OPS(float)
ANTISPOOF_INSTANTIATE_OPS(double)

#undef ANTISPOOF_INSTANTIATE_OPS

}  // namespace antispoof::nn
