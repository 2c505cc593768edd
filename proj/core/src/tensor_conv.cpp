#include <cmath>
#include <cstring>

#include "mjo/tensor.hpp"

namespace mjo::ad {

void Conv3dSpec::validate() const {
  if (in_channels <= 0 || out_channels <= 0) throw ModelError("conv3d: non-positive channels");
  if (kt <= 0 || kh <= 0 || kw <= 0 || kt % 2 == 0 || kh % 2 == 0 || kw % 2 == 0)
    throw ModelError("conv3d: kernel extents must be positive and odd");
}

namespace {

struct ConvDims {
  int n, c, t, h, w;        // input extents
  int pt, ph, pw;           // one-sided padding
  int tp, hp, wp;           // padded extents
  std::size_t plane() const { return static_cast<std::size_t>(hp) * wp; }
  std::size_t chan() const { return static_cast<std::size_t>(tp) * hp * wp; }
};

/// Fills the padded scratch block for one sample: dst has extents
/// (c, tp, hp, wp), zero-initialized by the caller on first use.
void fill_padded(const ConvDims& d, const Conv3dSpec& spec, const double* src, double* dst) {
  for (int c = 0; c < d.c; ++c) {
    const double* sc = src + static_cast<std::size_t>(c) * d.t * d.h * d.w;
    double* dc = dst + static_cast<std::size_t>(c) * d.chan();
    for (int tp = 0; tp < d.tp; ++tp) {
      int ts = tp - d.pt;
      if (ts < 0 || ts >= d.t) {
        if (spec.pad_t == PadMode::Circular) {
          ts = ((ts % d.t) + d.t) % d.t;
        } else {
          std::memset(dc + static_cast<std::size_t>(tp) * d.plane(), 0,
                      d.plane() * sizeof(double));
          continue;
        }
      }
      for (int hp = 0; hp < d.hp; ++hp) {
        int hs = hp - d.ph;
        double* drow = dc + static_cast<std::size_t>(tp) * d.plane() + static_cast<std::size_t>(hp) * d.wp;
        if (hs < 0 || hs >= d.h) {
          if (spec.pad_h == PadMode::Circular) {
            hs = ((hs % d.h) + d.h) % d.h;
          } else {
            std::memset(drow, 0, static_cast<std::size_t>(d.wp) * sizeof(double));
            continue;
          }
        }
        const double* srow = sc + (static_cast<std::size_t>(ts) * d.h + hs) * d.w;
        if (spec.pad_w == PadMode::Circular) {
          for (int wp = 0; wp < d.pw; ++wp) drow[wp] = srow[d.w - d.pw + wp];
          std::memcpy(drow + d.pw, srow, static_cast<std::size_t>(d.w) * sizeof(double));
          for (int wp = 0; wp < d.pw; ++wp) drow[d.pw + d.w + wp] = srow[wp];
        } else {
          std::memset(drow, 0, static_cast<std::size_t>(d.pw) * sizeof(double));
          std::memcpy(drow + d.pw, srow, static_cast<std::size_t>(d.w) * sizeof(double));
          std::memset(drow + d.pw + d.w, 0, static_cast<std::size_t>(d.pw) * sizeof(double));
        }
      }
    }
  }
}

/// Dot product with eight independent accumulator lanes. The lane split
/// fixes the summation order (deterministic) while letting the compiler
/// keep the lanes in one vector register.
inline double dot_lanes(const double* a, const double* b, int n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int w = 0;
  for (; w + 8 <= n; w += 8)
    for (int k = 0; k < 8; ++k) acc[k] += a[w + k] * b[w + k];
  double tail = 0.0;
  for (; w < n; ++w) tail += a[w] * b[w];
  return (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) + tail;
}

/// out rows += correlation of padded block against one kernel; kernel is
/// addressed through `kidx` so the same loop serves forward (identity)
/// and input-gradient (flipped) passes.
inline void correlate_block(const ConvDims& d, const double* padded_chan, const double* kernel,
                            bool flip, double* out_chan, int t_extent, int h_extent, int w_extent,
                            int kt, int kh, int kw) {
  for (int ktt = 0; ktt < kt; ++ktt) {
    for (int khh = 0; khh < kh; ++khh) {
      const double* krow =
          flip ? kernel + (static_cast<std::size_t>(kt - 1 - ktt) * kh + (kh - 1 - khh)) * kw
               : kernel + (static_cast<std::size_t>(ktt) * kh + khh) * kw;
      for (int t = 0; t < t_extent; ++t) {
        const double* pplane = padded_chan + static_cast<std::size_t>(t + ktt) * d.plane();
        for (int h = 0; h < h_extent; ++h) {
          const double* prow = pplane + static_cast<std::size_t>(h + khh) * d.wp;
          double* orow =
              out_chan + (static_cast<std::size_t>(t) * h_extent + h) * w_extent;
          for (int kww = 0; kww < kw; ++kww) {
            const double kv = flip ? krow[kw - 1 - kww] : krow[kww];
            if (kv == 0.0) continue;
            const double* p = prow + kww;
            for (int w = 0; w < w_extent; ++w) orow[w] += kv * p[w];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv3d(const Tensor& input, const Conv3dSpec& spec, const Tensor& weight,
              const Tensor& bias) {
  spec.validate();
  if (input.shape().size() != 5) throw ModelError("conv3d: input must be (N,C,T,H,W)");
  const int n = input.shape()[0], c = input.shape()[1], t = input.shape()[2],
            h = input.shape()[3], w = input.shape()[4];
  if (c != spec.in_channels) throw ModelError("conv3d: input channels do not match spec");
  if (weight.shape() != Shape{spec.out_channels, spec.in_channels, spec.kt, spec.kh, spec.kw})
    throw ModelError("conv3d: weight shape mismatch");
  if (bias.shape() != Shape{spec.out_channels}) throw ModelError("conv3d: bias shape mismatch");

  ConvDims d{n, c, t, h, w, spec.kt / 2, spec.kh / 2, spec.kw / 2, 0, 0, 0};
  d.tp = t + spec.kt - 1;
  d.hp = h + spec.kh - 1;
  d.wp = w + spec.kw - 1;

  const int oc_n = spec.out_channels;
  const std::size_t out_chan_sz = static_cast<std::size_t>(t) * h * w;
  const std::size_t in_chan_sz = out_chan_sz;
  const std::size_t ksz = static_cast<std::size_t>(spec.kt) * spec.kh * spec.kw;

  std::vector<double> out(static_cast<std::size_t>(n) * oc_n * out_chan_sz);
  std::vector<double> padded(static_cast<std::size_t>(c) * d.chan());

  auto in_v = input.values();
  auto w_v = weight.values();
  auto b_v = bias.values();

  for (int s = 0; s < n; ++s) {
    fill_padded(d, spec, in_v.data() + static_cast<std::size_t>(s) * c * in_chan_sz, padded.data());
    for (int oc = 0; oc < oc_n; ++oc) {
      double* ochan = out.data() + (static_cast<std::size_t>(s) * oc_n + oc) * out_chan_sz;
      const double bv = b_v[oc];
      for (std::size_t i = 0; i < out_chan_sz; ++i) ochan[i] = bv;
      for (int ic = 0; ic < c; ++ic) {
        const double* kernel = w_v.data() + (static_cast<std::size_t>(oc) * c + ic) * ksz;
        correlate_block(d, padded.data() + static_cast<std::size_t>(ic) * d.chan(), kernel,
                        /*flip=*/false, ochan, t, h, w, spec.kt, spec.kh, spec.kw);
      }
    }
  }

  return make_op(
      "conv3d", {n, oc_n, t, h, w}, std::move(out), {input.node(), weight.node(), bias.node()},
      [spec, d, oc_n, out_chan_sz, in_chan_sz, ksz](Node& self) {
        Node& p_in = *self.parents[0];
        Node& p_w = *self.parents[1];
        Node& p_b = *self.parents[2];
        const int n = d.n, c = d.c, t = d.t, h = d.h, w = d.w;

        if (p_b.requires_grad) {
          p_b.ensure_grad();
          for (int s = 0; s < n; ++s)
            for (int oc = 0; oc < oc_n; ++oc) {
              const double* grow = self.grad.data() + (static_cast<std::size_t>(s) * oc_n + oc) * out_chan_sz;
              double acc = 0.0;
              for (std::size_t i = 0; i < out_chan_sz; ++i) acc += grow[i];
              p_b.grad[oc] += acc;
            }
        }

        if (p_in.requires_grad) {
          p_in.ensure_grad();
          // dIn = correlation of padded dOut with the flipped kernels.
          ConvDims dg = d;
          dg.c = oc_n;
          std::vector<double> padded_grad(static_cast<std::size_t>(oc_n) * dg.chan());
          for (int s = 0; s < n; ++s) {
            fill_padded(dg, spec, self.grad.data() + static_cast<std::size_t>(s) * oc_n * out_chan_sz,
                        padded_grad.data());
            for (int ic = 0; ic < c; ++ic) {
              double* gichan = p_in.grad.data() + (static_cast<std::size_t>(s) * c + ic) * in_chan_sz;
              for (int oc = 0; oc < oc_n; ++oc) {
                const double* kernel = p_w.value.data() + (static_cast<std::size_t>(oc) * c + ic) * ksz;
                correlate_block(dg, padded_grad.data() + static_cast<std::size_t>(oc) * dg.chan(),
                                kernel, /*flip=*/true, gichan, t, h, w, spec.kt, spec.kh, spec.kw);
              }
            }
          }
        }

        if (p_w.requires_grad) {
          p_w.ensure_grad();
          std::vector<double> padded(static_cast<std::size_t>(c) * d.chan());
          for (int s = 0; s < n; ++s) {
            fill_padded(d, spec, p_in.value.data() + static_cast<std::size_t>(s) * c * in_chan_sz,
                        padded.data());
            for (int oc = 0; oc < oc_n; ++oc) {
              const double* gchan = self.grad.data() + (static_cast<std::size_t>(s) * oc_n + oc) * out_chan_sz;
              for (int ic = 0; ic < c; ++ic) {
                const double* pchan = padded.data() + static_cast<std::size_t>(ic) * d.chan();
                double* kgrad = p_w.grad.data() + (static_cast<std::size_t>(oc) * c + ic) * ksz;
                for (int ktt = 0; ktt < spec.kt; ++ktt)
                  for (int khh = 0; khh < spec.kh; ++khh) {
                    double* kgrow = kgrad + (static_cast<std::size_t>(ktt) * spec.kh + khh) * spec.kw;
                    for (int tt = 0; tt < t; ++tt) {
                      const double* pplane = pchan + static_cast<std::size_t>(tt + ktt) * d.plane();
                      for (int hh = 0; hh < h; ++hh) {
                        const double* prow = pplane + static_cast<std::size_t>(hh + khh) * d.wp;
                        const double* grow = gchan + (static_cast<std::size_t>(tt) * h + hh) * w;
                        for (int kww = 0; kww < spec.kw; ++kww)
                          kgrow[kww] += dot_lanes(grow, prow + kww, w);
                      }
                    }
                  }
              }
            }
          }
        }
      });
}

Tensor pool_avg(const Tensor& input, std::array<int, 3> factors) {
  if (input.shape().size() != 5) throw ModelError("pool_avg: input must be (N,C,T,H,W)");
  for (int f : factors)
    if (f <= 0) throw ModelError("pool_avg: zero or negative factor");
  const int n = input.shape()[0], c = input.shape()[1], t = input.shape()[2],
            h = input.shape()[3], w = input.shape()[4];
  const int to = (t + factors[0] - 1) / factors[0];
  const int ho = (h + factors[1] - 1) / factors[1];
  const int wo = (w + factors[2] - 1) / factors[2];

  std::vector<double> out(static_cast<std::size_t>(n) * c * to * ho * wo, 0.0);
  auto iv = input.values();
  auto in_at = [&](int s, int cc, int tt, int hh, int ww) {
    return iv[(((static_cast<std::size_t>(s) * c + cc) * t + tt) * h + hh) * w + ww];
  };
  for (int s = 0; s < n; ++s)
    for (int cc = 0; cc < c; ++cc)
      for (int ti = 0; ti < to; ++ti)
        for (int hi = 0; hi < ho; ++hi)
          for (int wi = 0; wi < wo; ++wi) {
            const int t0 = ti * factors[0], t1 = std::min(t0 + factors[0], t);
            const int h0 = hi * factors[1], h1 = std::min(h0 + factors[1], h);
            const int w0 = wi * factors[2], w1 = std::min(w0 + factors[2], w);
            double acc = 0.0;
            for (int tt = t0; tt < t1; ++tt)
              for (int hh = h0; hh < h1; ++hh)
                for (int ww = w0; ww < w1; ++ww) acc += in_at(s, cc, tt, hh, ww);
            const int count = (t1 - t0) * (h1 - h0) * (w1 - w0);
            out[(((static_cast<std::size_t>(s) * c + cc) * to + ti) * ho + hi) * wo + wi] =
                acc / count;
          }

  return make_op("pool_avg", {n, c, to, ho, wo}, std::move(out), {input.node()},
                 [n, c, t, h, w, to, ho, wo, factors](Node& self) {
                   Node& p = *self.parents[0];
                   p.ensure_grad();
                   for (int s = 0; s < n; ++s)
                     for (int cc = 0; cc < c; ++cc)
                       for (int ti = 0; ti < to; ++ti)
                         for (int hi = 0; hi < ho; ++hi)
                           for (int wi = 0; wi < wo; ++wi) {
                             const int t0 = ti * factors[0], t1 = std::min(t0 + factors[0], t);
                             const int h0 = hi * factors[1], h1 = std::min(h0 + factors[1], h);
                             const int w0 = wi * factors[2], w1 = std::min(w0 + factors[2], w);
                             const int count = (t1 - t0) * (h1 - h0) * (w1 - w0);
                             const double g =
                                 self.grad[(((static_cast<std::size_t>(s) * c + cc) * to + ti) * ho +
                                            hi) * wo + wi] / count;
                             for (int tt = t0; tt < t1; ++tt)
                               for (int hh = h0; hh < h1; ++hh)
                                 for (int ww = w0; ww < w1; ++ww)
                                   p.grad[(((static_cast<std::size_t>(s) * c + cc) * t + tt) * h +
                                           hh) * w + ww] += g;
                           }
                 });
}

Tensor upsample_nn(const Tensor& input, std::array<int, 3> target_extents) {
  if (input.shape().size() != 5) throw ModelError("upsample_nn: input must be (N,C,T,H,W)");
  const int n = input.shape()[0], c = input.shape()[1], t = input.shape()[2],
            h = input.shape()[3], w = input.shape()[4];
  const int to = target_extents[0], ho = target_extents[1], wo = target_extents[2];
  if (to <= 0 || ho <= 0 || wo <= 0) throw ModelError("upsample_nn: bad target extents");

  std::vector<int> tmap(to), hmap(ho), wmap(wo);
  for (int i = 0; i < to; ++i) tmap[i] = static_cast<int>((static_cast<std::int64_t>(i) * t) / to);
  for (int i = 0; i < ho; ++i) hmap[i] = static_cast<int>((static_cast<std::int64_t>(i) * h) / ho);
  for (int i = 0; i < wo; ++i) wmap[i] = static_cast<int>((static_cast<std::int64_t>(i) * w) / wo);

  std::vector<double> out(static_cast<std::size_t>(n) * c * to * ho * wo);
  auto iv = input.values();
  for (int s = 0; s < n; ++s)
    for (int cc = 0; cc < c; ++cc)
      for (int ti = 0; ti < to; ++ti)
        for (int hi = 0; hi < ho; ++hi) {
          const double* irow =
              &iv[(((static_cast<std::size_t>(s) * c + cc) * t + tmap[ti]) * h + hmap[hi]) * w];
          double* orow =
              &out[(((static_cast<std::size_t>(s) * c + cc) * to + ti) * ho + hi) * wo];
          for (int wi = 0; wi < wo; ++wi) orow[wi] = irow[wmap[wi]];
        }

  return make_op("upsample_nn", {n, c, to, ho, wo}, std::move(out), {input.node()},
                 [n, c, t, h, w, to, ho, wo, tmap, hmap, wmap](Node& self) {
                   Node& p = *self.parents[0];
                   p.ensure_grad();
                   for (int s = 0; s < n; ++s)
                     for (int cc = 0; cc < c; ++cc)
                       for (int ti = 0; ti < to; ++ti)
                         for (int hi = 0; hi < ho; ++hi) {
                           double* irow = &p.grad[(((static_cast<std::size_t>(s) * c + cc) * t +
                                                    tmap[ti]) * h + hmap[hi]) * w];
                           const double* orow =
                               &self.grad[(((static_cast<std::size_t>(s) * c + cc) * to + ti) * ho +
                                           hi) * wo];
                           for (int wi = 0; wi < wo; ++wi) irow[wmap[wi]] += orow[wi];
                         }
                 });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 5 || b.shape().size() != 5)
    throw ModelError("concat_channels: inputs must be (N,C,T,H,W)");
  for (int dim : {0, 2, 3, 4})
    if (a.shape()[dim] != b.shape()[dim])
      throw ModelError("concat_channels: non-channel extents differ");
  const int n = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
  const int t = a.shape()[2], h = a.shape()[3], w = a.shape()[4];
  const std::size_t chan = static_cast<std::size_t>(t) * h * w;

  std::vector<double> out(static_cast<std::size_t>(n) * (ca + cb) * chan);
  auto av = a.values(), bv = b.values();
  for (int s = 0; s < n; ++s) {
    std::memcpy(out.data() + static_cast<std::size_t>(s) * (ca + cb) * chan,
                av.data() + static_cast<std::size_t>(s) * ca * chan, ca * chan * sizeof(double));
    std::memcpy(out.data() + (static_cast<std::size_t>(s) * (ca + cb) + ca) * chan,
                bv.data() + static_cast<std::size_t>(s) * cb * chan, cb * chan * sizeof(double));
  }
  return make_op("concat_channels", {n, ca + cb, t, h, w}, std::move(out), {a.node(), b.node()},
                 [n, ca, cb, chan](Node& self) {
                   Node& pa = *self.parents[0];
                   Node& pb = *self.parents[1];
                   if (pa.requires_grad) {
                     pa.ensure_grad();
                     for (int s = 0; s < n; ++s) {
                       const double* g = self.grad.data() + static_cast<std::size_t>(s) * (ca + cb) * chan;
                       double* d = pa.grad.data() + static_cast<std::size_t>(s) * ca * chan;
                       for (std::size_t i = 0; i < ca * chan; ++i) d[i] += g[i];
                     }
                   }
                   if (pb.requires_grad) {
                     pb.ensure_grad();
                     for (int s = 0; s < n; ++s) {
                       const double* g =
                           self.grad.data() + (static_cast<std::size_t>(s) * (ca + cb) + ca) * chan;
                       double* d = pb.grad.data() + static_cast<std::size_t>(s) * cb * chan;
                       for (std::size_t i = 0; i < cb * chan; ++i) d[i] += g[i];
                     }
                   }
                 });
}

Tensor band_mean_h(const Tensor& input, int row_begin, int row_end) {
  if (input.shape().size() != 5) throw ModelError("band_mean_h: input must be (N,C,T,H,W)");
  const int n = input.shape()[0], c = input.shape()[1], t = input.shape()[2],
            h = input.shape()[3], w = input.shape()[4];
  if (row_begin < 0 || row_end > h || row_begin >= row_end)
    throw ModelError("band_mean_h: empty or out-of-range band");
  const int rows = row_end - row_begin;
  const double inv = 1.0 / rows;

  std::vector<double> out(static_cast<std::size_t>(n) * c * t * w, 0.0);
  auto iv = input.values();
  for (int s = 0; s < n; ++s)
    for (int cc = 0; cc < c; ++cc)
      for (int tt = 0; tt < t; ++tt) {
        double* orow = &out[((static_cast<std::size_t>(s) * c + cc) * t + tt) * w];
        for (int hh = row_begin; hh < row_end; ++hh) {
          const double* irow =
              &iv[(((static_cast<std::size_t>(s) * c + cc) * t + tt) * h + hh) * w];
          for (int ww = 0; ww < w; ++ww) orow[ww] += irow[ww];
        }
        for (int ww = 0; ww < w; ++ww) orow[ww] *= inv;
      }

  return make_op("band_mean_h", {n, c, t, w}, std::move(out), {input.node()},
                 [n, c, t, h, w, row_begin, row_end, inv](Node& self) {
                   Node& p = *self.parents[0];
                   p.ensure_grad();
                   for (int s = 0; s < n; ++s)
                     for (int cc = 0; cc < c; ++cc)
                       for (int tt = 0; tt < t; ++tt) {
                         const double* grow =
                             &self.grad[((static_cast<std::size_t>(s) * c + cc) * t + tt) * w];
                         for (int hh = row_begin; hh < row_end; ++hh) {
                           double* irow = &p.grad[(((static_cast<std::size_t>(s) * c + cc) * t + tt) *
                                                   h + hh) * w];
                           for (int ww = 0; ww < w; ++ww) irow[ww] += grow[ww] * inv;
                         }
                       }
                 });
}

Tensor channel_affine(const Tensor& input, std::array<double, 3> gain, std::array<double, 3> bias) {
  if (input.shape().size() != 5 || input.shape()[1] != 3)
    throw ModelError("channel_affine: input must be (N,3,T,H,W)");
  const int n = input.shape()[0], c = 3;
  const std::size_t chan =
      static_cast<std::size_t>(input.shape()[2]) * input.shape()[3] * input.shape()[4];
  std::vector<double> out(input.numel());
  auto iv = input.values();
  for (int s = 0; s < n; ++s)
    for (int cc = 0; cc < c; ++cc) {
      const double* irow = iv.data() + (static_cast<std::size_t>(s) * c + cc) * chan;
      double* orow = out.data() + (static_cast<std::size_t>(s) * c + cc) * chan;
      for (std::size_t i = 0; i < chan; ++i) orow[i] = irow[i] * gain[cc] + bias[cc];
    }
  return make_op("channel_affine", input.shape(), std::move(out), {input.node()},
                 [n, c, chan, gain](Node& self) {
                   Node& p = *self.parents[0];
                   p.ensure_grad();
                   for (int s = 0; s < n; ++s)
                     for (int cc = 0; cc < c; ++cc) {
                       const double* grow =
                           self.grad.data() + (static_cast<std::size_t>(s) * c + cc) * chan;
                       double* drow = p.grad.data() + (static_cast<std::size_t>(s) * c + cc) * chan;
                       for (std::size_t i = 0; i < chan; ++i) drow[i] += grow[i] * gain[cc];
                     }
                 });
}

Tensor profiles_to_features(const Tensor& input, std::array<double, 3> norms) {
  if (input.shape().size() != 4 || input.shape()[1] != 3)
    throw ModelError("profiles_to_features: input must be (N,3,T,W)");
  const int n = input.shape()[0], c = 3, t = input.shape()[2], w = input.shape()[3];
  for (double x : norms)
    if (!(x > 0.0)) throw ModelError("profiles_to_features: non-positive norm");

  std::vector<double> out(static_cast<std::size_t>(n) * t * c * w);
  auto iv = input.values();
  for (int s = 0; s < n; ++s)
    for (int cc = 0; cc < c; ++cc)
      for (int tt = 0; tt < t; ++tt) {
        const double* irow = &iv[((static_cast<std::size_t>(s) * c + cc) * t + tt) * w];
        double* orow = &out[(static_cast<std::size_t>(s) * t + tt) * (c * w) +
                            static_cast<std::size_t>(cc) * w];
        const double inv = 1.0 / norms[cc];
        for (int ww = 0; ww < w; ++ww) orow[ww] = irow[ww] * inv;
      }

  return make_op("profiles_to_features", {n, t, c * w}, std::move(out), {input.node()},
                 [n, c, t, w, norms](Node& self) {
                   Node& p = *self.parents[0];
                   p.ensure_grad();
                   for (int s = 0; s < n; ++s)
                     for (int cc = 0; cc < c; ++cc) {
                       const double inv = 1.0 / norms[cc];
                       for (int tt = 0; tt < t; ++tt) {
                         const double* grow = &self.grad[(static_cast<std::size_t>(s) * t + tt) *
                                                         (c * w) + static_cast<std::size_t>(cc) * w];
                         double* drow =
                             &p.grad[((static_cast<std::size_t>(s) * c + cc) * t + tt) * w];
                         for (int ww = 0; ww < w; ++ww) drow[ww] += grow[ww] * inv;
                       }
                     }
                 });
}

}  // namespace mjo::ad
