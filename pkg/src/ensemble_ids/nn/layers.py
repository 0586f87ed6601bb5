"""Layers with hand-written reverse-mode gradients.

Every layer caches what it needs during ``forward`` and returns the input
gradient from ``backward``, accumulating parameter gradients into
``self.grads`` (same keys as ``self.params``). Image tensors are NHWC.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .functional import ActivationConfig, activation_backward, activation_forward, sigmoid


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def build(self, input_shape: tuple, rng: np.random.Generator) -> tuple:
        """Create parameters for ``input_shape`` (without batch dim); return output shape."""
        return input_shape

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def zero_grads(self):
        for k, v in self.params.items():
            self.grads[k] = np.zeros_like(v)

    def config(self) -> dict:
        return {"kind": self.kind}


class Dense(Layer):
    kind = "dense"

    def __init__(self, units: int):
        super().__init__()
        self.units = units

    def build(self, input_shape, rng):
        (fan_in,) = input_shape
        self.params = {
            "W": glorot_uniform(rng, (fan_in, self.units), fan_in, self.units),
            "b": np.zeros(self.units),
        }
        self.zero_grads()
        return (self.units,)

    def forward(self, x):
        self._x = x
        return dense_forward(x, self.params["W"], self.params["b"])

    def backward(self, dout):
        self.grads["W"] += self._x.T @ dout
        self.grads["b"] += dout.sum(axis=0)
        return dout @ self.params["W"].T

    def config(self):
        return {"kind": self.kind, "units": self.units}


def dense_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.shape[-1] != W.shape[0] or W.shape[1:] != b.shape:
        raise ValueError(f"shape mismatch: x {x.shape}, W {W.shape}, b {b.shape}")
    return x @ W + b


class Activation(Layer):
    kind = "activation"

    def __init__(self, cfg):
        super().__init__()
        self.cfg = ActivationConfig.parse(cfg)

    def forward(self, x):
        self._x = x
        self._y = activation_forward(x, self.cfg)
        return self._y

    def backward(self, dout):
        return activation_backward(self._x, self._y, dout, self.cfg)

    def config(self):
        return {"kind": self.kind, "activation": self.cfg.to_dict()}


class Flatten(Layer):
    kind = "flatten"

    def build(self, input_shape, rng):
        return (int(np.prod(input_shape)),)

    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


def gru_cell_forward(x_t: np.ndarray, h_prev: np.ndarray, params: dict) -> tuple[np.ndarray, tuple]:
    """One GRU step.

    Weight columns are ordered [update z | reset r | candidate]:

        z  = sigmoid(x Wx_z + h Wh_z + b_z)
        r  = sigmoid(x Wx_r + h Wh_r + b_r)
        hc = tanh(x Wx_c + (r * h) Wh_c + b_c)
        h' = (1 - z) * h + z * hc
    """
    Wx, Wh, b = params["Wx"], params["Wh"], params["b"]
    H = h_prev.shape[1]
    if Wx.shape[1] != 3 * H or Wh.shape != (H, 3 * H) or x_t.shape[1] != Wx.shape[0]:
        raise ValueError(f"shape mismatch: x {x_t.shape}, h {h_prev.shape}, Wx {Wx.shape}, Wh {Wh.shape}")
    xw = x_t @ Wx + b
    hw = h_prev @ Wh[:, : 2 * H]
    z = sigmoid(xw[:, :H] + hw[:, :H])
    r = sigmoid(xw[:, H: 2 * H] + hw[:, H:])
    rh = r * h_prev
    hc = np.tanh(xw[:, 2 * H:] + rh @ Wh[:, 2 * H:])
    h = (1.0 - z) * h_prev + z * hc
    return h, (x_t, h_prev, z, r, rh, hc)


def gru_cell_backward(dh: np.ndarray, cache: tuple, params: dict, grads: dict) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate parameter gradients for one step; return (dx_t, dh_prev)."""
    x_t, h_prev, z, r, rh, hc = cache
    Wx, Wh = params["Wx"], params["Wh"]
    H = h_prev.shape[1]
    dhc = dh * z
    dz = dh * (hc - h_prev)
    dh_prev = dh * (1.0 - z)
    da_c = dhc * (1.0 - hc * hc)
    da_z = dz * z * (1.0 - z)
    drh = da_c @ Wh[:, 2 * H:].T
    dr = drh * h_prev
    dh_prev += drh * r
    da_r = dr * r * (1.0 - r)
    da_zr = np.concatenate([da_z, da_r], axis=1)
    da = np.concatenate([da_zr, da_c], axis=1)
    dh_prev += da_zr @ Wh[:, : 2 * H].T
    grads["Wx"] += x_t.T @ da
    grads["Wh"][:, : 2 * H] += h_prev.T @ da_zr
    grads["Wh"][:, 2 * H:] += rh.T @ da_c
    grads["b"] += da.sum(axis=0)
    return da @ Wx.T, dh_prev


class GRU(Layer):
    """Single GRU layer over (batch, timesteps, features); emits the last hidden state."""

    kind = "gru"

    def __init__(self, units: int):
        super().__init__()
        self.units = units

    def build(self, input_shape, rng):
        _, D = input_shape
        H = self.units
        self.params = {
            "Wx": glorot_uniform(rng, (D, 3 * H), D, 3 * H),
            "Wh": glorot_uniform(rng, (H, 3 * H), H, 3 * H),
            "b": np.zeros(3 * H),
        }
        self.zero_grads()
        return (H,)

    def forward(self, x):
        if x.ndim != 3:
            raise ValueError(f"GRU expects (batch, time, features), got {x.shape}")
        N, T, _ = x.shape
        H = self.units
        Wh = self.params["Wh"]
        # input projections for every timestep in one product: (T, N, 3H)
        xw = np.einsum("ntd,dk->tnk", x, self.params["Wx"]) + self.params["b"]
        hs = np.zeros((T + 1, N, H))
        z = np.empty((T, N, H))
        r = np.empty((T, N, H))
        rh = np.empty((T, N, H))
        hc = np.empty((T, N, H))
        for t in range(T):
            h = hs[t]
            hw = h @ Wh[:, : 2 * H]
            z[t] = sigmoid(xw[t, :, :H] + hw[:, :H])
            r[t] = sigmoid(xw[t, :, H: 2 * H] + hw[:, H:])
            np.multiply(r[t], h, out=rh[t])
            hc[t] = np.tanh(xw[t, :, 2 * H:] + rh[t] @ Wh[:, 2 * H:])
            hs[t + 1] = h + z[t] * (hc[t] - h)
        self._cache = (x, hs, z, r, rh, hc)
        return hs[T].copy()

    def backward(self, dout):
        x, hs, z, r, rh, hc = self._cache
        T, N, H = z.shape
        Wh = self.params["Wh"]
        Wh_zr, Wh_c = Wh[:, : 2 * H], Wh[:, 2 * H:]
        da = np.empty((T, N, 3 * H))
        dh = dout
        for t in range(T - 1, -1, -1):
            h_prev = hs[t]
            da_c = dh * z[t] * (1.0 - hc[t] * hc[t])
            da_z = dh * (hc[t] - h_prev) * z[t] * (1.0 - z[t])
            drh = da_c @ Wh_c.T
            da_r = drh * h_prev * r[t] * (1.0 - r[t])
            da[t, :, :H] = da_z
            da[t, :, H: 2 * H] = da_r
            da[t, :, 2 * H:] = da_c
            dh = dh * (1.0 - z[t]) + drh * r[t] + da[t, :, : 2 * H] @ Wh_zr.T
        flat_da = da.reshape(T * N, 3 * H)
        self.grads["Wx"] += np.einsum("ntd,tnk->dk", x, da)
        self.grads["Wh"][:, : 2 * H] += hs[:T].reshape(T * N, H).T @ flat_da[:, : 2 * H]
        self.grads["Wh"][:, 2 * H:] += rh.reshape(T * N, H).T @ flat_da[:, 2 * H:]
        self.grads["b"] += flat_da.sum(axis=0)
        return np.einsum("tnk,dk->ntd", da, self.params["Wx"])

    def config(self):
        return {"kind": self.kind, "units": self.units}


def conv2d_forward(img: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid, stride-1 cross-correlation. img (N,H,W,C), kernels (kh,kw,C,F)."""
    kh, kw, C, F = kernels.shape
    if img.ndim != 4 or img.shape[3] != C:
        raise ValueError(f"image {img.shape} does not match kernels {kernels.shape}")
    if kh > img.shape[1] or kw > img.shape[2]:
        raise ValueError(f"kernel {kh}x{kw} larger than input {img.shape[1]}x{img.shape[2]}")
    cols = sliding_window_view(img, (kh, kw), axis=(1, 2))  # (N,Ho,Wo,C,kh,kw)
    return np.einsum("nhwcij,ijcf->nhwf", cols, kernels, optimize=True) + bias


class Conv2D(Layer):
    kind = "conv2d"

    def __init__(self, filters: int, kernel_size: int | tuple):
        super().__init__()
        if isinstance(kernel_size, int):
            kernel_size = (kernel_size, kernel_size)
        self.filters = filters
        self.kernel_size = tuple(kernel_size)

    def build(self, input_shape, rng):
        H, W, C = input_shape
        kh, kw = self.kernel_size
        if kh > H or kw > W:
            raise ValueError(f"kernel {kh}x{kw} larger than input {H}x{W}")
        fan_in, fan_out = kh * kw * C, kh * kw * self.filters
        self.params = {
            "K": glorot_uniform(rng, (kh, kw, C, self.filters), fan_in, fan_out),
            "b": np.zeros(self.filters),
        }
        self.zero_grads()
        return (H - kh + 1, W - kw + 1, self.filters)

    def forward(self, x):
        self._x = x
        return conv2d_forward(x, self.params["K"], self.params["b"])

    def backward(self, dout):
        x, K = self._x, self.params["K"]
        kh, kw = self.kernel_size
        cols = sliding_window_view(x, (kh, kw), axis=(1, 2))
        self.grads["K"] += np.einsum("nhwcij,nhwf->ijcf", cols, dout, optimize=True)
        self.grads["b"] += dout.sum(axis=(0, 1, 2))
        dx = np.zeros_like(x)
        Ho, Wo = dout.shape[1], dout.shape[2]
        for i in range(kh):
            for j in range(kw):
                dx[:, i:i + Ho, j:j + Wo, :] += dout @ K[i, j].T
        return dx

    def config(self):
        return {"kind": self.kind, "filters": self.filters, "kernel_size": list(self.kernel_size)}


def _pool_windows(x: np.ndarray) -> np.ndarray:
    N, H, W, C = x.shape
    if H % 2 or W % 2:
        raise ValueError(f"2x2 pooling needs even spatial dims, got {H}x{W}")
    # (N, H/2, W/2, C, 4) with window cells in row-major order
    return x.reshape(N, H // 2, 2, W // 2, 2, C).transpose(0, 1, 3, 5, 2, 4).reshape(N, H // 2, W // 2, C, 4)


def _unpool(dwin: np.ndarray) -> np.ndarray:
    N, Ho, Wo, C, _ = dwin.shape
    return dwin.reshape(N, Ho, Wo, C, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(N, 2 * Ho, 2 * Wo, C)


def maxpool2d(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2/stride-2 max pooling; returns (output, argmax within each window)."""
    win = _pool_windows(img)
    arg = win.argmax(axis=-1)  # first occurrence, so ties go to the top-left cell
    return np.take_along_axis(win, arg[..., None], axis=-1)[..., 0], arg


class MaxPool2D(Layer):
    kind = "maxpool2d"

    def build(self, input_shape, rng):
        H, W, C = input_shape
        if H % 2 or W % 2:
            raise ValueError(f"2x2 pooling needs even spatial dims, got {H}x{W}")
        return (H // 2, W // 2, C)

    def forward(self, x):
        out, self._arg = maxpool2d(x)
        return out

    def backward(self, dout):
        dwin = np.zeros(dout.shape + (4,))
        np.put_along_axis(dwin, self._arg[..., None], dout[..., None], axis=-1)
        return _unpool(dwin)


class AvgPool2D(Layer):
    kind = "avgpool2d"

    def build(self, input_shape, rng):
        return MaxPool2D().build(input_shape, rng)

    def forward(self, x):
        return _pool_windows(x).mean(axis=-1)

    def backward(self, dout):
        return _unpool(np.repeat(dout[..., None] / 4.0, 4, axis=-1))


LAYER_KINDS = {
    cls.kind: cls for cls in (Dense, Activation, Flatten, GRU, Conv2D, MaxPool2D, AvgPool2D)
}


def layer_from_config(cfg: dict) -> Layer:
    cfg = dict(cfg)
    cls = LAYER_KINDS[cfg.pop("kind")]
    if cls is Activation:
        return Activation(cfg["activation"])
    if cls is Conv2D:
        return Conv2D(cfg["filters"], tuple(cfg["kernel_size"]))
    return cls(**cfg)
