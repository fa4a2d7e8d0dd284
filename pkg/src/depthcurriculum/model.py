"""A tiny encoder-decoder depth regressor with hand-derived gradients.

Two stride-2 convolutions encode, two nearest-upsample+convolution
stages decode, with a skip connection from the first encoder level into
the first decoder level. The single-channel head is squashed through a
sigmoid into the metric depth range. Everything is channels-last
float arrays; backward passes are written out explicitly so gradients
can be checked against finite differences.

The upsample+conv stages are computed in a fused form: a 3x3
convolution over a nearest 2x upsample equals four phase-wise 2x2
convolutions on the low-resolution input with folded kernels, which
avoids ever materializing the upsampled tensor. The fold is linear, so
its adjoint recovers exact 3x3-kernel gradients.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .depthmap import MAX_DEPTH, MIN_DEPTH

CHECKPOINT_VERSION = 1

# Which 3x3 kernel rows fold into each 2x2 kernel row, per output phase.
# Phase p reads low-res rows {a-1+S, a+S}: for p=0 the window covers source
# rows (a-1, a, a) so kernel row 0 lands in slot S=0 and rows 1, 2 in S=1;
# for p=1 it covers (a, a, a+1). Columns behave identically.
_FOLD = {(0, 0): (0,), (0, 1): (1, 2), (1, 0): (0, 1), (1, 1): (2,)}


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class _Conv3x3:
    """3x3 convolution, zero padding 1, stride 1 or 2, channels-last.

    Forward gathers the nine shifted views of the padded input once and
    keeps them for the weight-gradient pass.
    """

    def __init__(self, cin: int, cout: int, stride: int, rng, dtype, bias: bool = True):
        self.stride = stride
        std = np.sqrt(2.0 / (9 * cin))
        self.w = (rng.standard_normal((3, 3, cin, cout)) * std).astype(dtype)
        self.b = np.zeros(cout, dtype=dtype) if bias else None

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, cin = x.shape
        s = self.stride
        cout = self.w.shape[3]
        xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
        oh = (h - 1) // s + 1
        ow = (w - 1) // s + 1
        self._shapes = (x.shape, xp.shape, oh, ow)
        self._cols = {}
        yf = np.zeros((n * oh * ow, cout), dtype=x.dtype)
        for u in range(3):
            for v in range(3):
                col = np.ascontiguousarray(xp[:, u : u + s * oh : s, v : v + s * ow : s, :])
                col = col.reshape(-1, cin)
                self._cols[(u, v)] = col
                yf += col @ self.w[u, v]
        if self.b is not None:
            yf += self.b
        return yf.reshape(n, oh, ow, cout)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x_shape, xp_shape, oh, ow = self._shapes
        n, h, w, cin = x_shape
        s = self.stride
        cout = self.w.shape[3]
        dyf = dy.reshape(-1, cout)
        self.db = dyf.sum(axis=0) if self.b is not None else None
        self.dw = np.empty_like(self.w)
        dxp = np.zeros(xp_shape, dtype=dy.dtype)
        for u in range(3):
            for v in range(3):
                col = self._cols[(u, v)]
                self.dw[u, v] = col.T @ dyf
                dxp[:, u : u + s * oh : s, v : v + s * ow : s, :] += (dyf @ self.w[u, v].T).reshape(
                    n, oh, ow, cin
                )
        return dxp[:, 1 : 1 + h, 1 : 1 + w, :]


class _UpConv3x3:
    """Nearest 2x upsample followed by a 3x3/pad-1 convolution, fused.

    Output phase (p, q) in {0,1}^2 holds y[2a+p, 2b+q] and equals a 2x2
    convolution of the padded low-res input with folded kernels
    G[p][q][S, T] = sum of w[ku, kv] over ku in _FOLD[p, S], kv in
    _FOLD[q, T]. The padded input's one-pixel zero border supplies
    exactly the zeros the padded upsample would have contributed.
    """

    def __init__(self, cin: int, cout: int, rng, dtype, bias: bool = True):
        std = np.sqrt(2.0 / (9 * cin))
        self.w = (rng.standard_normal((3, 3, cin, cout)) * std).astype(dtype)
        self.b = np.zeros(cout, dtype=dtype) if bias else None

    def _fold(self):
        g = {}
        for p in range(2):
            for q in range(2):
                for s_ in range(2):
                    for t in range(2):
                        acc = np.zeros_like(self.w[0, 0])
                        for ku in _FOLD[(p, s_)]:
                            for kv in _FOLD[(q, t)]:
                                acc += self.w[ku, kv]
                        g[(p, q, s_, t)] = acc
        return g

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, cin = x.shape
        cout = self.w.shape[3]
        xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
        self._shapes = (x.shape, xp.shape)
        self._cols = {}
        for r0 in range(3):
            for c0 in range(3):
                col = np.ascontiguousarray(xp[:, r0 : r0 + h, c0 : c0 + w, :])
                self._cols[(r0, c0)] = col.reshape(-1, cin)
        g = self._fold()
        y = np.empty((n, 2 * h, 2 * w, cout), dtype=x.dtype)
        for p in range(2):
            for q in range(2):
                yf = np.zeros((n * h * w, cout), dtype=x.dtype)
                for s_ in range(2):
                    for t in range(2):
                        yf += self._cols[(p + s_, q + t)] @ g[(p, q, s_, t)]
                if self.b is not None:
                    yf += self.b
                y[:, p::2, q::2, :] = yf.reshape(n, h, w, cout)
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x_shape, xp_shape = self._shapes
        n, h, w, cin = x_shape
        cout = self.w.shape[3]
        g = self._fold()
        dg = {}
        dcol = {key: None for key in self._cols}
        self.db = np.zeros(cout, dtype=dy.dtype) if self.b is not None else None
        for p in range(2):
            for q in range(2):
                dyf = np.ascontiguousarray(dy[:, p::2, q::2, :]).reshape(-1, cout)
                if self.b is not None:
                    self.db += dyf.sum(axis=0)
                for s_ in range(2):
                    for t in range(2):
                        key = (p + s_, q + t)
                        dg[(p, q, s_, t)] = self._cols[key].T @ dyf
                        contrib = dyf @ g[(p, q, s_, t)].T
                        dcol[key] = contrib if dcol[key] is None else dcol[key] + contrib
        # adjoint of the fold: route each dG back to its source kernel taps
        self.dw = np.zeros_like(self.w)
        for p in range(2):
            for q in range(2):
                for s_ in range(2):
                    for t in range(2):
                        for ku in _FOLD[(p, s_)]:
                            for kv in _FOLD[(q, t)]:
                                self.dw[ku, kv] += dg[(p, q, s_, t)]
        dxp = np.zeros(xp_shape, dtype=dy.dtype)
        for (r0, c0), acc in dcol.items():
            if acc is not None:
                dxp[:, r0 : r0 + h, c0 : c0 + w, :] += acc.reshape(n, h, w, cin)
        return dxp[:, 1 : 1 + h, 1 : 1 + w, :]


class DepthNet:
    """The reference depth regressor.

    Input is a channels-last image batch (N, H, W, in_channels) with H
    and W divisible by 4; output is a depth batch (N, H, W) inside
    [min_depth, max_depth]. Construction is deterministic in ``seed``.
    """

    def __init__(
        self,
        in_channels: int = 3,
        widths: tuple[int, int] = (8, 16),
        min_depth: float = MIN_DEPTH,
        max_depth: float = MAX_DEPTH,
        seed: int = 0,
        dtype=np.float32,
    ):
        self.in_channels = in_channels
        self.widths = (int(widths[0]), int(widths[1]))
        self.min_depth = float(min_depth)
        self.max_depth = float(max_depth)
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        w1, w2 = self.widths
        rng = np.random.default_rng(seed)
        self.enc1 = _Conv3x3(in_channels, w1, 2, rng, self.dtype)
        self.enc2 = _Conv3x3(w1, w2, 2, rng, self.dtype)
        self.dec1 = _UpConv3x3(w2, w1, rng, self.dtype)
        self.skip = _Conv3x3(w1, w1, 1, rng, self.dtype, bias=False)
        self.dec2 = _UpConv3x3(w1, 1, rng, self.dtype)
        self._layers = {"enc1": self.enc1, "enc2": self.enc2, "dec1": self.dec1, "skip": self.skip, "dec2": self.dec2}

    def parameters(self) -> dict[str, np.ndarray]:
        params = {}
        for name, layer in self._layers.items():
            params[f"{name}.w"] = layer.w
            if layer.b is not None:
                params[f"{name}.b"] = layer.b
        return params

    def set_parameters(self, params: dict[str, np.ndarray]) -> None:
        for name, layer in self._layers.items():
            layer.w = np.asarray(params[f"{name}.w"], dtype=self.dtype)
            if layer.b is not None:
                layer.b = np.asarray(params[f"{name}.b"], dtype=self.dtype)

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def forward(self, images: np.ndarray) -> np.ndarray:
        x = np.asarray(images, dtype=self.dtype)
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise ValueError(f"expected image batch (N, H, W, {self.in_channels}), got {x.shape}")
        if x.shape[1] % 4 or x.shape[2] % 4:
            raise ValueError(f"spatial dims must be divisible by 4, got {x.shape[1]}x{x.shape[2]}")
        a1 = self.enc1.forward(x)
        r1 = np.maximum(a1, 0)
        a2 = self.enc2.forward(r1)
        r2 = np.maximum(a2, 0)
        a3 = self.dec1.forward(r2) + self.skip.forward(r1)
        r3 = np.maximum(a3, 0)
        z = self.dec2.forward(r3)[..., 0]
        sig = _sigmoid(z)
        self._cache = (a1, a2, a3, sig)
        return self.min_depth + sig * (self.max_depth - self.min_depth)

    def backward(self, d_depth: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss given its derivative w.r.t. the
        predicted depth batch; call after forward."""
        a1, a2, a3, sig = self._cache
        span = self.dtype.type(self.max_depth - self.min_depth)
        dz = (np.asarray(d_depth, dtype=self.dtype) * sig * (1.0 - sig) * span)[..., None]
        dr3 = self.dec2.backward(dz)
        da3 = dr3 * (a3 > 0)
        dr2 = self.dec1.backward(da3)
        dr1 = self.skip.backward(da3)
        da2 = dr2 * (a2 > 0)
        dr1 += self.enc2.backward(da2)
        da1 = dr1 * (a1 > 0)
        self.enc1.backward(da1)
        grads = {}
        for name, layer in self._layers.items():
            grads[f"{name}.w"] = layer.dw
            if layer.b is not None:
                grads[f"{name}.b"] = layer.db
        return grads

    def zero_gradients(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(p) for name, p in self.parameters().items()}

    def predict(self, images: np.ndarray, batch_size: int = 16) -> np.ndarray:
        images = np.asarray(images)
        out = []
        for start in range(0, images.shape[0], batch_size):
            out.append(self.forward(images[start : start + batch_size]))
        return np.concatenate(out, axis=0)

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta = {
            "format_version": CHECKPOINT_VERSION,
            "in_channels": self.in_channels,
            "widths": list(self.widths),
            "min_depth": self.min_depth,
            "max_depth": self.max_depth,
            "seed": self.seed,
            "dtype": self.dtype.name,
        }
        arrays = {k.replace(".", "__"): v for k, v in self.parameters().items()}
        np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)

    @classmethod
    def load(cls, path) -> "DepthNet":
        with np.load(path) as data:
            meta = json.loads(bytes(data["__meta__"]).decode())
            if meta.get("format_version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta.get('format_version')}")
            model = cls(
                in_channels=meta["in_channels"],
                widths=tuple(meta["widths"]),
                min_depth=meta["min_depth"],
                max_depth=meta["max_depth"],
                seed=meta["seed"],
                dtype=np.dtype(meta["dtype"]),
            )
            params = {
                k.replace("__", "."): data[k] for k in data.files if k != "__meta__"
            }
        model.set_parameters(params)
        return model
