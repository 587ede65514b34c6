"""Link-level signal model: direct path plus RIS-mediated path, with AWGN.

    y = (h_tr G(r_tr) + h_ris a^T(r_rx) M a(r_tx)) s + n
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .em_core import ElementPattern, Wave, green
from .errors import ConfigError, ZeroNoise
from .geometry import ArrayLayout, Scene
from .ris_model import Kernel, manifold

NOISE_GENERATOR = "numpy.random.Philox (4x64, 10 rounds), standard_normal"


@dataclass(frozen=True)
class LinkModel:
    h_tr: complex = 1.0
    h_ris: complex = 1.0
    noise_power: float = 0.0
    r_tr: float | None = None

    def __post_init__(self):
        if self.noise_power < 0:
            raise ValueError("noise power must be non-negative")
        if self.h_tr != 0 and self.r_tr is not None and not self.r_tr > 0:
            raise ValueError("r_tr must be positive when the direct path is present")

    @classmethod
    def from_dict(cls, data: dict) -> "LinkModel":
        def cplx(key, default):
            v = data.get(key)
            if v is None:
                return default
            try:
                return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
            except (AttributeError, TypeError, ValueError):
                raise ConfigError(f"'{key}' must be an object {{re, im}}", key)
        try:
            noise = float(data.get("noise_power_w", 0.0))
            r_tr = data.get("r_tr_m")
            r_tr = None if r_tr is None else float(r_tr)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "noise_power_w")
        if noise < 0:
            raise ConfigError("noise_power_w must be >= 0", "noise_power_w")
        return cls(cplx("h_tr", 1.0 + 0j), cplx("h_ris", 1.0 + 0j), noise, r_tr)

    @classmethod
    def load(cls, path: str | Path) -> "LinkModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def effective_channel(link: LinkModel, scene: Scene, layout: ArrayLayout,
                      pattern: ElementPattern, wave: Wave, K: Kernel,
                      hermitian: bool = False) -> complex:
    r_tr = scene.r_tr if link.r_tr is None else link.r_tr
    h = 0.0 + 0.0j
    if link.h_tr != 0:
        h += link.h_tr * green(wave, [r_tr, 0.0, 0.0])
    if link.h_ris != 0:
        a_rx = manifold(layout, pattern, wave, scene.r_rx)
        a_tx = manifold(layout, pattern, wave, scene.r_tx)
        h += link.h_ris * K.bilinear(a_rx, a_tx, hermitian)
    return complex(h)


@dataclass(frozen=True, eq=False)
class SignalBatch:
    """Samples y = h_eff s + n; arrays share one index."""

    h_eff: complex
    s: NDArray[np.complex128]
    y: NDArray[np.complex128]
    n: NDArray[np.complex128]

    def __len__(self) -> int:
        return self.s.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("i,s_re,s_im,y_re,y_im\n")
        for i, (s, y) in enumerate(zip(self.s, self.y)):
            buf.write(f"{i},{float(s.real)!r},{float(s.imag)!r},{float(y.real)!r},{float(y.imag)!r}\n")
        return buf.getvalue()


def noise_stream(seed: int, size: int, power: float) -> NDArray[np.complex128]:
    """Circularly-symmetric complex Gaussian noise of variance ``power``."""
    rng = np.random.Generator(np.random.Philox(int(seed) & (2 ** 64 - 1)))
    z = rng.standard_normal((size, 2))
    return np.sqrt(power / 2.0) * (z[:, 0] + 1j * z[:, 1])


def simulate(link: LinkModel, h_eff: complex, symbols: ArrayLike, seed: int) -> SignalBatch:
    s = np.asarray(symbols, dtype=complex).ravel()
    if link.noise_power == 0:
        n = np.zeros_like(s)
    else:
        n = noise_stream(seed, s.size, link.noise_power)
    return SignalBatch(complex(h_eff), s, h_eff * s + n, n)


def qpsk_symbols(count: int, seed: int) -> NDArray[np.complex128]:
    "Unit-energy QPSK symbols from a stream independent of the noise stream."
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2 ** 64 - 1), counter=[0, 0, 0, 1]))
    bits = rng.integers(0, 2, size=(count, 2))
    return ((2 * bits[:, 0] - 1) + 1j * (2 * bits[:, 1] - 1)) / np.sqrt(2.0)


def snr_db(h_eff: complex, signal_power: float, noise_power: float) -> float:
    if not noise_power > 0:
        raise ZeroNoise("SNR is undefined for zero noise power")
    return float(10.0 * np.log10(abs(h_eff) ** 2 * signal_power / noise_power))
