"""Classical preprocessing primitives.

Pixel-brightness transforms, affine warps with selectable
interpolation, 3x3 spatial filters and a direct 2-D DFT pair.  Images
are uint8 arrays, (H, W) or (H, W, 3); every 8-bit output rounds half
away from zero and then clamps to [0, 255].

The point transforms and geometric warps are deliberately implemented
from their defining formulas rather than delegated to an imaging
library: they are small, and the test suite checks them against
independent oracles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .validation import ValidationError, check_image8, check_positive

__all__ = [
    "AffineMatrix",
    "DegenerateHistogramWarning",
    "linear_brightness",
    "gamma_correct",
    "sigmoid_stretch",
    "equalize_histogram",
    "make_affine",
    "affine_scale",
    "affine_translate",
    "affine_rotate",
    "affine_shear",
    "compose",
    "warp",
    "bicubic_kernel",
    "dft2",
    "idft2",
    "spatial_filter",
    "parse_op_chain",
    "apply_op_chain",
]


class DegenerateHistogramWarning(UserWarning):
    """Histogram equalization hit a constant channel (degenerate CDF)."""


def _to_u8(values: np.ndarray) -> np.ndarray:
    """Round half away from zero, clamp to [0, 255], cast to uint8."""
    rounded = np.sign(values) * np.floor(np.abs(values) + 0.5)
    return np.clip(rounded, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Pixel-brightness transforms


def linear_brightness(img: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Gain/bias point transform: out = alpha * in + beta."""
    check_image8(img)
    check_positive(alpha, "alpha")
    return _to_u8(img.astype(np.float64) * alpha + float(beta))


def gamma_correct(img: np.ndarray, gamma: float) -> np.ndarray:
    """Power-law transform: out = 255 * (in / 255) ** gamma."""
    check_image8(img)
    check_positive(gamma, "gamma")
    return _to_u8(255.0 * (img.astype(np.float64) / 255.0) ** gamma)


def sigmoid_stretch(img: np.ndarray, c: float, th: float) -> np.ndarray:
    """Sigmoid contrast stretch: out = 255 / (1 + exp(c * (th - in))).

    ``c`` controls contrast, ``th`` is the threshold pixel value; a
    pixel exactly at the threshold maps to 128 (0.5 scaled and rounded).
    """
    check_image8(img)
    # expit is evaluated overflow-safely for any exponent magnitude.
    z = float(c) * (img.astype(np.float64) - float(th))
    return _to_u8(255.0 * expit(z))


def equalize_histogram(img: np.ndarray) -> np.ndarray:
    """Histogram equalization; 3-channel images are equalized per channel.

    Each value v maps to round(255 * (CDF(v) - CDF_min) / (N - CDF_min)).
    A constant channel makes the denominator zero; it is mapped to 0 and
    a :class:`DegenerateHistogramWarning` is emitted.
    """
    check_image8(img)
    if img.ndim == 3:
        return np.dstack([equalize_histogram(img[:, :, c]) for c in range(3)])
    counts = np.bincount(img.ravel(), minlength=256)
    cdf = np.cumsum(counts)
    n = img.size
    cdf_min = cdf[np.nonzero(counts)[0][0]]
    if n == cdf_min:
        warnings.warn("constant image: histogram equalization is degenerate, "
                      "mapping to 0", DegenerateHistogramWarning, stacklevel=2)
        return np.zeros_like(img)
    mapping = _to_u8(255.0 * (cdf - cdf_min) / float(n - cdf_min))
    return mapping[img]


# ---------------------------------------------------------------------------
# Geometric transforms


@dataclass(frozen=True)
class AffineMatrix:
    """2-D affine map: x' = a1*x + a2*y + a3, y' = b1*x + b2*y + b3."""

    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    b3: float

    def determinant(self) -> float:
        return self.a1 * self.b2 - self.a2 * self.b1

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return (self.a1 * x + self.a2 * y + self.a3,
                self.b1 * x + self.b2 * y + self.b3)

    def inverse(self) -> "AffineMatrix":
        det = self.determinant()
        if abs(det) <= 1e-12:
            raise ValidationError(f"affine matrix is singular (det={det!r})")
        ia1 = self.b2 / det
        ia2 = -self.a2 / det
        ib1 = -self.b1 / det
        ib2 = self.a1 / det
        return AffineMatrix(
            a1=ia1, a2=ia2, a3=-(ia1 * self.a3 + ia2 * self.b3),
            b1=ib1, b2=ib2, b3=-(ib1 * self.a3 + ib2 * self.b3))


def affine_scale(sx: float, sy: float) -> AffineMatrix:
    if sx == 0 or sy == 0:
        raise ValidationError("scale factors must be non-zero")
    return AffineMatrix(sx, 0.0, 0.0, 0.0, sy, 0.0)


def affine_translate(dx: float, dy: float) -> AffineMatrix:
    return AffineMatrix(1.0, 0.0, dx, 0.0, 1.0, dy)


def affine_rotate(degrees: float) -> AffineMatrix:
    phi = math.radians(degrees)
    c, s = math.cos(phi), math.sin(phi)
    return AffineMatrix(c, -s, 0.0, s, c, 0.0)


def affine_shear(jx: float, jy: float) -> AffineMatrix:
    return AffineMatrix(1.0, jx, 0.0, jy, 1.0, 0.0)


def compose(second: AffineMatrix, first: AffineMatrix) -> AffineMatrix:
    """Composition applying ``first`` then ``second``."""
    return AffineMatrix(
        a1=second.a1 * first.a1 + second.a2 * first.b1,
        a2=second.a1 * first.a2 + second.a2 * first.b2,
        a3=second.a1 * first.a3 + second.a2 * first.b3 + second.a3,
        b1=second.b1 * first.a1 + second.b2 * first.b1,
        b2=second.b1 * first.a2 + second.b2 * first.b2,
        b3=second.b1 * first.a3 + second.b2 * first.b3 + second.b3)


def make_affine(kind: str, **params) -> AffineMatrix:
    """Factory covering scale/translate/rotate/shear/compose.

    ``compose`` takes ``second`` and ``first`` (applied first).
    """
    factories = {
        "scale": affine_scale,
        "translate": affine_translate,
        "rotate": affine_rotate,
        "shear": affine_shear,
        "compose": compose,
    }
    if kind not in factories:
        raise ValidationError(f"unknown affine kind {kind!r}")
    return factories[kind](**params)


def bicubic_kernel(x: np.ndarray) -> np.ndarray:
    """Cubic interpolation kernel h3 with h3(0)=1 and h3(1)=h3(2)=0.

    1 - 2|x|^2 + |x|^3 on |x| < 1, 4 - 8|x| + 5|x|^2 - |x|^3 on
    1 <= |x| < 2, 0 beyond; both branches agree at |x| = 1, so the
    closure at the seam is immaterial.
    """
    ax = np.abs(np.asarray(x, dtype=np.float64))
    near = 1.0 - 2.0 * ax ** 2 + ax ** 3
    far = 4.0 - 8.0 * ax + 5.0 * ax ** 2 - ax ** 3
    return np.where(ax < 1.0, near, np.where(ax < 2.0, far, 0.0))


def _sample_plane(plane: np.ndarray, u: np.ndarray, v: np.ndarray,
                  interp: str) -> np.ndarray:
    """Sample one channel at real coordinates (u, v); outside is 0."""
    h, w = plane.shape
    src = plane.astype(np.float64)

    def fetch(xi: np.ndarray, yi: np.ndarray) -> np.ndarray:
        inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        values = src[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
        return np.where(inside, values, 0.0)

    if interp == "nearest":
        return fetch(np.floor(u + 0.5).astype(np.int64),
                     np.floor(v + 0.5).astype(np.int64))

    x0 = np.floor(u).astype(np.int64)
    y0 = np.floor(v).astype(np.int64)
    if interp == "linear":
        fx = u - x0
        fy = v - y0
        out = np.zeros_like(u, dtype=np.float64)
        for dy, wy in ((0, 1.0 - fy), (1, fy)):
            for dx, wx in ((0, 1.0 - fx), (1, fx)):
                out += wx * wy * fetch(x0 + dx, y0 + dy)
        return out
    if interp == "bicubic":
        out = np.zeros_like(u, dtype=np.float64)
        for dy in range(-1, 3):
            wy = bicubic_kernel(v - (y0 + dy))
            for dx in range(-1, 3):
                wx = bicubic_kernel(u - (x0 + dx))
                out += wx * wy * fetch(x0 + dx, y0 + dy)
        return out
    raise ValidationError(f"unknown interpolation {interp!r}")


def warp(img: np.ndarray, m: AffineMatrix, interp: str = "nearest") -> np.ndarray:
    """Warp an image by an affine map using inverse mapping.

    Each output pixel (x, y) samples the source at m^-1(x, y) with the
    chosen kernel; samples falling outside the source contribute 0.  The
    output has the input's shape.
    """
    check_image8(img)
    inv = m.inverse()
    h, w = img.shape[:2]
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    u = inv.a1 * xs + inv.a2 * ys + inv.a3
    v = inv.b1 * xs + inv.b2 * ys + inv.b3
    if img.ndim == 2:
        return _to_u8(_sample_plane(img, u, v, interp))
    return np.dstack([_to_u8(_sample_plane(img[:, :, c], u, v, interp))
                      for c in range(3)])


# ---------------------------------------------------------------------------
# Frequency domain


def dft2(f: np.ndarray) -> np.ndarray:
    """Unnormalized 2-D DFT of a square real array, by direct evaluation.

    F(k, l) = sum_{i,j} f(i, j) exp(-2*pi*1j*(k*i + l*j)/N), evaluated
    as a pair of matrix products; intended for desk-scale N.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValidationError(f"dft2 requires a square 2-D array, got {f.shape}")
    n = f.shape[0]
    k = np.arange(n)
    e = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return e @ f @ e.T


def idft2(big_f: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft2`, carrying the 1/N^2 normalization."""
    big_f = np.asarray(big_f, dtype=np.complex128)
    if big_f.ndim != 2 or big_f.shape[0] != big_f.shape[1]:
        raise ValidationError(
            f"idft2 requires a square 2-D array, got {big_f.shape}")
    n = big_f.shape[0]
    k = np.arange(n)
    e = np.exp(2j * np.pi * np.outer(k, k) / n)
    return np.real(e @ big_f @ e.T) / (n * n)


# ---------------------------------------------------------------------------
# Spatial filtering


def spatial_filter(img: np.ndarray, kind: str) -> np.ndarray:
    """3x3 filters with replicate-padded borders.

    ``mean3`` is the box average (low pass); ``laplacian`` is the cross
    kernel [0 1 0; 1 -4 1; 0 1 0] (second derivative), clamped to 8 bit.
    """
    check_image8(img)
    if min(img.shape[:2]) < 3:
        raise ValidationError(f"image must be at least 3x3, got {img.shape}")
    if img.ndim == 3:
        return np.dstack([spatial_filter(img[:, :, c], kind) for c in range(3)])
    if kind == "mean3":
        kernel = np.full((3, 3), 1.0 / 9.0)
    elif kind == "laplacian":
        kernel = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])
    else:
        raise ValidationError(f"unknown filter kind {kind!r}")
    padded = np.pad(img.astype(np.float64), 1, mode="edge")
    out = np.zeros(img.shape, dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            out += kernel[dy, dx] * padded[dy:dy + img.shape[0],
                                           dx:dx + img.shape[1]]
    return _to_u8(out)


# ---------------------------------------------------------------------------
# Op-chain parsing for the CLI `preprocess` subcommand

# name -> (callable, ordered parameter names)
_OPS = {
    "brightness": (linear_brightness, ("alpha", "beta")),
    "gamma": (gamma_correct, ("gamma",)),
    "sigmoid": (sigmoid_stretch, ("c", "th")),
    "equalize": (equalize_histogram, ()),
    "mean3": (lambda img: spatial_filter(img, "mean3"), ()),
    "laplacian": (lambda img: spatial_filter(img, "laplacian"), ()),
    "scale": (lambda img, sx, sy, interp="linear":
              warp(img, affine_scale(sx, sy), interp), ("sx", "sy")),
    "translate": (lambda img, dx, dy, interp="nearest":
                  warp(img, affine_translate(dx, dy), interp), ("dx", "dy")),
    "rotate": (lambda img, degrees, interp="linear":
               warp(img, affine_rotate(degrees), interp), ("degrees",)),
    "shear": (lambda img, jx, jy, interp="linear":
              warp(img, affine_shear(jx, jy), interp), ("jx", "jy")),
}


def parse_op_chain(text: str) -> list[tuple[str, dict]]:
    """Parse a textual pipeline like ``"gamma:0.5|mean3|sigmoid:c=0.1,th=128"``.

    Ops are separated by ``|``; arguments follow ``:`` as a
    comma-separated mix of positional values and ``key=value`` pairs.
    """
    steps = []
    for raw in text.split("|"):
        raw = raw.strip()
        if not raw:
            continue
        name, _, argtext = raw.partition(":")
        name = name.strip()
        if name not in _OPS:
            raise ValidationError(
                f"unknown preprocessing op {name!r}; known: {sorted(_OPS)}")
        _, positional = _OPS[name]
        kwargs: dict = {}
        pos_index = 0
        for piece in filter(None, (p.strip() for p in argtext.split(","))):
            if "=" in piece:
                key, _, value = piece.partition("=")
                kwargs[key.strip()] = _parse_number(value.strip(), key)
            else:
                if pos_index >= len(positional):
                    raise ValidationError(
                        f"too many positional arguments for {name!r}")
                kwargs[positional[pos_index]] = _parse_number(piece, name)
                pos_index += 1
        steps.append((name, kwargs))
    if not steps:
        raise ValidationError("empty preprocessing chain")
    return steps


def _parse_number(text: str, name: str):
    try:
        return float(text)
    except ValueError:
        if text in ("nearest", "linear", "bicubic"):
            return text
        raise ValidationError(f"cannot parse argument {text!r} for {name!r}")


def apply_op_chain(img: np.ndarray, chain: str | list[tuple[str, dict]]) -> np.ndarray:
    if isinstance(chain, str):
        chain = parse_op_chain(chain)
    for name, kwargs in chain:
        func, _ = _OPS[name]
        img = func(img, **kwargs)
    return img
