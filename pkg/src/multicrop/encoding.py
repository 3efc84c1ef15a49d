"""Sinusoidal positional encoding of bounding boxes.

    encode(p) = [p, sin(2^0 pi p), cos(2^0 pi p), ..., sin(2^L pi p), cos(2^L pi p)]

has ``2L + 3`` entries (L + 1 frequency bands). A box is encoded component by
component, ``(c_x, c_y, b)``, giving ``3 (2L + 3)`` entries.

Box coordinates are in raw pixels. For pixel-scale inputs the top bands
(frequency ``2^L pi`` with L = 32) exceed the resolution of float64: the phase
``2^32 pi p`` is only known to within several radians, so those entries are
deterministic but carry no geometric meaning. ``scale`` multiplies the
coordinates before encoding for callers that want a normalized input; it is
1.0 (off) by default.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidSpec, ShapeError

DEFAULT_L = 32


def encoding_length(L: int) -> int:
    return 2 * L + 3


def encode(p, L: int = DEFAULT_L, scale: float = 1.0) -> np.ndarray:
    """Encode a scalar (or an array of scalars along a new trailing axis)."""
    if L < 0:
        raise InvalidSpec(f"L must be >= 0, got {L}")
    p = np.asarray(p, dtype=np.float64) * scale
    freqs = np.ldexp(np.pi, np.arange(L + 1))
    phase = p[..., None] * freqs
    out = np.empty(p.shape + (2 * L + 3,))
    out[..., 0] = p
    out[..., 1::2] = np.sin(phase)
    out[..., 2::2] = np.cos(phase)
    return out


def _box_values(bbox):
    if hasattr(bbox, "c_x"):
        return np.array([bbox.c_x, bbox.c_y, bbox.b], dtype=np.float64)
    values = np.asarray(bbox, dtype=np.float64)
    if values.shape[-1] != 3:
        raise ShapeError(f"a bbox has 3 components, got shape {values.shape}")
    return values


def encode_bbox(bbox, L: int = DEFAULT_L, scale: float = 1.0) -> np.ndarray:
    """Concatenated encodings of ``c_x``, ``c_y`` and ``b``.

    Accepts a :class:`~multicrop.geometry.BBox` or an array whose last axis
    holds the three components; a stack ``(M, 3)`` gives ``(M, 3 (2L + 3))``.
    """
    values = _box_values(bbox)
    enc = encode(values, L, scale)
    return enc.reshape(values.shape[:-1] + (-1,))


def relative(bbox_m, bbox_n, L: int = DEFAULT_L, scale: float = 1.0) -> np.ndarray:
    """Encoding of ``bbox_m`` minus encoding of ``bbox_n``."""
    return encode_bbox(bbox_m, L, scale) - encode_bbox(bbox_n, L, scale)


def relative_matrix(bboxes, L: int = DEFAULT_L, scale: float = 1.0) -> np.ndarray:
    """All pairwise relative encodings, shape ``(M, M, 3 (2L + 3))``; entry ``[m, n]`` is ``relative(m, n)``."""
    enc = encode_bbox(np.stack([_box_values(b) for b in bboxes]), L, scale)
    return enc[:, None, :] - enc[None, :, :]
