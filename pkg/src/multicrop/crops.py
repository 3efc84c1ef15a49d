"""Multi-crop bounding-box generation.

Fixed mode produces the original box plus four shifted/rescaled copies:

    B1 = (c_x,        c_y,        b)
    B2 = (c_x + 0.1b, c_y,        1.5b)
    B3 = (c_x - 0.1b, c_y,        1.25b)
    B4 = (c_x,        c_y + 0.1b, 0.8b)
    B5 = (c_x,        c_y - 0.1b, 0.65b)

Random mode keeps the original box first and draws the other ``m - 1`` boxes
with shifts uniform in ``[-r b, r b]`` and scale factors uniform in
``[low, high]``. Random draws come from numpy's Philox generator (a 64-bit
counter-based bit generator) keyed by the seed, so a seed fully determines the
output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBBox, InvalidSpec
from .geometry import BBox

# (x shift, y shift, scale) as multiples of b, in output order
FIXED_OFFSETS = (
    (0.0, 0.0, 1.0),
    (0.1, 0.0, 1.5),
    (-0.1, 0.0, 1.25),
    (0.0, 0.1, 0.8),
    (0.0, -0.1, 0.65),
)


@dataclass(frozen=True)
class CropSpec:
    mode: str = "fixed"
    m: int = 5
    shift_range: float = 0.1
    scale_range: tuple = (0.65, 1.5)
    seed: int = 0
    shift: bool = True
    scale: bool = True

    def validate(self):
        if self.mode not in ("fixed", "random"):
            raise InvalidSpec(f"mode must be 'fixed' or 'random', got {self.mode!r}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidSpec(f"m must be a positive integer, got {self.m!r}")
        if self.mode == "fixed" and self.m != len(FIXED_OFFSETS):
            raise InvalidSpec(f"fixed mode always yields {len(FIXED_OFFSETS)} crops, got m={self.m}")
        if not self.shift_range >= 0:
            raise InvalidSpec(f"shift_range must be >= 0, got {self.shift_range!r}")
        low, high = self.scale_range
        if not 0 < low <= high:
            raise InvalidSpec(f"scale_range must satisfy 0 < low <= high, got {self.scale_range!r}")
        return self


def rng(seed):
    """Seeded counter-based generator used everywhere randomness is needed."""
    return np.random.Generator(np.random.Philox(seed))


def _check_base(base):
    if not base.b > 0:
        raise InvalidBBox(f"base bbox width must be positive, got b={base.b!r}")


def fixed_crops(base: BBox, shift=True, scale=True) -> list[BBox]:
    """The five fixed crops around ``base``; ``shift``/``scale`` toggles zero that component."""
    _check_base(base)
    out = []
    for dx, dy, k in FIXED_OFFSETS:
        out.append(
            BBox(
                base.c_x + dx * base.b if shift else base.c_x,
                base.c_y + dy * base.b if shift else base.c_y,
                k * base.b if scale else base.b,
            )
        )
    return out


def random_crops(base: BBox, spec: CropSpec) -> list[BBox]:
    _check_base(base)
    spec.validate()
    if spec.mode != "random":
        raise InvalidSpec(f"random_crops needs mode='random', got {spec.mode!r}")
    n = spec.m - 1
    gen = rng(spec.seed)
    r = spec.shift_range * base.b
    # always draw all three columns so toggles do not change the stream
    shifts = gen.uniform(-r, r, size=(n, 2))
    scales = gen.uniform(spec.scale_range[0], spec.scale_range[1], size=n)
    if not spec.shift:
        shifts[:] = 0.0
    if not spec.scale:
        scales[:] = 1.0
    out = [base]
    for (x, y), k in zip(shifts, scales):
        out.append(BBox(base.c_x + float(x), base.c_y + float(y), float(k) * base.b))
    return out


def make_crops(base: BBox, spec: CropSpec = CropSpec()) -> list[BBox]:
    spec.validate()
    if spec.mode == "fixed":
        return fixed_crops(base, shift=spec.shift, scale=spec.scale)
    return random_crops(base, spec)


def exceeds_image(bbox: BBox, img) -> bool:
    """True when the square crop reaches past any image border."""
    width, height = img
    half = bbox.b / 2.0
    return (
        bbox.c_x - half < -width / 2.0
        or bbox.c_x + half > width / 2.0
        or bbox.c_y - half < -height / 2.0
        or bbox.c_y + half > height / 2.0
    )
