"""Luminous intensity distributions: Lambertian defaults and IES LM-63 files."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedIes


@dataclass(frozen=True)
class PolarCurve:
    """Luminous intensity (candela) sampled over emission angle (degrees).

    Angles are measured from the panel normal, must start at 0, increase
    strictly, and stay within [0, 90]. Intensity between samples is linear;
    past the last sample it clamps to the last value.
    """

    angles_deg: np.ndarray
    candela: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles_deg, dtype=np.float64)
        c = np.asarray(self.candela, dtype=np.float64)
        if a.ndim != 1 or a.shape != c.shape or a.size < 2:
            raise ValueError("curve needs matching 1-D angle/candela arrays with >= 2 samples")
        if not (np.isfinite(a).all() and np.isfinite(c).all()):
            raise ValueError("curve samples must be finite")
        if abs(a[0]) > 1e-9:
            raise ValueError("curve must start at 0 degrees")
        if np.any(np.diff(a) <= 0):
            raise ValueError("curve angles must be strictly increasing")
        if a[-1] > 90.0 + 1e-9:
            raise ValueError("curve angles must lie within [0, 90] degrees")
        if np.any(c < 0):
            raise ValueError("curve intensities must be non-negative")
        a.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "angles_deg", a)
        object.__setattr__(self, "candela", c)

    def intensity_at(self, theta_deg) -> np.ndarray | float:
        """Linear interpolation; clamps outside the sampled range."""
        return np.interp(theta_deg, self.angles_deg, self.candela)

    def total_flux_lm(self) -> float:
        """Hemisphere integral of the curve, trapezoid rule over the samples.

        flux = integral of I(theta) * 2*pi*sin(theta) dtheta over [0, last angle].
        """
        rad = np.radians(self.angles_deg)
        integrand = self.candela * 2.0 * np.pi * np.sin(rad)
        return float(np.trapezoid(integrand, rad))


def lambertian_default(flux_lm: float) -> PolarCurve:
    """Lambertian emitter curve I(theta) = (flux/pi) * cos(theta), 5-degree steps.

    The hemisphere integral of the continuous curve equals flux exactly;
    the sampled curve reproduces it to well under 0.5%.
    """
    if flux_lm <= 0:
        raise ValueError("flux must be positive")
    angles = np.arange(0.0, 90.0 + 1e-9, 5.0)
    candela = (flux_lm / math.pi) * np.cos(np.radians(angles))
    return PolarCurve(angles, candela)


def _read_numbers(tokens: list[str], n: int, what: str) -> np.ndarray:
    if len(tokens) < n:
        raise MalformedIes(f"file ends early while reading {what} ({len(tokens)} of {n} values)")
    taken = tokens[:n]
    del tokens[:n]
    try:
        return np.array([float(t) for t in taken], dtype=np.float64)
    except ValueError as e:
        raise MalformedIes(f"non-numeric value in {what}: {e}") from None


def parse_ies(text: str) -> PolarCurve:
    """Parse an LM-63 photometric file into a PolarCurve.

    Only the first horizontal plane is used, and vertical angles are
    restricted to [0, 90] degrees. The candela multiplier is applied.
    Raises MalformedIes on structural problems.
    """
    lines = text.splitlines()
    tilt_idx = None
    for i, line in enumerate(lines):
        if line.strip().upper().startswith("TILT="):
            tilt_idx = i
            break
    if tilt_idx is None:
        raise MalformedIes("no TILT= line")
    tilt = lines[tilt_idx].strip().upper()
    if tilt != "TILT=NONE":
        raise MalformedIes(f"unsupported tilt spec {tilt!r} (only TILT=NONE)")

    tokens: list[str] = []
    for line in lines[tilt_idx + 1 :]:
        tokens.extend(line.replace(",", " ").split())

    counts = _read_numbers(tokens, 10, "the counts line")
    n_vert = int(counts[3])
    n_horiz = int(counts[4])
    multiplier = counts[2]
    if n_vert < 2 or n_horiz < 1:
        raise MalformedIes(f"bad angle counts: {n_vert} vertical, {n_horiz} horizontal")
    _read_numbers(tokens, 3, "the ballast line")
    vert = _read_numbers(tokens, n_vert, "vertical angles")
    _read_numbers(tokens, n_horiz, "horizontal angles")
    candela = _read_numbers(tokens, n_vert, "the first candela plane")

    if np.any(np.diff(vert) <= 0):
        raise MalformedIes("vertical angles must be strictly increasing")
    if abs(vert[0]) > 1e-9:
        raise MalformedIes("vertical angles must start at 0")

    keep = vert <= 90.0 + 1e-9
    vert, candela = vert[keep], candela[keep] * multiplier
    if vert.size < 2:
        raise MalformedIes("fewer than two vertical angles at or below 90 degrees")
    try:
        return PolarCurve(vert, candela)
    except ValueError as e:
        raise MalformedIes(str(e)) from None


def write_ies(curve: PolarCurve, lumens: float = 0.0, label: str = "synthetic") -> str:
    """Emit a minimal LM-63 file (one horizontal plane) for a PolarCurve."""
    header = [
        "IESNA:LM-63-1995",
        f"[TEST] {label}",
        "[MANUFAC] vlp",
        "TILT=NONE",
        f"1 {lumens!r} 1 {curve.angles_deg.size} 1 1 2 0 0 0",
        "1.0 1.0 0",
    ]
    angles = " ".join(repr(float(a)) for a in curve.angles_deg)
    candela = " ".join(repr(float(c)) for c in curve.candela)
    return "\n".join(header + [angles, "0", candela]) + "\n"
