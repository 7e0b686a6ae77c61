"""BS antenna pattern with a density-dependent electrical downtilt.

Only the vertical pattern matters here (horizontal is omnidirectional). Angles
are in degrees, measured downward from the horizontal at the BS.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class AntennaSpec:
    g_max: float = 8.15      # dB, boresight gain
    hpbw_v: float = 19.5     # deg, vertical half-power beamwidth
    n_exp: float = 47.64     # cosine exponent of the vertical pattern
    sll_v: float = -12.0     # dB, vertical side-lobe floor
    z: float = 0.7           # tilt trade-off coefficient
    horizontal: str = "omni"

    def __post_init__(self):
        if not self.sll_v < 0 <= self.g_max:
            raise ValueError("need sll_v < 0 <= g_max")
        if self.n_exp <= 0:
            raise ValueError("n_exp must be positive")
        if self.horizontal != "omni":
            raise ValueError("only an omnidirectional horizontal pattern is supported")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None):
        if not d or not d.get("enabled", True):
            return None
        return cls(**{k: v for k, v in d.items() if k != "enabled"})


def vertical_offset(theta, theta_tilt, spec: AntennaSpec):
    """Vertical pattern in dB relative to boresight, floored at the side-lobe level."""
    delta = np.radians(np.asarray(theta, dtype=float) - theta_tilt)
    with np.errstate(divide="ignore"):
        main = spec.n_exp * 10.0 * np.log10(np.abs(np.cos(delta)))
    out = np.maximum(main, spec.sll_v)
    return out if out.ndim else float(out)


def downtilt_for_density(lam: float, L: float, spec: AntennaSpec) -> float:
    """Tilt aimed at a cell-edge UE at distance 1/sqrt(pi lam), clamped to 90 deg."""
    if lam <= 0:
        raise ValueError("density must be positive")
    r_cov = 1.0 / math.sqrt(lam * math.pi)
    tilt = math.degrees(math.atan(L / r_cov)) + spec.z * spec.hpbw_v
    return min(tilt, 90.0)


def elevation_angle(r, L):
    """Angle below the horizon from a BS to a UE at 2D distance r (90 deg overhead)."""
    r = np.asarray(r, dtype=float)
    out = np.degrees(np.arctan2(L, r))
    return out if out.ndim else float(out)


def total_gain(phi, theta, theta_tilt, spec: AntennaSpec):
    """Antenna gain in dB; ``phi`` is unused with the omnidirectional horizontal pattern."""
    return spec.g_max + 0.0 + vertical_offset(theta, theta_tilt, spec)
