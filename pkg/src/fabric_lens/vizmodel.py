"""Deterministic presentation math for the link and device visuals.

Everything here is pure: utilization fractions, the color band scale,
fan-curve control points for parallel link bundles, and radar axis
geometry. Computing these server side keeps every rendered number
testable without a browser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .exceptions import FabricLensError


class StraightLine(FabricLensError):
    """A bundle of one link is drawn straight; it has no control points."""


@dataclass(frozen=True)
class ColorBand:
    name: str
    lo: float  # exclusive, except idle which is exactly zero
    hi: float  # inclusive; congested is open ended
    color: str


BANDS = (
    ColorBand("idle", 0.0, 0.0, "#9e9e9e"),
    ColorBand("low", 0.0, 0.25, "#a5d6a7"),
    ColorBand("optimal", 0.25, 0.50, "#2e7d32"),
    ColorBand("elevated", 0.50, 0.75, "#f9a825"),
    ColorBand("congested", 0.75, math.inf, "#c62828"),
)

# Presentation order of the radar axes, clockwise from the top.
RADAR_AXES = (
    "unicast_sent",
    "unicast_recv",
    "multicast_sent",
    "multicast_recv",
    "mpi_sent",
    "mpi_recv",
    "io_sent",
    "io_recv",
)


def capacity_bytes_per_interval(capacity_bps: float, interval_seconds: float) -> float:
    """Bytes one direction of a link can move in one interval."""
    return capacity_bps / 8.0 * interval_seconds


def utilization_fraction(
    bytes_a2b: int,
    bytes_b2a: int,
    capacity_bps: float,
    interval_seconds: float,
) -> float:
    """Fraction of one direction's capacity used by the busier direction.

    Not clamped: oversubscribed intervals report > 1.0.
    """
    if capacity_bps <= 0 or interval_seconds <= 0:
        raise ValueError("capacity and interval must be positive")
    cap = capacity_bytes_per_interval(capacity_bps, interval_seconds)
    return max(bytes_a2b, bytes_b2a) / cap


def aggregate_utilization(
    links: Sequence[tuple[int, int, float]],
    interval_seconds: float,
) -> float:
    """Utilization of a parallel link bundle drawn as a single edge.

    ``links`` holds (bytes_a2b, bytes_b2a, capacity_bps) per member.
    The busier direction of each member contributes to the numerator;
    the denominator is the bundle's summed one-direction capacity.
    """
    if not links:
        raise ValueError("empty bundle")
    moved = sum(max(a, b) for a, b, _cap in links)
    cap = sum(capacity_bytes_per_interval(c, interval_seconds) for _a, _b, c in links)
    if cap <= 0:
        raise ValueError("bundle has no capacity")
    return moved / cap


def color_band(fraction: float) -> ColorBand:
    """Band for a utilization fraction. Zero is idle, not low."""
    if fraction < 0:
        raise ValueError(f"utilization cannot be negative, got {fraction}")
    if fraction == 0:
        return BANDS[0]
    if fraction <= 0.25:
        return BANDS[1]
    if fraction <= 0.50:
        return BANDS[2]
    if fraction <= 0.75:
        return BANDS[3]
    return BANDS[4]


def fan_control_point(
    a: tuple[float, float],
    b: tuple[float, float],
    n: int,
    k: int,
) -> tuple[float, float]:
    """Middle control point of curve ``k`` in an ``n``-link fan between a and b.

    Curve k of n is drawn through [a, (x1 + k(x2-x1)/n, y2 + k(y1-y2)/n), b]
    for k = 1..n. The y term intentionally interpolates from y2 back toward
    y1, which spreads the curves on both sides of the straight segment.
    """
    if n < 1:
        raise ValueError(f"bundle size must be >= 1, got {n}")
    if n == 1:
        raise StraightLine("single link bundles are drawn as straight segments")
    if not 1 <= k <= n:
        raise ValueError(f"curve index {k} outside 1..{n}")
    x1, y1 = a
    x2, y2 = b
    return (x1 + k * (x2 - x1) / n, y2 + k * (y1 - y2) / n)


def fan_control_points(
    a: tuple[float, float],
    b: tuple[float, float],
    n: int,
) -> list[tuple[float, float]]:
    """Control points for every curve of an n-link bundle, k ascending."""
    return [fan_control_point(a, b, n, k) for k in range(1, n + 1)]


def radar_axis_angles(axis_count: int) -> list[float]:
    """Axis angles in radians; axis 0 points up, axes advance clockwise."""
    if axis_count < 3:
        raise ValueError(f"a radar needs at least 3 axes, got {axis_count}")
    return [-math.pi / 2 + 2 * math.pi * i / axis_count for i in range(axis_count)]


def band_legend() -> list[dict]:
    """Static legend rows for clients: name, bounds, hex color."""
    return [
        {"name": b.name, "lo": b.lo, "hi": None if math.isinf(b.hi) else b.hi, "color": b.color}
        for b in BANDS
    ]
