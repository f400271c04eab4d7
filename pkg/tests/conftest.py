"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from lvamm.geometry import ContourEstimate, Point2D, ScanLine


def random_point(rng: np.random.Generator, height: int, width: int) -> Point2D:
    return Point2D(float(rng.uniform(0, width - 1)), float(rng.uniform(0, height - 1)))


def random_scanline(
    rng: np.random.Generator, height: int, width: int, min_length: float = 2.0
) -> ScanLine:
    while True:
        p1 = random_point(rng, height, width)
        p2 = random_point(rng, height, width)
        if p1.distance_to(p2) >= min_length:
            return ScanLine(p1, p2)


def random_contour(
    rng: np.random.Generator, height: int, width: int, n_lv: int = 8
) -> ContourEstimate:
    """Random contour whose basal centroid is safely inside the image."""
    margin = 4.0
    pairs = []
    for _ in range(n_lv + 2):
        pairs.append(
            (
                Point2D(
                    float(rng.uniform(margin, width - 1 - margin)),
                    float(rng.uniform(margin, height - 1 - margin)),
                ),
                Point2D(
                    float(rng.uniform(margin, width - 1 - margin)),
                    float(rng.uniform(margin, height - 1 - margin)),
                ),
            )
        )
    return ContourEstimate(
        tuple(pairs[:n_lv]), tuple(pairs[n_lv:]), np.zeros((n_lv + 2, 2))
    )
