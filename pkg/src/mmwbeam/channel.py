"""Sparse geometric MIMO channel assembly.

The channel is a sum of L rank-one terms, one per propagation path:
``H = sqrt(Nr*Nt/L) * sum_l gain_l * u_l v_l^H`` with ``u_l``/``v_l`` the
receive/transmit steering vectors of the path.  The leading constant keeps
``E[||H||_F^2] = Nr*Nt`` under unit-variance complex Gaussian path gains.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .steering import AngleSpec, ArrayGeometry, steering_matrix

__all__ = [
    "PathComponent",
    "ChannelMatrix",
    "assemble_channel",
    "channel_power",
    "channel_to_dict",
    "channel_from_dict",
    "channel_to_json",
    "channel_from_json",
]


@dataclass(frozen=True)
class PathComponent:
    """One scatterer: complex gain plus departure/arrival directions."""

    gain: complex
    aod: AngleSpec
    aoa: AngleSpec

    def __post_init__(self) -> None:
        if not cmath.isfinite(complex(self.gain)):
            raise ValueError(f"path gain must be finite, got {self.gain}")


@dataclass(frozen=True)
class ChannelMatrix:
    """Dense Nr x Nt channel matrix together with its path count."""

    entries: np.ndarray
    num_paths: int

    @property
    def num_rx(self) -> int:
        return self.entries.shape[0]

    @property
    def num_tx(self) -> int:
        return self.entries.shape[1]


def assemble_channel(
    paths: Sequence[PathComponent],
    tx_geom: ArrayGeometry,
    rx_geom: ArrayGeometry,
) -> ChannelMatrix:
    """Assemble the channel matrix from path components.

    Rows index receive antennas, columns transmit antennas.
    """
    if len(paths) == 0:
        raise ValueError("at least one path component is required")
    gains = np.array([complex(p.gain) for p in paths])
    rx_steer = steering_matrix(rx_geom, [p.aoa for p in paths])  # (Nr, L)
    tx_steer = steering_matrix(tx_geom, [p.aod for p in paths])  # (Nt, L)
    scale = math.sqrt(rx_geom.num_elements * tx_geom.num_elements / len(paths))
    entries = scale * (rx_steer * gains) @ tx_steer.conj().T
    entries.setflags(write=False)
    return ChannelMatrix(entries=entries, num_paths=len(paths))


def channel_power(channel: ChannelMatrix) -> float:
    """Squared Frobenius norm of the channel matrix."""
    return float(np.linalg.norm(channel.entries, "fro") ** 2)


def channel_to_dict(
    paths: Sequence[PathComponent],
    tx_geom: ArrayGeometry,
    rx_geom: ArrayGeometry,
) -> dict:
    """Serialize a path list plus geometry to a plain dict fixture.

    Angles are stored in degrees; elevations are omitted (broadside
    elevation is implied), so only azimuth-plane fixtures round-trip.
    """
    if tx_geom.spacing_wavelengths != rx_geom.spacing_wavelengths:
        raise ValueError("fixture format stores a single spacing shared by both arrays")
    for p in paths:
        if p.aod.elevation_rad != math.pi / 2 or p.aoa.elevation_rad != math.pi / 2:
            raise ValueError("fixture format only covers broadside-elevation paths")
    return {
        "geometry": {
            "nt": tx_geom.num_elements,
            "nr": rx_geom.num_elements,
            "spacing": tx_geom.spacing_wavelengths,
        },
        "paths": [
            {
                "gain_re": complex(p.gain).real,
                "gain_im": complex(p.gain).imag,
                "aod_deg": p.aod.azimuth_deg,
                "aoa_deg": p.aoa.azimuth_deg,
            }
            for p in paths
        ],
    }


def channel_from_dict(doc: dict) -> tuple[list[PathComponent], ArrayGeometry, ArrayGeometry]:
    """Inverse of :func:`channel_to_dict`."""
    geo = doc["geometry"]
    tx_geom = ArrayGeometry(int(geo["nt"]), float(geo["spacing"]))
    rx_geom = ArrayGeometry(int(geo["nr"]), float(geo["spacing"]))
    paths = [
        PathComponent(
            gain=complex(p["gain_re"], p["gain_im"]),
            aod=AngleSpec.from_degrees(float(p["aod_deg"])),
            aoa=AngleSpec.from_degrees(float(p["aoa_deg"])),
        )
        for p in doc["paths"]
    ]
    return paths, tx_geom, rx_geom


def channel_to_json(
    paths: Sequence[PathComponent],
    tx_geom: ArrayGeometry,
    rx_geom: ArrayGeometry,
) -> str:
    return json.dumps(channel_to_dict(paths, tx_geom, rx_geom), sort_keys=True)


def channel_from_json(text: str) -> tuple[list[PathComponent], ArrayGeometry, ArrayGeometry]:
    return channel_from_dict(json.loads(text))
