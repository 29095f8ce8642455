"""Planar nearly-constant-velocity Kalman tracking.

State order is ``[x, vx, y, vy]``. Process noise is continuous white
acceleration with intensity ``q`` per axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])


def transition(dt: float) -> np.ndarray:
    f = np.eye(4)
    f[0, 1] = f[2, 3] = dt
    return f


def process_covariance(q: float, dt: float) -> np.ndarray:
    block = q * np.array([[dt**3 / 3.0, dt**2 / 2.0], [dt**2 / 2.0, dt]])
    out = np.zeros((4, 4))
    out[:2, :2] = block
    out[2:, 2:] = block
    return out


def polar_covariance(sigma_range: float, sigma_cross: float, bearing: float) -> np.ndarray:
    """Cartesian covariance of a measurement with independent range and cross-range errors."""
    c, s = np.cos(bearing), np.sin(bearing)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([sigma_range**2, sigma_cross**2]) @ rot.T


@dataclass
class Track:
    x: np.ndarray
    P: np.ndarray
    q: float
    t: float
    last_update: float

    @property
    def position(self) -> np.ndarray:
        return self.x[[0, 2]]

    @property
    def velocity(self) -> np.ndarray:
        return self.x[[1, 3]]

    def position_rms(self, P: np.ndarray | None = None) -> float:
        P = self.P if P is None else P
        return float(np.sqrt(max(P[0, 0] + P[2, 2], 0.0)))

    def coast_rms(self, dt: float) -> float:
        """RMS position error after coasting ``dt`` more seconds."""
        f = transition(dt)
        return self.position_rms(f @ self.P @ f.T + process_covariance(self.q, dt))


def init_track(position, velocity, sigma_pos: float, sigma_vel: float, q: float, t: float) -> Track:
    x = np.array([position[0], velocity[0], position[1], velocity[1]], dtype=float)
    P = np.diag([sigma_pos**2, sigma_vel**2, sigma_pos**2, sigma_vel**2])
    return Track(x, P, q, t, t)


def predict(track: Track, t: float) -> Track:
    dt = t - track.t
    if dt < 0:
        raise ValueError("tracks only move forward in time")
    if dt > 0:
        f = transition(dt)
        track.x = f @ track.x
        track.P = f @ track.P @ f.T + process_covariance(track.q, dt)
        track.P = 0.5 * (track.P + track.P.T)
        track.t = t
    return track


def update(track: Track, z, R: np.ndarray) -> Track:
    """Joseph-form update with a Cartesian position measurement."""
    z = np.asarray(z, dtype=float)
    S = _H @ track.P @ _H.T + R
    K = np.linalg.solve(S, _H @ track.P).T
    track.x = track.x + K @ (z - _H @ track.x)
    a = np.eye(4) - K @ _H
    track.P = a @ track.P @ a.T + K @ R @ K.T
    track.P = 0.5 * (track.P + track.P.T)
    track.last_update = track.t
    return track


def update_tracks(tracks: dict, measurements: dict) -> dict:
    """Apply ``{track id: (z, R)}``; tracks without a measurement are left predicted only."""
    for key, (z, R) in measurements.items():
        update(tracks[key], z, R)
    return tracks
