"""Channel gains (LoS, ORIS mirror, diffuse wall) and optical-SNR coefficients.

The optical SNR of user ``u`` is affine in the association variables::

    gamma'_u(beta) = c_u + sum_{l,k} a[l,k,u] * beta[l,k,u]

and the electrical SNR is ``gamma_u = gamma'_u ** 2``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (GRAZE_TOL, BlockageMap, LedSpec, PdSpec, Scene, blockage_indicators,
                       lambertian_order)

__all__ = [
    "PathGeometry", "RadioConfig", "ChannelCoefficients", "lambertian_order", "los_gain",
    "oris_gain", "wall_gain", "assemble_coefficients", "snr_db_conversions", "compute_channel",
    "dump_channel_csv",
]


@dataclass(frozen=True)
class PathGeometry:
    distance: float
    cos_emission: float
    cos_incidence: float


@dataclass(frozen=True)
class RadioConfig:
    total_power: float = 10.0  # W, optical per LED
    subcarriers: int = 512
    noise_psd: float = 2.5e-20  # W/Hz
    bandwidth: float = 20e6  # Hz
    responsivity: float = 0.4  # A/W
    noise_bandwidth: str = "total"  # "total": B, "subcarrier": B / N

    def __post_init__(self):
        if self.noise_bandwidth not in ("total", "subcarrier"):
            raise ValueError(f"unknown noise bandwidth mode {self.noise_bandwidth!r}")
        if self.subcarriers <= 2:
            raise ValueError("need more than 2 subcarriers")
        if min(self.total_power, self.noise_psd, self.bandwidth, self.responsivity) <= 0:
            raise ValueError("radio parameters must be positive")

    @property
    def subcarrier_power(self) -> float:
        # DC and Nyquist subcarriers carry no data
        return self.total_power / math.sqrt(self.subcarriers - 2)

    @property
    def effective_bandwidth(self) -> float:
        if self.noise_bandwidth == "subcarrier":
            return self.bandwidth / self.subcarriers
        return self.bandwidth

    @property
    def snr_scale(self) -> float:
        """Factor mapping a channel gain to optical SNR: rho * P_sc / sqrt(N0 B)."""
        return self.responsivity * self.subcarrier_power / math.sqrt(
            self.noise_psd * self.effective_bandwidth)


def _cos_pow(c, m):
    c = np.clip(c, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        return np.where(c > 0, np.exp(m * np.log(np.where(c > 0, c, 1.0))), 0.0)


def _lambertian(m, area):
    return (m + 1.0) * area / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# Vectorized gain tensors. ``src`` (A,3), ``dst`` (B,3) -> (A,B) arrays.
# ---------------------------------------------------------------------------

def _los_tensor(leds, pds, m, pd: PdSpec):
    v = pds[None, :, :] - leds[:, None, :]
    d2 = np.einsum("abi,abi->ab", v, v)
    d = np.sqrt(d2)
    cos_em = -v[..., 2] / d  # LED faces -z
    cos_in = -v[..., 2] / d  # PD faces +z, light arrives from above
    ok = (cos_em > 0) & (cos_in >= math.cos(pd.fov_semiangle) - 1e-15)
    g = _lambertian(m, pd.area) / d2 * _cos_pow(cos_em, m) * cos_in
    return np.where(ok, g, 0.0)


def _oris_tensor(leds, elems, pds, m, pd: PdSpec, r_oris):
    """(L, K, U) mirror gains (mirrors steered optimally, point reflector)."""
    v1 = elems[None, :, :] - leds[:, None, :]  # (L,K,3)
    d1 = np.sqrt(np.einsum("lki,lki->lk", v1, v1))
    cos_em = -v1[..., 2] / d1
    v2 = pds[None, :, :] - elems[:, None, :]  # (K,U,3)
    d2 = np.sqrt(np.einsum("kui,kui->ku", v2, v2))
    cos_in = -v2[..., 2] / d2
    in_fov = cos_in >= math.cos(pd.fov_semiangle) - 1e-15
    total = d1[:, :, None] + d2[None, :, :]
    g = (r_oris * _lambertian(m, pd.area) / total ** 2
         * _cos_pow(cos_em, m)[:, :, None] * cos_in[None, :, :])
    ok = (cos_em > 0)[:, :, None] & (in_fov & (cos_in > 0))[None, :, :]
    return np.where(ok, g, 0.0)


def _wall_tensor(leds, centers, normals, areas, pds, m, pd: PdSpec, r_wall):
    """(L, W, U) first-order diffuse wall gains."""
    v1 = centers[None, :, :] - leds[:, None, :]  # LED -> wall
    d1sq = np.einsum("lwi,lwi->lw", v1, v1)
    d1 = np.sqrt(d1sq)
    cos_em = -v1[..., 2] / d1
    cos_wall_in = -np.einsum("lwi,wi->lw", v1, normals) / d1
    v2 = pds[None, :, :] - centers[:, None, :]  # wall -> PD
    d2sq = np.einsum("wui,wui->wu", v2, v2)
    d2 = np.sqrt(d2sq)
    cos_wall_out = np.einsum("wui,wi->wu", v2, normals) / d2
    cos_pd_in = -v2[..., 2] / d2
    first = np.where((cos_em > 0) & (cos_wall_in > 0),
                     _cos_pow(cos_em, m) * cos_wall_in / d1sq, 0.0)
    ok2 = (cos_wall_out > 0) & (cos_pd_in > 0) & (cos_pd_in >= math.cos(pd.fov_semiangle) - 1e-15)
    second = np.where(ok2, cos_wall_out * cos_pd_in / d2sq, 0.0) * areas[:, None]
    return r_wall * _lambertian(m, pd.area) * first[:, :, None] * second[None, :, :]


# ---------------------------------------------------------------------------
# Scalar entry points
# ---------------------------------------------------------------------------

def los_gain(led: LedSpec, pd_pos, pd: PdSpec, blocked: bool = False) -> float:
    """LoS gain of an upward PD at ``pd_pos`` from a downward LED."""
    if blocked:
        return 0.0
    g = _los_tensor(np.array([led.position], float), np.array([pd_pos], float),
                    led.lambertian_order, pd)
    return float(g[0, 0])


def oris_gain(led: LedSpec, elem, pd_pos, pd: PdSpec, reflectance: float) -> float:
    """Gain of the LED -> mirror -> PD path; ``elem`` is an element or a center point."""
    center = getattr(elem, "center", elem)
    g = _oris_tensor(np.array([led.position], float), np.array([center], float),
                     np.array([pd_pos], float), led.lambertian_order, pd, reflectance)
    return float(g[0, 0, 0])


def wall_gain(led: LedSpec, elem, pd_pos, pd: PdSpec, reflectance: float) -> float:
    """Gain of the LED -> diffuse wall patch -> PD path."""
    g = _wall_tensor(np.array([led.position], float), np.array([elem.center], float),
                     np.array([elem.normal], float), np.array([elem.area], float),
                     np.array([pd_pos], float), led.lambertian_order, pd, reflectance)
    return float(g[0, 0, 0])


def path_geometry(src, dst, src_normal, dst_normal) -> PathGeometry:
    v = np.asarray(dst, float) - np.asarray(src, float)
    d = float(np.linalg.norm(v))
    return PathGeometry(d, float(np.dot(v, src_normal) / d), float(-np.dot(v, dst_normal) / d))


def snr_db_conversions(gamma_th_db: float) -> tuple[float, float]:
    """Threshold in dB -> (linear electrical SNR, optical SNR)."""
    g = 10.0 ** (gamma_th_db / 10.0)
    return g, math.sqrt(g)


def to_db(gamma_prime):
    """Optical SNR -> electrical SNR in dB (``-inf`` for a dead link)."""
    gp = np.asarray(gamma_prime, dtype=float)
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(gp)


# ---------------------------------------------------------------------------
# Coefficient assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelCoefficients:
    """Optical-SNR coefficients of one deployment.

    ``a_l``, ``a_k``, ``a_u``, ``a_val`` list the nonzero ORIS contributions
    in lexicographic ``(l, k, u)`` order.
    """

    c: np.ndarray
    a_l: np.ndarray
    a_k: np.ndarray
    a_u: np.ndarray
    a_val: np.ndarray
    n_leds: int
    n_oris: int
    gains_los: np.ndarray | None = None
    gains_oris: np.ndarray | None = None
    gains_wall: np.ndarray | None = None

    @property
    def n_users(self) -> int:
        return len(self.c)

    @property
    def nnz(self) -> int:
        return len(self.a_val)

    def dense_a(self) -> np.ndarray:
        a = np.zeros((self.n_leds, self.n_oris, self.n_users))
        a[self.a_l, self.a_k, self.a_u] = self.a_val
        return a

    def gamma_prime(self, triples) -> np.ndarray:
        """Per-user optical SNR for a set of ``(l, k, u)`` assignments."""
        g = self.c.astype(float).copy()
        t = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        if len(t):
            keys = self._keys(self.a_l, self.a_k, self.a_u)
            want = self._keys(t[:, 0], t[:, 1], t[:, 2])
            pos = np.minimum(np.searchsorted(keys, want), max(len(keys) - 1, 0))
            hit = keys[pos] == want if len(keys) else np.zeros(len(t), dtype=bool)
            np.add.at(g, t[hit, 2], self.a_val[pos[hit]])
        return g

    def _keys(self, l, k, u):
        # entries are stored in lexicographic (l, k, u) order, so keys are sorted
        K, U = max(self.n_oris, 1), max(self.n_users, 1)
        return (np.asarray(l, np.int64) * K + np.asarray(k, np.int64)) * U + np.asarray(u, np.int64)

    @classmethod
    def from_dense(cls, c, a) -> "ChannelCoefficients":
        """Build from a constant vector and a dense ``(L, K, U)`` gain array."""
        a = np.asarray(a, dtype=float)
        c = np.asarray(c, dtype=float)
        if a.ndim != 3 or a.shape[2] != len(c):
            raise ValueError("a must be (L, K, U) with U = len(c)")
        if np.any(a < 0) or np.any(c < 0):
            raise ValueError("coefficients must be non-negative")
        l, k, u = np.nonzero(a > 0)
        return cls(c, l, k, u, a[l, k, u], a.shape[0], a.shape[1])


def _gain_tensors(scene: Scene):
    m = scene.lambertian_order
    leds, pds = scene.led_positions, scene.pd_positions
    los = _los_tensor(leds, pds, m, scene.pd) if len(pds) else np.zeros((len(leds), 0))
    oris = _oris_tensor(leds, scene.oris_centers, pds, m, scene.pd, scene.reflectance_oris)
    wall = _wall_tensor(leds, scene.wall_centers, scene.wall_normals, scene.wall_areas,
                        pds, m, scene.pd, scene.reflectance_wall)
    return los, oris, wall


def assemble_coefficients(scene: Scene, blockage: BlockageMap, radio: RadioConfig,
                          keep_gains: bool = True, _gains=None) -> ChannelCoefficients:
    los, oris, wall = _gains if _gains is not None else _gain_tensors(scene)
    s = radio.snr_scale
    clear_los = los * blockage.I_lu
    clear_wall = wall * blockage.I_lwu
    # fixed reduction order: walls within each LED, then LEDs
    per_led = clear_los + clear_wall.sum(axis=1)
    c = s * per_led.sum(axis=0)
    a = s * oris * blockage.I_lku
    l, k, u = np.nonzero(a > 0)
    return ChannelCoefficients(
        c=c, a_l=l, a_k=k, a_u=u, a_val=a[l, k, u],
        n_leds=len(scene.leds), n_oris=len(scene.oris),
        gains_los=los if keep_gains else None,
        gains_oris=oris if keep_gains else None,
        gains_wall=wall if keep_gains else None,
    )


def compute_channel(scene: Scene, radio: RadioConfig, keep_gains: bool = False,
                    tol: float = GRAZE_TOL):
    """Blockage plus coefficients, testing only paths with nonzero gain."""
    gains = _gain_tensors(scene)
    need = tuple(g > 0 for g in gains)
    blockage = blockage_indicators(scene, tol, need=need)
    return blockage, assemble_coefficients(scene, blockage, radio, keep_gains, _gains=gains)


def dump_channel_csv(scene: Scene, blockage: BlockageMap, coeffs: ChannelCoefficients, radio: RadioConfig) -> str:
    """All gains as CSV text: ``kind, l, k_or_w, u, gain, blocked, coefficient``."""
    los, oris, wall = _gain_tensors(scene)
    s = radio.snr_scale
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "l", "k_or_w", "u", "gain", "blocked", "coefficient"])
    L, U = los.shape
    for l in range(L):
        for u in range(U):
            b = not blockage.I_lu[l, u]
            w.writerow(["los", l, "", u, repr(float(los[l, u])), int(b), repr(0.0 if b else s * float(los[l, u]))])
    for kind, g, ind in (("oris", oris, blockage.I_lku), ("wall", wall, blockage.I_lwu)):
        for l, k, u in zip(*np.nonzero(g > 0)):
            b = not ind[l, k, u]
            w.writerow([kind, l, k, u, repr(float(g[l, k, u])), int(b),
                        repr(0.0 if b else s * float(g[l, k, u]))])
    for u, cu in enumerate(coeffs.c):
        w.writerow(["c", "", "", u, "", "", repr(float(cu))])
    return buf.getvalue()
