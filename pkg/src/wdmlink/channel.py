"""Wavenumber-domain channel and noise matrices of the link.

Transmission multiplexes N spatial tones on the transmit segment,

    phi_n(s) = exp(j kappa_n s) / sqrt(L_s),      |s| <= L_s / 2,

with kappa_n = (2 pi / L_s)(n - (N + 1)/2), and projects the received
e_z onto the matching (unnormalized) tones

    psi_n(r_z) = exp(j kappa_n r_z),     |r_z - d_z| <= L_r / 2.

Tones beyond |kappa_n| = kappa radiate evanescently, which caps the
usable mode count at N_max = 2 floor(L_s / lambda) + 1.

The coupling and noise-correlation matrices are double integrals

    H[n, m] = II gz(r - s s_hat) phi_m(s) conj(psi_n(r_z)) ds dr_z,
    R[n, m] = II sinc(2 |r' - r| / lambda) conj(psi_n(r)) psi_m(r') dr dr',

both over the physical segment supports (the receive axis runs over
[d_z - L_r/2, d_z + L_r/2]; a d_z shift phases R as
R -> D^H R D with D = diag(exp(j kappa_n d_z)), congruent and therefore
performance-neutral).  Every entry is a tensor-product composite
Gauss-Legendre sum on the node set of :mod:`wdmlink.quadrature`; the
kernel does not depend on (n, m), so the assembly evaluates it once on
the node grid and contracts it with the tone matrices.  Entries agree
with per-entry :func:`wdmlink.quadrature.integrate_2d` calls to rounding
error, and the contraction order is fixed, so repeated runs are
bit-identical.

Ambient electromagnetic interference reaching the receive segment is
isotropic with spatial correlation sinc(2 ||r' - r|| / lambda), variance
sigma2_emi; hardware noise adds a white sigma2_hdw on top.  ``whiten``
factors C = sigma2_emi R + sigma2_hdw I = L L^H and returns
H_tilde = L^{-1} H for the receiver stage.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields
from typing import TextIO, Tuple

import numpy as np
import scipy.linalg

from . import em_field
from .em_field import EmConstants, spatial_frequency
from .geometry import LinkGeometry, source_direction
from .quadrature import QuadratureSpec, composite_gauss_nodes

__all__ = [
    "WdmConfig",
    "ChannelSet",
    "max_modes",
    "spatial_frequency",
    "tx_basis",
    "rx_basis",
    "assemble_H",
    "assemble_R",
    "whiten",
    "assemble_channel_set",
    "total_power",
    "emi_variance",
    "channel_header",
    "save_channel_set",
    "load_channel_set",
]

# Row-block size for the noise-correlation contraction; bounds the
# temporary kernel slab to a few tens of MB at any grid size.
_R_BLOCK_ROWS = 2048


@dataclass(frozen=True)
class WdmConfig:
    """Multiplexing and noise parameters.

    Attributes:
        wavelength: Carrier wavelength [m].
        n_modes: Number of multiplexed tones N.
        source_power: Current power constraint P_s [A^2].
        sigma2_emi: Interference variance at the receive segment [V^2/m^2].
        sigma2_hdw: White hardware noise variance [V^2/m^2]; zero keeps
            the noise purely interference-limited.
        quadrature: Sizing of all channel integrals.
    """

    wavelength: float
    n_modes: int
    source_power: float = 1e-7
    sigma2_emi: float = 1.0
    sigma2_hdw: float = 0.0
    quadrature: QuadratureSpec = QuadratureSpec()

    def __post_init__(self) -> None:
        if not (self.wavelength > 0.0 and math.isfinite(self.wavelength)):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValueError(f"n_modes must be a positive integer, got {self.n_modes}")
        if not (self.source_power >= 0.0 and math.isfinite(self.source_power)):
            raise ValueError(f"source_power must be nonnegative, got {self.source_power}")
        if self.sigma2_emi < 0.0 or self.sigma2_hdw < 0.0:
            raise ValueError("noise variances must be nonnegative")
        if self.sigma2_emi == 0.0 and self.sigma2_hdw == 0.0:
            raise ValueError("at least one noise variance must be positive")


@dataclass(frozen=True)
class ChannelSet:
    """Matrices describing one link realization.

    Attributes:
        H: Mode coupling matrix (N, N).
        R: Interference correlation matrix (N, N), Hermitian PSD.
        C: Noise covariance sigma2_emi R + sigma2_hdw I.
        L: Lower Cholesky factor of C.
        H_tilde: Whitened channel L^{-1} H.
    """

    H: np.ndarray
    R: np.ndarray
    C: np.ndarray
    L: np.ndarray
    H_tilde: np.ndarray


def max_modes(L_s: float, wavelength: float) -> int:
    """Largest usable mode count, 2 * floor(L_s / wavelength) + 1."""
    if not L_s > 0.0:
        raise ValueError(f"L_s must be positive, got {L_s}")
    if not wavelength > 0.0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    return 2 * math.floor(L_s / wavelength) + 1


def _mode_frequencies(cfg: WdmConfig, geom: LinkGeometry) -> np.ndarray:
    return np.array(
        [spatial_frequency(n, cfg.n_modes, geom.L_s) for n in range(1, cfg.n_modes + 1)]
    )


def tx_basis(n: int, s: np.ndarray, cfg: WdmConfig, geom: LinkGeometry) -> np.ndarray:
    """Transmit tone phi_n evaluated at arc length(s) ``s`` [m].

    Unit-norm on the segment, zero outside it.
    """
    kappa_n = spatial_frequency(n, cfg.n_modes, geom.L_s)
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) <= geom.L_s / 2.0
    return np.where(
        inside, np.exp(1j * kappa_n * s) / math.sqrt(geom.L_s), 0.0 + 0.0j
    )


def rx_basis(n: int, r_z: np.ndarray, cfg: WdmConfig, geom: LinkGeometry) -> np.ndarray:
    """Receive tone psi_n at height(s) ``r_z`` [m].

    Unit modulus on the segment (deliberately unnormalized), zero
    outside it.
    """
    kappa_n = spatial_frequency(n, cfg.n_modes, geom.L_s)
    r_z = np.asarray(r_z, dtype=float)
    inside = np.abs(r_z - geom.d_z) <= geom.L_r / 2.0
    return np.where(inside, np.exp(1j * kappa_n * r_z), 0.0 + 0.0j)


def _validate_mode_count(geom: LinkGeometry, cfg: WdmConfig) -> None:
    n_max = max_modes(geom.L_s, cfg.wavelength)
    if cfg.n_modes > n_max:
        raise ValueError(
            f"n_modes = {cfg.n_modes} exceeds the usable maximum {n_max} "
            f"for L_s = {geom.L_s} m at wavelength {cfg.wavelength} m"
        )


def assemble_H(geom: LinkGeometry, cfg: WdmConfig) -> np.ndarray:
    """Mode coupling matrix of the link.

    H[n, m] couples transmit tone m to receive tone n through the scalar
    far-field kernel.  Both integration axes oscillate at a rate of at
    most 2 kappa (propagation phase plus tone), so the composite rule is
    sized with half a wavelength as the oscillation period.

    Returns:
        Complex array (N, N), row index = receive tone.

    Warns:
        NearFieldWarning: If the segments come within ten wavelengths.
    """
    _validate_mode_count(geom, cfg)
    k = EmConstants(cfg.wavelength)
    osc = cfg.wavelength / 2.0
    s_nodes, s_weights = composite_gauss_nodes(
        -geom.L_s / 2.0, geom.L_s / 2.0, osc, cfg.quadrature
    )
    r_nodes, r_weights = composite_gauss_nodes(
        geom.d_z - geom.L_r / 2.0, geom.d_z + geom.L_r / 2.0, osc, cfg.quadrature
    )
    s_hat = source_direction(geom.theta_s, geom.phi_s)
    u = np.empty((r_nodes.size, s_nodes.size, 3))
    u[:, :, 0] = geom.d_x - s_nodes[None, :] * s_hat[0]
    u[:, :, 1] = -s_nodes[None, :] * s_hat[1]
    u[:, :, 2] = r_nodes[:, None] - s_nodes[None, :] * s_hat[2]
    d_min = float(np.sqrt(np.min(np.sum(u * u, axis=-1))))
    if d_min < em_field.FAR_FIELD_GUARD_WAVELENGTHS * cfg.wavelength:
        import warnings

        warnings.warn(
            f"closest segment separation {d_min:.3g} m is below "
            f"{em_field.FAR_FIELD_GUARD_WAVELENGTHS:g} wavelengths",
            em_field.NearFieldWarning,
            stacklevel=2,
        )
    kern = em_field.gz_kernel(u, geom.theta_s, geom.phi_s, k)
    kappas = _mode_frequencies(cfg, geom)
    tx = np.exp(1j * np.outer(s_nodes, kappas)) / math.sqrt(geom.L_s)
    rx = np.exp(1j * np.outer(r_nodes, kappas))
    left = (rx.conj() * r_weights[:, None]).T
    right = tx * s_weights[:, None]
    return (left @ kern) @ right


def assemble_R(geom: LinkGeometry, cfg: WdmConfig) -> np.ndarray:
    """Interference correlation matrix between receive tones.

    The isotropic-interference correlation sinc(2 |r' - r| / lambda)
    combined with the tones oscillates at a rate of at most 2 kappa per
    axis, so the node set matches the one used for H.  The result is
    symmetrized to (R + R^H) / 2 after assembly to remove rounding skew.

    Returns:
        Complex Hermitian PSD array (N, N).
    """
    _validate_mode_count(geom, cfg)
    osc = cfg.wavelength / 2.0
    r_nodes, r_weights = composite_gauss_nodes(
        geom.d_z - geom.L_r / 2.0, geom.d_z + geom.L_r / 2.0, osc, cfg.quadrature
    )
    kappas = _mode_frequencies(cfg, geom)
    tones = np.exp(1j * np.outer(r_nodes, kappas)) * r_weights[:, None]
    out = np.zeros((cfg.n_modes, cfg.n_modes), dtype=complex)
    for lo in range(0, r_nodes.size, _R_BLOCK_ROWS):
        hi = min(lo + _R_BLOCK_ROWS, r_nodes.size)
        kern_block = np.sinc(
            2.0 * np.abs(r_nodes[lo:hi, None] - r_nodes[None, :]) / cfg.wavelength
        )
        out += tones[lo:hi].conj().T @ (kern_block @ tones)
    return 0.5 * (out + out.conj().T)


def whiten(H: np.ndarray, R: np.ndarray, cfg: WdmConfig) -> ChannelSet:
    """Factor the noise covariance and whiten the channel.

    Args:
        H: Coupling matrix (N, N).
        R: Interference correlation (N, N), Hermitian.
        cfg: Noise variances.

    Returns:
        ChannelSet with C = sigma2_emi R + sigma2_hdw I, its lower
        Cholesky factor L and H_tilde = L^{-1} H (triangular solve, no
        explicit inverse).

    Raises:
        numpy.linalg.LinAlgError: If C is not positive definite; the
            message reports the smallest eigenvalue.
    """
    H = np.asarray(H)
    R = np.asarray(R)
    if H.shape != R.shape or H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"H and R must be square and congruent, got {H.shape} and {R.shape}")
    C = cfg.sigma2_emi * R + cfg.sigma2_hdw * np.eye(H.shape[0])
    try:
        L = np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        smallest = float(np.linalg.eigvalsh(C)[0])
        raise np.linalg.LinAlgError(
            f"noise covariance is not positive definite "
            f"(smallest eigenvalue {smallest:.6e})"
        ) from None
    H_tilde = scipy.linalg.solve_triangular(L, H, lower=True)
    return ChannelSet(H=H, R=R, C=C, L=L, H_tilde=H_tilde)


def assemble_channel_set(geom: LinkGeometry, cfg: WdmConfig) -> ChannelSet:
    """Assemble H and R for the geometry and whiten in one step."""
    return whiten(assemble_H(geom, cfg), assemble_R(geom, cfg), cfg)


def total_power(cfg: WdmConfig) -> float:
    """Transmit power budget P = (kappa * Z0)^2 * P_s [V^2/m^2]."""
    k = EmConstants(cfg.wavelength)
    return (k.kappa * k.z0) ** 2 * cfg.source_power


def emi_variance(power: float, snr_db: float) -> float:
    """Interference variance giving the ratio power/sigma2_emi in dB."""
    if not power > 0.0:
        raise ValueError(f"power must be positive, got {power}")
    return power / 10.0 ** (snr_db / 10.0)


# ---------------------------------------------------------------------------
# Serialization: a plain text format whose floats are written with repr()
# so that reloading reproduces every matrix bit for bit.

_MATRIX_ORDER = ("H", "R", "C", "L", "H_tilde")
_FORMAT_TAG = "wdmlink-channel-set v1"


def channel_header(geom: LinkGeometry, cfg: WdmConfig) -> str:
    """Canonical header describing one (geometry, config) pair.

    Used verbatim in channel files and hashed for cache file names; two
    runs produce the same header exactly when every parameter matches.
    """
    lines = [_FORMAT_TAG]
    for f in fields(geom):
        lines.append(f"geometry.{f.name} = {getattr(geom, f.name)!r}")
    for f in fields(cfg):
        if f.name == "quadrature":
            continue
        lines.append(f"wdm.{f.name} = {getattr(cfg, f.name)!r}")
    for f in fields(cfg.quadrature):
        lines.append(f"quadrature.{f.name} = {getattr(cfg.quadrature, f.name)!r}")
    return "\n".join(lines) + "\n"


def channel_cache_key(geom: LinkGeometry, cfg: WdmConfig) -> str:
    """Stable hash of the header, suitable as a cache file stem."""
    return hashlib.sha256(channel_header(geom, cfg).encode()).hexdigest()[:24]


def _write_matrix(out: TextIO, name: str, mat: np.ndarray) -> None:
    rows, cols = mat.shape
    out.write(f"matrix {name} {rows} {cols}\n")
    for i in range(rows):
        parts = []
        for v in mat[i]:
            parts.append(repr(float(v.real)))
            parts.append(repr(float(v.imag)))
        out.write(" ".join(parts) + "\n")


def save_channel_set(
    path: str, ch: ChannelSet, geom: LinkGeometry, cfg: WdmConfig
) -> None:
    """Write a channel set with its provenance header to ``path``."""
    with open(path, "w", encoding="ascii", newline="\n") as out:
        out.write(channel_header(geom, cfg))
        for name in _MATRIX_ORDER:
            _write_matrix(out, name, np.asarray(getattr(ch, name), dtype=complex))
        out.write("end\n")


def _parse_header_value(raw: str):
    if raw == "True":
        return True
    if raw == "False":
        return False
    try:
        return int(raw)
    except ValueError:
        return float(raw)


def load_channel_set(path: str) -> Tuple[ChannelSet, LinkGeometry, WdmConfig]:
    """Read a channel set written by :func:`save_channel_set`.

    Returns:
        (channel_set, geometry, config); matrices compare equal to the
        saved ones.

    Raises:
        ValueError: On a malformed or inconsistent file.
    """
    with open(path, "r", encoding="ascii") as inp:
        first = inp.readline().rstrip("\n")
        if first != _FORMAT_TAG:
            raise ValueError(f"{path}: not a channel-set file (leading line {first!r})")
        geom_kv = {}
        wdm_kv = {}
        quad_kv = {}
        line = inp.readline()
        while line and not line.startswith("matrix "):
            key, _, raw = line.rstrip("\n").partition(" = ")
            section, _, name = key.partition(".")
            target = {"geometry": geom_kv, "wdm": wdm_kv, "quadrature": quad_kv}.get(
                section
            )
            if target is None or not name:
                raise ValueError(f"{path}: unexpected header line {line!r}")
            target[name] = _parse_header_value(raw)
            line = inp.readline()
        matrices = {}
        while line and line.strip() != "end":
            tag, name, rows, cols = line.split()
            if tag != "matrix":
                raise ValueError(f"{path}: unexpected line {line!r}")
            rows, cols = int(rows), int(cols)
            mat = np.empty((rows, cols), dtype=complex)
            for i in range(rows):
                nums = inp.readline().split()
                if len(nums) != 2 * cols:
                    raise ValueError(f"{path}: short row {i} in matrix {name}")
                row = np.array([float(v) for v in nums])
                mat[i] = row[0::2] + 1j * row[1::2]
            matrices[name] = mat
            line = inp.readline()
        if line.strip() != "end":
            raise ValueError(f"{path}: truncated file, missing end marker")
    missing = [n for n in _MATRIX_ORDER if n not in matrices]
    if missing:
        raise ValueError(f"{path}: missing matrices {missing}")
    geom = LinkGeometry(**geom_kv)
    cfg = WdmConfig(quadrature=QuadratureSpec(**quad_kv), **wdm_kv)
    ch = ChannelSet(**{name: matrices[name] for name in _MATRIX_ORDER})
    return ch, geom, cfg


def load_matching_channel_set(
    path: str, geom: LinkGeometry, cfg: WdmConfig
) -> ChannelSet:
    """Load a channel set and require its header to match ``geom``/``cfg``."""
    ch, file_geom, file_cfg = load_channel_set(path)
    if file_geom != geom or file_cfg != cfg:
        raise ValueError(
            f"{path}: stored header does not match the requested "
            f"geometry/config (stored {file_geom}, {file_cfg})"
        )
    return ch
