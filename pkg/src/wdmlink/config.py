"""Run configuration: built-in profiles and the INI-style config file.

A run is described by a :class:`RunConfig`.  Two profiles ship with the
package: ``desk`` (a bench-sized link that keeps every experiment fast)
and ``full`` (the production-scale link).  A config file can override
any subset of keys; angles in files and on the command line are degrees,
lengths are meters, powers are A^2 and noise levels are given as a power
ratio in dB.

Sections and keys:

    [geometry]   L_s, L_r, d_x, d_z, theta_s, phi_s
    [wdm]        wavelength, n_modes ("max" allowed), source_power,
                 snr_emi_db, sigma2_hdw, mmse_form
    [quadrature] points_per_wavelength, nodes_per_panel, max_panels,
                 rel_tol
    [sweep]      parameter (d_z | theta_s | d_x), start, stop, count,
                 seed, draws_per_phi, phi_set, theta_max
    [field]      mode_offsets, grid_points
    [pattern]    mode_offsets, step_deg
    [output]     csv, svg, cache_dir, workers
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .channel import WdmConfig, emi_variance, max_modes, total_power
from .geometry import LinkGeometry
from .quadrature import QuadratureSpec

__all__ = [
    "SweepSettings",
    "FieldSettings",
    "PatternSettings",
    "OutputSettings",
    "RunConfig",
    "desk_profile",
    "full_profile",
    "profile_by_name",
    "load_config",
]

SWEEP_PARAMETERS = ("d_z", "theta_s", "d_x")


@dataclass(frozen=True)
class SweepSettings:
    """Swept parameter grid and ensemble controls.

    ``seed``, ``draws_per_phi``, ``phi_set_deg`` and ``theta_max_deg``
    only matter for orientation-averaged sweeps.
    """

    parameter: str = "d_z"
    start: float = 0.0
    stop: float = 2.0
    count: int = 21
    seed: int = 1
    draws_per_phi: int = 20
    phi_set_deg: Tuple[float, ...] = (0.0, 22.5, 45.0, 77.5, 90.0)
    theta_max_deg: float = 30.0

    def __post_init__(self) -> None:
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(
                f"sweep parameter must be one of {SWEEP_PARAMETERS}, "
                f"got {self.parameter!r}"
            )
        if self.count < 1:
            raise ValueError(f"sweep count must be positive, got {self.count}")
        if self.count > 1 and not self.stop > self.start:
            raise ValueError("sweep needs stop > start when count > 1")
        if self.draws_per_phi < 1:
            raise ValueError("draws_per_phi must be positive")
        if not 0.0 <= self.theta_max_deg <= 180.0:
            raise ValueError("theta_max must lie in [0, 180] degrees")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class FieldSettings:
    mode_offsets: Tuple[int, ...] = (-2, 0, 5)
    grid_points: int = 1201

    def __post_init__(self) -> None:
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")


@dataclass(frozen=True)
class PatternSettings:
    mode_offsets: Tuple[int, ...] = (-9, -5, 0, 5, 9)
    step_deg: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.step_deg <= 10.0:
            raise ValueError("step_deg must lie in (0, 10] degrees")


@dataclass(frozen=True)
class OutputSettings:
    csv_path: str = ""
    svg_path: str = ""
    cache_dir: str = ""
    workers: int = 1

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass(frozen=True)
class RunConfig:
    """Everything a single experiment run needs."""

    geometry: LinkGeometry
    wdm: WdmConfig
    sweep: SweepSettings = SweepSettings()
    field: FieldSettings = FieldSettings()
    pattern: PatternSettings = PatternSettings()
    output: OutputSettings = OutputSettings()
    mmse_form: str = "hermitian"


def _wdm_for(
    wavelength: float,
    L_s: float,
    n_modes: Optional[int],
    source_power: float,
    snr_emi_db: float,
    sigma2_hdw: float,
    quadrature: QuadratureSpec,
) -> WdmConfig:
    if n_modes is None:
        n_modes = max_modes(L_s, wavelength)
    probe = WdmConfig(
        wavelength=wavelength,
        n_modes=n_modes,
        source_power=source_power,
        sigma2_emi=1.0,
        sigma2_hdw=sigma2_hdw,
        quadrature=quadrature,
    )
    return replace(probe, sigma2_emi=emi_variance(total_power(probe), snr_emi_db))


def desk_profile() -> RunConfig:
    """Bench-sized link: 2 cm wavelength, 1 m receive segment, 21 modes."""
    geom = LinkGeometry(L_s=0.2, L_r=1.0, d_x=2.0)
    wdm = _wdm_for(
        wavelength=0.02,
        L_s=geom.L_s,
        n_modes=None,
        source_power=1e-7,
        snr_emi_db=90.0,
        sigma2_hdw=0.0,
        quadrature=QuadratureSpec(),
    )
    return RunConfig(geometry=geom, wdm=wdm)


def full_profile() -> RunConfig:
    """Full-sized link: 1 cm wavelength, 3 m receive segment, 41 modes."""
    geom = LinkGeometry(L_s=0.2, L_r=3.0, d_x=5.0)
    wdm = _wdm_for(
        wavelength=0.01,
        L_s=geom.L_s,
        n_modes=None,
        source_power=1e-7,
        snr_emi_db=90.0,
        sigma2_hdw=0.0,
        quadrature=QuadratureSpec(),
    )
    return RunConfig(
        geometry=geom,
        wdm=wdm,
        sweep=SweepSettings(stop=5.0),
        field=FieldSettings(mode_offsets=(-2, 0, 5)),
        pattern=PatternSettings(mode_offsets=(-17, -10, -5, 0, 5, 10, 17)),
    )


_PROFILES = {"desk": desk_profile, "full": full_profile}


def profile_by_name(name: str) -> RunConfig:
    try:
        return _PROFILES[name]()
    except KeyError:
        raise ValueError(
            f"unknown profile {name!r}, available: {sorted(_PROFILES)}"
        ) from None


def _get_typed(section, key: str, kind, errors: list):
    raw = section.get(key)
    try:
        return kind(raw)
    except (TypeError, ValueError):
        errors.append(f"[{section.name}] {key} = {raw!r}")
        return None


def _int_tuple(raw: str) -> Tuple[int, ...]:
    return tuple(int(part.strip()) for part in raw.split(",") if part.strip())


def _float_tuple(raw: str) -> Tuple[float, ...]:
    return tuple(float(part.strip()) for part in raw.split(",") if part.strip())


_SECTION_KEYS = {
    "geometry": {"L_s", "L_r", "d_x", "d_z", "theta_s", "phi_s"},
    "wdm": {
        "wavelength",
        "n_modes",
        "source_power",
        "snr_emi_db",
        "sigma2_hdw",
        "mmse_form",
    },
    "quadrature": {"points_per_wavelength", "nodes_per_panel", "max_panels", "rel_tol"},
    "sweep": {
        "parameter",
        "start",
        "stop",
        "count",
        "seed",
        "draws_per_phi",
        "phi_set",
        "theta_max",
    },
    "field": {"mode_offsets", "grid_points"},
    "pattern": {"mode_offsets", "step_deg"},
    "output": {"csv", "svg", "cache_dir", "workers"},
}


def load_config(path: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Parse a config file, overriding ``base`` (default: desk profile).

    Raises:
        ValueError: On unknown sections/keys or malformed values, with
            every offender listed.
    """
    base = base if base is not None else desk_profile()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    # keys like L_s are case sensitive; the default folds them to lower case
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ValueError(f"cannot parse config file {path}: {exc}") from None

    errors: list = []
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            errors.append(f"unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in _SECTION_KEYS[section]:
                errors.append(f"unknown key {key!r} in [{section}]")
    if errors:
        raise ValueError(f"invalid config file {path}: " + "; ".join(errors))

    geom = base.geometry
    if parser.has_section("geometry"):
        sec = parser["geometry"]
        kwargs = {}
        for key in ("L_s", "L_r", "d_x", "d_z"):
            if key in sec:
                kwargs[key] = _get_typed(sec, key, float, errors)
        for key in ("theta_s", "phi_s"):
            if key in sec:
                val = _get_typed(sec, key, float, errors)
                if val is not None:
                    kwargs[key] = math.radians(val)
        if not errors:
            geom = replace(geom, **kwargs)

    quad = base.wdm.quadrature
    if parser.has_section("quadrature"):
        sec = parser["quadrature"]
        kwargs = {}
        if "points_per_wavelength" in sec:
            kwargs["points_per_wavelength"] = _get_typed(
                sec, "points_per_wavelength", float, errors
            )
        if "nodes_per_panel" in sec:
            kwargs["nodes_per_panel"] = _get_typed(sec, "nodes_per_panel", int, errors)
        if "max_panels" in sec:
            kwargs["max_panels"] = _get_typed(sec, "max_panels", int, errors)
        if "rel_tol" in sec:
            kwargs["rel_tol"] = _get_typed(sec, "rel_tol", float, errors)
        if not errors:
            quad = replace(quad, **kwargs)

    mmse_form = base.mmse_form
    wdm = base.wdm
    if parser.has_section("wdm") or quad is not base.wdm.quadrature:
        sec = parser["wdm"] if parser.has_section("wdm") else {}
        wavelength = base.wdm.wavelength
        if "wavelength" in sec:
            wavelength = _get_typed(parser["wdm"], "wavelength", float, errors)
        n_modes: Optional[int] = base.wdm.n_modes
        if "n_modes" in sec:
            raw = parser["wdm"]["n_modes"].strip().lower()
            if raw == "max":
                n_modes = None
            else:
                n_modes = _get_typed(parser["wdm"], "n_modes", int, errors)
        source_power = base.wdm.source_power
        if "source_power" in sec:
            source_power = _get_typed(parser["wdm"], "source_power", float, errors)
        snr_emi_db = None
        if "snr_emi_db" in sec:
            snr_emi_db = _get_typed(parser["wdm"], "snr_emi_db", float, errors)
        sigma2_hdw = base.wdm.sigma2_hdw
        if "sigma2_hdw" in sec:
            sigma2_hdw = _get_typed(parser["wdm"], "sigma2_hdw", float, errors)
        if "mmse_form" in sec:
            mmse_form = parser["wdm"]["mmse_form"].strip().lower()
            if mmse_form not in ("hermitian", "table"):
                errors.append(f"[wdm] mmse_form = {mmse_form!r}")
        if errors:
            raise ValueError(f"invalid config file {path}: " + "; ".join(errors))
        if snr_emi_db is None:
            # Keep the base EMI level only if the power scale is unchanged,
            # otherwise re-derive it from the default 90 dB ratio.
            same_scale = (
                wavelength == base.wdm.wavelength
                and source_power == base.wdm.source_power
            )
            if same_scale:
                probe = _wdm_for(
                    wavelength, geom.L_s, n_modes, source_power, 90.0, sigma2_hdw, quad
                )
                wdm = replace(probe, sigma2_emi=base.wdm.sigma2_emi)
            else:
                wdm = _wdm_for(
                    wavelength, geom.L_s, n_modes, source_power, 90.0, sigma2_hdw, quad
                )
        else:
            wdm = _wdm_for(
                wavelength, geom.L_s, n_modes, source_power, snr_emi_db, sigma2_hdw, quad
            )

    sweep = base.sweep
    if parser.has_section("sweep"):
        sec = parser["sweep"]
        kwargs = {}
        if "parameter" in sec:
            kwargs["parameter"] = sec["parameter"].strip()
        for key in ("start", "stop"):
            if key in sec:
                kwargs[key] = _get_typed(sec, key, float, errors)
        for key in ("count", "seed", "draws_per_phi"):
            if key in sec:
                kwargs[key] = _get_typed(sec, key, int, errors)
        if "phi_set" in sec:
            kwargs["phi_set_deg"] = _get_typed(sec, "phi_set", _float_tuple, errors)
        if "theta_max" in sec:
            kwargs["theta_max_deg"] = _get_typed(sec, "theta_max", float, errors)
        if not errors:
            sweep = replace(sweep, **kwargs)

    field = base.field
    if parser.has_section("field"):
        sec = parser["field"]
        kwargs = {}
        if "mode_offsets" in sec:
            kwargs["mode_offsets"] = _get_typed(sec, "mode_offsets", _int_tuple, errors)
        if "grid_points" in sec:
            kwargs["grid_points"] = _get_typed(sec, "grid_points", int, errors)
        if not errors:
            field = replace(field, **kwargs)

    pattern = base.pattern
    if parser.has_section("pattern"):
        sec = parser["pattern"]
        kwargs = {}
        if "mode_offsets" in sec:
            kwargs["mode_offsets"] = _get_typed(sec, "mode_offsets", _int_tuple, errors)
        if "step_deg" in sec:
            kwargs["step_deg"] = _get_typed(sec, "step_deg", float, errors)
        if not errors:
            pattern = replace(pattern, **kwargs)

    output = base.output
    if parser.has_section("output"):
        sec = parser["output"]
        kwargs = {}
        if "csv" in sec:
            kwargs["csv_path"] = sec["csv"].strip()
        if "svg" in sec:
            kwargs["svg_path"] = sec["svg"].strip()
        if "cache_dir" in sec:
            kwargs["cache_dir"] = sec["cache_dir"].strip()
        if "workers" in sec:
            kwargs["workers"] = _get_typed(sec, "workers", int, errors)
        if not errors:
            output = replace(output, **kwargs)

    if errors:
        raise ValueError(f"invalid config file {path}: " + "; ".join(errors))
    try:
        return RunConfig(
            geometry=geom,
            wdm=wdm,
            sweep=sweep,
            field=field,
            pattern=pattern,
            output=output,
            mmse_form=mmse_form,
        )
    except ValueError as exc:
        raise ValueError(f"invalid config file {path}: {exc}") from None
