"""Line-oriented run configuration: dotted ``key = value`` pairs.

The format is deliberately trivial (diff-friendly, parseable anywhere):
one ``section.key = value`` per line, '#' comments, blank lines ignored.
Unknown keys are rejected in strict mode and warned about otherwise.
All user-facing frequencies are MHz/GHz and times ns; Rabi frequencies
and atomic widths are in units of Gamma, matching how the source is
characterized.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BiphotonError
from .kernels import QuadratureSpec
from .params import SystemParams
from .units import mhz_to_gamma
from .wavepacket import DetuningGrid


class ConfigError(BiphotonError):
    """Configuration problem with a machine-readable code."""

    def __init__(self, code, detail):
        super().__init__(f"{code} {detail}")
        self.code = code
        self.detail = detail


KNOWN_KEYS = {
    "system.alpha", "system.b", "system.omega_p", "system.omega_c",
    "system.gamma_dec", "system.delta_p_ghz", "system.delta_c_ghz",
    "system.gamma_doppler", "system.gamma_etalon",
    "grid.delta_max_mhz", "grid.n_points",
    "quadrature.method", "quadrature.trapezoid_points",
    "quadrature.panel_tolerance", "quadrature.support_halfwidth",
    "sweep.delta_c_ghz",
    "fit.series", "fit.init_b", "fit.init_omega_c", "fit.init_gamma_dec",
    "fit.init_scale", "fit.max_iterations", "fit.freeze",
    "analyze.histogram", "analyze.background_lo_ns", "analyze.background_hi_ns",
    "output.oversample",
}

# keys that must be present for the physics commands; everything else has
# an apparatus default
REQUIRED_SYSTEM_KEYS = ("system.b", "system.omega_c", "system.gamma_dec")


@dataclass
class RunConfig:
    """Parsed key/value store with typed accessors."""

    values: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @classmethod
    def load(cls, path, strict=False) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError("CONFIG_NOT_FOUND", str(path))
        values = {}
        warnings = []
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError("CONFIG_BAD_LINE", f"{path.name}:{lineno}")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in KNOWN_KEYS:
                if strict:
                    raise ConfigError("CONFIG_UNKNOWN_KEY", key)
                warnings.append(f"ignoring unknown config key {key!r}")
                continue
            values[key] = value.strip()
        return cls(values=values, warnings=warnings)

    def require(self, *keys):
        for key in keys:
            if key not in self.values:
                raise ConfigError("CONFIG_MISSING_KEY", key)

    def _get(self, key, cast, default):
        if key not in self.values:
            return default
        raw = self.values[key]
        try:
            return cast(raw)
        except ValueError:
            raise ConfigError("CONFIG_BAD_VALUE", f"{key} = {raw}") from None

    def get_float(self, key, default=None):
        return self._get(key, float, default)

    def get_int(self, key, default=None):
        return self._get(key, int, default)

    def get_str(self, key, default=None):
        return self._get(key, str, default)

    def get_float_list(self, key, default=None):
        def cast(raw):
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        return self._get(key, cast, default)

    def system_params(self, require=True) -> SystemParams:
        """SystemParams from the system.* keys (apparatus defaults apply)."""
        if require:
            self.require(*REQUIRED_SYSTEM_KEYS)
        kwargs = {}
        for key, name in (("system.alpha", "alpha"), ("system.b", "b"),
                          ("system.omega_p", "omega_p"),
                          ("system.omega_c", "omega_c"),
                          ("system.gamma_dec", "gamma_dec"),
                          ("system.gamma_doppler", "gamma_doppler"),
                          ("system.gamma_etalon", "gamma_etalon")):
            val = self.get_float(key)
            if val is not None:
                kwargs[name] = val
        lab = {}
        for key, name in (("system.delta_p_ghz", "delta_p_ghz"),
                          ("system.delta_c_ghz", "delta_c_ghz")):
            val = self.get_float(key)
            if val is not None:
                lab[name] = val
        try:
            return SystemParams.from_lab_units(**lab, **kwargs)
        except BiphotonError as exc:
            raise ConfigError("CONFIG_BAD_VALUE", str(exc)) from exc

    def quadrature(self) -> QuadratureSpec:
        kwargs = {}
        method = self.get_str("quadrature.method")
        if method is not None:
            kwargs["method"] = method
        pts = self.get_int("quadrature.trapezoid_points")
        if pts is not None:
            kwargs["trapezoid_points"] = pts
        tol = self.get_float("quadrature.panel_tolerance")
        if tol is not None:
            kwargs["panel_tolerance"] = tol
        half = self.get_float("quadrature.support_halfwidth")
        if half is not None:
            kwargs["support_halfwidth"] = half
        try:
            return QuadratureSpec(**kwargs)
        except BiphotonError as exc:
            raise ConfigError("CONFIG_BAD_VALUE", str(exc)) from exc

    def grid_hint(self) -> DetuningGrid | None:
        dmax_mhz = self.get_float("grid.delta_max_mhz")
        n = self.get_int("grid.n_points")
        if dmax_mhz is None and n is None:
            return None
        if dmax_mhz is None or n is None:
            raise ConfigError(
                "CONFIG_BAD_VALUE",
                "grid.delta_max_mhz and grid.n_points must be given together")
        dmax = mhz_to_gamma(dmax_mhz)
        try:
            return DetuningGrid(-dmax, dmax, n)
        except BiphotonError as exc:
            raise ConfigError("CONFIG_BAD_VALUE", str(exc)) from exc

    def oversample(self) -> int:
        return self.get_int("output.oversample", 2)

    def sweep_detunings(self) -> np.ndarray:
        self.require("sweep.delta_c_ghz")
        vals = self.get_float_list("sweep.delta_c_ghz")
        if len(vals) < 2:
            raise ConfigError("CONFIG_SWEEP_TOO_SHORT",
                              f"need >= 2 detunings, got {len(vals)}")
        return np.asarray(vals, dtype=float)
