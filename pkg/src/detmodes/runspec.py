"""
Run configuration: a single structured-text (YAML) file with a documented
flat key set, validated against a registry of types, bounds, and defaults.

Keys may be written nested (forcing: {amplitude: 0.1}) or flat with dots
(forcing.amplitude: 0.1); both parse to the same spec.  Parsing fills every
default, so a serialized spec records the complete configuration and
round-trips losslessly.  Command-line overrides (--set key=value) apply on
top of the file before validation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .diagnostics import WavenumberParams

EXPERIMENTS = ("simulate", "diagnose", "sync", "critical-q", "scaling", "calibrate-cb")
SCHEMES = ("etdrk4", "cnab2")
COUPLINGS = ("replace", "nudge", "none")
IC_KINDS = ("noise", "taylor-green", "zero")


class SpecError(ValueError):
    """Malformed or out-of-bounds run specification."""


def _is_power_of_two(v: int) -> bool:
    return v >= 8 and (v & (v - 1)) == 0


# key -> (python type, default, validator or None, message fragment)
KEY_REGISTRY: dict[str, tuple] = {
    "experiment": (str, None, lambda v: v in EXPERIMENTS, f"must be one of {EXPERIMENTS}"),
    "n": (int, 128, _is_power_of_two, "must be a power of two with n >= 8"),
    "L": (float, 2.0 * np.pi, lambda v: v > 0, "must be positive"),
    "nu": (float, 0.01, lambda v: v > 0, "must be positive"),
    "dt": (float, 1e-3, lambda v: v > 0, "must be positive"),
    "scheme": (str, "etdrk4", lambda v: v in SCHEMES, f"must be one of {SCHEMES}"),
    "t_end": (float, 10.0, lambda v: v > 0, "must be positive"),
    "seed": (int, 0, None, ""),
    "spinup": (float, 0.0, lambda v: v >= 0, "must be nonnegative"),
    "forcing.amplitude": (float, 0.0, lambda v: v >= 0, "must be nonnegative"),
    "forcing.shell": (int, 2, lambda v: 0 <= v <= 12, "must lie in [0, 12]"),
    "forcing.grashof": (float, None, lambda v: v is None or v >= 0, "must be nonnegative"),
    "output.cadence": (float, 0.1, lambda v: v > 0, "must be positive"),
    "ic.kind": (str, "noise", lambda v: v in IC_KINDS, f"must be one of {IC_KINDS}"),
    "ic.amplitude": (float, 1.0, lambda v: v >= 0, "must be nonnegative"),
    "ic.k_low": (int, 1, lambda v: v >= 0, "must be nonnegative"),
    "ic.k_high": (int, 8, lambda v: v >= 1, "must be at least 1"),
    "sigma": (float, 0.5, lambda v: 0 < v < 2, "must lie in (0,2)"),
    "delta": (float, 0.5, lambda v: 0 < v < 1, "must lie in (0,1)"),
    "c_cal": (float, 0.01, lambda v: v > 0, "must be positive"),
    "c0": (float, None, lambda v: v is None or v > 0, "must be positive"),
    "window": (float, None, lambda v: v is None or v > 0, "must be positive"),
    "transient_fraction": (float, 0.5, lambda v: 0 <= v < 1, "must lie in [0,1)"),
    "sync.q": (int, None, lambda v: v is None or v >= -1, "must be >= -1"),
    "sync.coupling": (str, "replace", lambda v: v in COUPLINGS, f"must be one of {COUPLINGS}"),
    "sync.mu": (float, 1.0, lambda v: v > 0, "must be positive"),
    "sync.slave_seed": (int, None, None, ""),
    "criticalq.q_values": (list, None, None, ""),
    "scaling.grashofs": (list, None, None, ""),
    "scaling.amplitudes": (list, None, None, ""),
    "calibrate.samples": (int, 100, lambda v: v >= 1, "must be at least 1"),
}


@dataclass(frozen=True)
class RunSpec:
    """Validated experiment configuration (all defaults resolved)."""

    values: tuple  # sorted (key, canonical value) pairs

    def __getitem__(self, key: str) -> Any:
        d = dict(self.values)
        if key not in d:
            raise KeyError(key)
        return d[key]

    def get(self, key: str, default: Any = None) -> Any:
        return dict(self.values).get(key, default)

    @property
    def experiment(self) -> str:
        return self["experiment"]

    def as_dict(self) -> dict:
        return {k: v for k, v in self.values}

    def wavenumber_params(self) -> WavenumberParams:
        return WavenumberParams(
            sigma=self["sigma"], delta=self["delta"],
            c_cal=self["c_cal"], c0=self["c0"],
        )

    def serialize(self) -> str:
        return yaml.safe_dump(self.as_dict(), sort_keys=True, default_flow_style=False)

    def sha256(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()


def _flatten(tree: dict, prefix: str = "") -> dict:
    flat: dict[str, Any] = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _canonical(key: str, value: Any) -> Any:
    if value is None:
        return None
    typ = KEY_REGISTRY[key][0]
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SpecError(f"{key} must be a number, got {value!r}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SpecError(f"{key} must be an integer, got {value!r}")
        return int(value)
    if typ is list:
        if not isinstance(value, (list, tuple)):
            raise SpecError(f"{key} must be a list, got {value!r}")
        return [float(x) if isinstance(x, float) else int(x) if isinstance(x, int) else x
                for x in value]
    if typ is str:
        if not isinstance(value, str):
            raise SpecError(f"{key} must be a string, got {value!r}")
        return value
    return value


def build_spec(data: dict) -> RunSpec:
    """Validate a flat-or-nested mapping into a RunSpec with defaults filled."""
    flat = _flatten(data)
    unknown = sorted(set(flat) - set(KEY_REGISTRY))
    if unknown:
        raise SpecError(f"unknown keys: {', '.join(unknown)}")
    resolved: dict[str, Any] = {}
    for key, (typ, default, validator, message) in KEY_REGISTRY.items():
        value = _canonical(key, flat.get(key, default))
        if validator is not None and value is not None and not validator(value):
            raise SpecError(f"{key} {message}, got {value!r}")
        resolved[key] = value
    if resolved["experiment"] is None:
        raise SpecError("experiment must be set")

    # cross-field checks
    if resolved["c0"] is not None:
        bound = resolved["c_cal"] * (1.0 - 2.0 ** (-resolved["sigma"])) ** 2
        if resolved["c0"] > bound * (1.0 + 1e-12):
            raise SpecError(
                f"c0 must satisfy c0 <= c_cal*(1-2^-sigma)^2 = {bound:.6e}, "
                f"got {resolved['c0']!r}"
            )
    if resolved["forcing.grashof"] is not None and resolved["forcing.amplitude"] != 0.0:
        raise SpecError("set forcing.amplitude or forcing.grashof, not both")
    exp = resolved["experiment"]
    if exp == "sync" and resolved["sync.q"] is None:
        raise SpecError("sync.q is required for the sync experiment")
    if exp == "critical-q" and not resolved["criticalq.q_values"]:
        raise SpecError("criticalq.q_values is required for the critical-q experiment")
    if exp == "scaling" and not (resolved["scaling.amplitudes"] or resolved["scaling.grashofs"]):
        raise SpecError("scaling.amplitudes or scaling.grashofs is required for scaling")
    if resolved["ic.k_high"] < resolved["ic.k_low"]:
        raise SpecError("ic.k_high must be >= ic.k_low")

    return RunSpec(values=tuple(sorted(resolved.items(), key=lambda kv: kv[0])))


def parse_spec(path: str | Path, overrides: dict | None = None) -> RunSpec:
    """Load, override, and validate a spec file."""
    path = Path(path)
    if not path.exists():
        raise SpecError(f"spec file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise SpecError(f"malformed spec file {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SpecError(f"spec file {path} must contain a mapping")
    flat = _flatten(data)
    if overrides:
        flat.update(overrides)
    return build_spec(flat)


def parse_override(assignment: str) -> tuple[str, Any]:
    """Parse one --set key=value item; the value is YAML-decoded."""
    if "=" not in assignment:
        raise SpecError(f"override must look like key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise SpecError(f"cannot parse override value {raw!r}: {exc}") from exc
    return key.strip(), value


# ---------------------------------------------------------------------------
# manifests


def write_manifest(
    out_dir: str | Path,
    spec: RunSpec,
    status: str,
    started: str,
    finished: str,
    error: str | None = None,
) -> dict:
    """Hash every output file and write manifest.json last."""
    from .fieldio import sha256_file

    out_dir = Path(out_dir)
    files = {}
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            files[str(p.relative_to(out_dir))] = sha256_file(p)
    manifest = {
        "spec_sha256": spec.sha256(),
        "code_version": __version__,
        "started_utc": started,
        "finished_utc": finished,
        "status": status,
        "files": files,
    }
    if error is not None:
        manifest["error"] = error
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest
