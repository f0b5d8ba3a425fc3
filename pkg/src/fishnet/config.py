"""Experiment configuration: TOML parsing, validation, normalization.

Configs are strict: every key must be known to its table and every table
known to its command, so typos fail loudly with the offending name instead
of silently running a default.  ``ExperimentConfig.normalized()`` returns a
plain dict with all defaults resolved; parsing that dict again yields the
identical normalized form, which is what run manifests store.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Optional

if sys.version_info >= (3, 11):  # pragma: no cover
    import tomllib as _toml
else:
    import tomli as _toml

from .dist import from_config as dist_from_config
from .mesh import FishnetGeometry

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


class ConfigError(ValueError):
    """Invalid or unknown configuration content (exit code 2 territory)."""


_GEOMETRY_KEYS = {"rows", "cols", "link_length", "link_area", "modulus"}
_SAMPLING_KEYS = {"count", "seed", "threads", "bins", "record_curves"}
_MODELS_KEYS = {
    "calibrate", "eta_a", "nu1", "eta_b", "nu2", "eta2",
    "sigma_min", "sigma_max", "points",
}
_SWEEP_KEYS = {"n_total", "rows"}
_ETA_KEYS = {"damage"}
_OUTPUT_KEYS = {"directory", "svg"}

# required/optional tables per subcommand
_COMMAND_TABLES = {
    "simulate": ({"geometry", "distribution", "sampling"}, {"models", "outputs"}),
    "models": ({"geometry", "distribution"}, {"models", "outputs"}),
    "eta": ({"geometry", "distribution", "eta"}, {"outputs"}),
    "shape-sweep": ({"distribution", "sweep", "sampling"}, {"outputs"}),
    "sample-dist": ({"distribution", "sampling"}, {"outputs"}),
}


def _check_keys(table, allowed, where):
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in [{where}]")


def _require(table, key, where):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{where}]")
    return table[key]


def _geometry(table):
    _check_keys(table, _GEOMETRY_KEYS, "geometry")
    rows = int(_require(table, "rows", "geometry"))
    cols = int(_require(table, "cols", "geometry"))
    try:
        return FishnetGeometry(
            rows,
            cols,
            link_length=float(table.get("link_length", 1.0)),
            link_area=float(table.get("link_area", 1.0)),
            modulus=float(table.get("modulus", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"[geometry]: {exc}") from None


def _sampling(table, command):
    _check_keys(table, _SAMPLING_KEYS, "sampling")
    out = {
        "count": int(_require(table, "count", "sampling")),
        "seed": int(_require(table, "seed", "sampling")),
        "threads": int(table.get("threads", 1)),
        "bins": int(table.get("bins", 40)),
        "record_curves": bool(table.get("record_curves", False)),
    }
    if out["count"] < 1:
        raise ConfigError("sampling.count must be >= 1")
    if out["threads"] < 1:
        raise ConfigError("sampling.threads must be >= 1")
    if out["bins"] < 2:
        raise ConfigError("sampling.bins must be >= 2")
    return out


def _as_list(value, cast, what):
    items = value if isinstance(value, list) else [value]
    if not items:
        raise ConfigError(f"{what} must not be empty")
    try:
        return [cast(v) for v in items]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value in {what}: {exc}") from None


def _models(table):
    _check_keys(table, _MODELS_KEYS, "models")
    out = {
        # an explicitly empty list means the same as an absent key, so the
        # normalized form (which always carries both keys) re-parses cleanly
        "calibrate": bool(table.get("calibrate", False)),
        "eta_a": _as_list(table["eta_a"], float, "models.eta_a") if table.get("eta_a") else [],
        "nu1": _as_list(table["nu1"], int, "models.nu1") if table.get("nu1") else [],
        "sigma_min": float(table["sigma_min"]) if "sigma_min" in table else None,
        "sigma_max": float(table["sigma_max"]) if "sigma_max" in table else None,
        "points": int(table.get("points", 200)),
    }
    for key in ("eta_b", "nu2", "eta2"):
        out[key] = float(table[key]) if key in table else None
    if out["eta_a"] and not out["nu1"]:
        raise ConfigError("models.nu1 is required alongside models.eta_a")
    if out["nu1"] and not out["eta_a"]:
        raise ConfigError("models.eta_a is required alongside models.nu1")
    if out["points"] < 2:
        raise ConfigError("models.points must be >= 2")
    return out


def _sweep(table):
    _check_keys(table, _SWEEP_KEYS, "sweep")
    n_total = int(_require(table, "n_total", "sweep"))
    rows = _as_list(_require(table, "rows", "sweep"), int, "sweep.rows")
    if n_total < 1:
        raise ConfigError("sweep.n_total must be >= 1")
    for m in rows:
        if m < 1 or n_total % m != 0:
            raise ConfigError(f"sweep.rows value {m} does not divide n_total {n_total}")
    return {"n_total": n_total, "rows": rows}


def _eta(table):
    _check_keys(table, _ETA_KEYS, "eta")
    damage = table.get("damage", "center")
    if isinstance(damage, str):
        if damage not in ("center", "none") and not damage.startswith("slit:"):
            raise ConfigError(
                "eta.damage must be 'center', 'none', 'slit:<k>' or a list of link ids"
            )
        if damage.startswith("slit:"):
            try:
                k = int(damage.split(":", 1)[1])
            except ValueError:
                raise ConfigError("eta.damage slit length must be an integer") from None
            if k < 1:
                raise ConfigError("eta.damage slit length must be >= 1")
    elif isinstance(damage, list):
        damage = _as_list(damage, int, "eta.damage")
    else:
        raise ConfigError("eta.damage must be a string or a list of link ids")
    return {"damage": damage}


def _outputs(table):
    _check_keys(table, _OUTPUT_KEYS, "outputs")
    return {
        "directory": str(table.get("directory", ".")),
        "svg": bool(table.get("svg", False)),
    }


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description for one CLI command."""

    command: str
    geometry: Optional[FishnetGeometry]
    dist: Optional[object]
    dist_table: Optional[dict]
    sampling: Optional[dict]
    models: Optional[dict]
    sweep: Optional[dict]
    eta: Optional[dict]
    outputs: dict

    def normalized(self):
        """Plain-dict form with defaults resolved; stable under re-parsing."""
        out = {"command": self.command, "outputs": dict(self.outputs)}
        if self.geometry is not None:
            g = self.geometry
            out["geometry"] = {
                "rows": g.rows, "cols": g.cols, "link_length": g.link_length,
                "link_area": g.link_area, "modulus": g.modulus,
            }
        if self.dist_table is not None:
            out["distribution"] = dict(self.dist_table)
        for name in ("sampling", "models", "sweep", "eta"):
            value = getattr(self, name)
            if value is not None:
                out[name] = dict(value)
        return out


def load_config(path, command):
    """Parse and validate a TOML config file for ``command``.

    Raises
    ------
    ConfigError
        On syntax errors, unknown tables/keys, missing keys, or bad values.
    """
    if command not in _COMMAND_TABLES:
        raise ConfigError(f"unknown command {command!r}")
    try:
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    required, optional = _COMMAND_TABLES[command]
    _check_keys(raw, required | optional, "config")
    for table in sorted(required):
        if table not in raw:
            raise ConfigError(f"missing table [{table}] (required by {command})")
    for name in raw:
        if not isinstance(raw[name], dict):
            raise ConfigError(f"[{name}] must be a table")

    dist_table = raw.get("distribution")
    dist = None
    if dist_table is not None:
        try:
            dist = dist_from_config(dist_table)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"[distribution]: {exc}") from None

    return ExperimentConfig(
        command=command,
        geometry=_geometry(raw["geometry"]) if "geometry" in raw else None,
        dist=dist,
        dist_table=dict(dist_table) if dist_table is not None else None,
        sampling=_sampling(raw["sampling"], command) if "sampling" in raw else None,
        models=_models(raw.get("models", {})) if command in ("simulate", "models") else None,
        sweep=_sweep(raw["sweep"]) if "sweep" in raw else None,
        eta=_eta(raw["eta"]) if "eta" in raw else None,
        outputs=_outputs(raw.get("outputs", {})),
    )
