"""Declarative run configuration: TOML in, resolved numbers out.

Length-valued fields accept plain numbers (meters) or strings with an
explicit unit or rule:

* ``"0.4 m"``: meters;
* ``"20 lambda"``: multiples of the scenario wavelength;
* ``"fresnel"`` / ``"rayleigh"`` with an optional ``*k`` or ``/k`` suffix -
  the near-field boundary distances for the resolved aperture/wavelength
  (e.g. ``"rayleigh/4"``).

Everything is normalized to meters at parse time.  The fully resolved
configuration (all defaults filled in, every length in meters) is embedded in
each output file so a run is self-describing and can be replayed.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .geometry import Scenario, fresnel_distance, rayleigh_distance

_LENGTH_RE = re.compile(
    r"^\s*(?P<num>[-+0-9.eE]+)\s*(?P<unit>m|lambda|lam|wavelengths?)\s*$"
)
_RULE_RE = re.compile(
    r"^\s*(?P<rule>fresnel|rayleigh)\s*(?:(?P<op>[*/])\s*(?P<factor>[-+0-9.eE]+))?\s*$"
)


class ConfigError(ValueError):
    """Bad or missing configuration value; message carries the field context."""


def parse_length(
    value: Any,
    *,
    wavelength: float | None = None,
    aperture: float | None = None,
    ndim: int = 1,
    fresnel_rule: int | None = None,
    where: str = "value",
) -> float:
    """Normalize a config length to meters."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a number or unit string, got {value!r}")
    m = _LENGTH_RE.match(value)
    if m:
        num = float(m.group("num"))
        if m.group("unit") == "m":
            return num
        if wavelength is None:
            raise ConfigError(f"{where}: wavelength-relative value needs a wavelength")
        return num * wavelength
    m = _RULE_RE.match(value)
    if m:
        if wavelength is None or aperture is None:
            raise ConfigError(f"{where}: {value!r} needs wavelength and aperture")
        if m.group("rule") == "fresnel":
            base = fresnel_distance(aperture, wavelength, fresnel_rule or ndim)
        else:
            base = rayleigh_distance(aperture, wavelength, ndim)
        if m.group("op"):
            factor = float(m.group("factor"))
            base = base * factor if m.group("op") == "*" else base / factor
        return base
    raise ConfigError(f"{where}: cannot parse length {value!r}")


def scenario_from_table(table: Mapping[str, Any]) -> Scenario:
    """Build a validated Scenario from a ``[scenario]`` table."""
    try:
        wavelength = float(table["wavelength"])
    except KeyError:
        raise ConfigError("[scenario] wavelength is required") from None
    ndim = int(table.get("dimensions", 1))
    fresnel_rule = table.get("fresnel_rule")
    aperture = parse_length(
        table.get("aperture"), wavelength=wavelength, where="[scenario] aperture"
    )
    kw = dict(
        wavelength=wavelength,
        aperture=aperture,
        n_antennas=int(table.get("antennas", 0)),
        min_spacing=parse_length(
            table.get("min_spacing", "0.5 lambda"),
            wavelength=wavelength,
            where="[scenario] min_spacing",
        ),
        ndim=ndim,
        fresnel_rule=int(fresnel_rule) if fresnel_rule is not None else None,
        u_max=float(table.get("u_max", 0.95)),
        v_max=float(table["v_max"]) if "v_max" in table else (0.95 if ndim == 2 else None),
        snapshots=int(table.get("snapshots", 100)),
    )
    for bound, default in (("r_min", "fresnel"), ("r_max", "rayleigh/2")):
        kw[bound] = parse_length(
            table.get(bound, default),
            wavelength=wavelength,
            aperture=aperture,
            ndim=ndim,
            fresnel_rule=kw["fresnel_rule"],
            where=f"[scenario] {bound}",
        )
    if "snr_db" in table:
        # SNR shorthand: only T P N |beta|^2 / sigma^2 matters, so P = sigma^2 = 1.
        kw.update(tx_power=1.0, noise_power=1.0, gain_sq=10.0 ** (float(table["snr_db"]) / 10.0))
    else:
        kw.update(
            tx_power=float(table.get("tx_power", 1.0)),
            noise_power=float(table.get("noise_power", 1.0)),
            gain_sq=float(table.get("gain_sq", 100.0)),
        )
    try:
        return Scenario(**kw)
    except ValueError as e:
        raise ConfigError(f"[scenario] invalid: {e}") from e


def target_from_table(table: Mapping[str, Any], sc: Scenario) -> dict[str, float]:
    """Resolve the ``[target]`` table to plain floats (u, v, r as present)."""
    out: dict[str, float] = {}
    for p in ("u", "v"):
        if p in table:
            out[p] = float(table[p])
    if "r" in table:
        out["r"] = parse_length(
            table["r"],
            wavelength=sc.wavelength,
            aperture=sc.aperture,
            ndim=sc.ndim,
            fresnel_rule=sc.fresnel_rule,
            where="[target] r",
        )
    return out


@dataclass(frozen=True)
class RunConfig:
    """A parsed run: scenario, target point, case, seed, and per-verb options."""

    scenario: Scenario
    target: dict[str, float]
    case: str
    seed: int
    options: dict[str, dict[str, Any]]
    raw: dict[str, Any] = field(repr=False, default_factory=dict)

    def verb_options(self, verb: str) -> dict[str, Any]:
        return dict(self.options.get(verb, {}))

    def resolved_dict(self) -> dict[str, Any]:
        """Fully-resolved config (meters everywhere) suitable for re-running."""
        out: dict[str, Any] = {"scenario": self.scenario.to_dict()}
        if self.target:
            out["target"] = dict(self.target)
        out["run"] = {"case": self.case, "seed": self.seed}
        for verb, opts in self.options.items():
            if opts:
                out[verb] = dict(opts)
        return out


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = _toml.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except _toml.TOMLDecodeError as e:
        raise ConfigError(f"{path}: not valid TOML: {e}") from e
    return config_from_dict(data, where=str(path))


def config_from_dict(data: Mapping[str, Any], where: str = "<dict>") -> RunConfig:
    if "scenario" not in data:
        raise ConfigError(f"{where}: missing [scenario] table")
    sc = scenario_from_table(data["scenario"])
    target = target_from_table(data.get("target", {}), sc)
    run = data.get("run", {})
    case = str(run.get("case", "c11")).lower().replace(".", "").replace("case", "c")
    seed = int(run.get("seed", 0))
    options = {
        verb: dict(data[verb])
        for verb in ("crb", "optimize", "music", "correlation", "sweep")
        if verb in data
    }
    return RunConfig(
        scenario=sc, target=target, case=case, seed=seed, options=options, raw=dict(data)
    )


# -- emitting ------------------------------------------------------------------


def _toml_scalar(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(x) for x in v) + "]"
    raise TypeError(f"cannot emit {type(v).__name__} as TOML")


def dumps_toml(data: Mapping[str, Any]) -> str:
    """Emit a two-level dict as TOML (tables of scalars/lists); deterministic output."""
    lines: list[str] = []
    scalars = {k: v for k, v in data.items() if not isinstance(v, Mapping)}
    for k, v in scalars.items():
        lines.append(f"{k} = {_toml_scalar(v)}")
    for k, v in data.items():
        if isinstance(v, Mapping):
            if lines:
                lines.append("")
            lines.append(f"[{k}]")
            for kk, vv in v.items():
                lines.append(f"{kk} = {_toml_scalar(vv)}")
    return "\n".join(lines) + "\n"


def config_header_lines(resolved: Mapping[str, Any], version: str) -> list[str]:
    """Header block embedded into every output file."""
    lines = [f"nma version {version}", "resolved config:"]
    lines += dumps_toml(resolved).rstrip("\n").split("\n")
    return lines
