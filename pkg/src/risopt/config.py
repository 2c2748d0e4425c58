"""Config parsing for the CLI: flat key=value text or a JSON object.

Both formats map onto the same key schema; unknown keys are rejected by
name so typos fail loudly instead of silently running defaults.  Overrides
from the command line reuse the same converters and are applied after the
file parse.
"""

import json
import os

from .channel import ScenarioConfig, near_square_geometry
from .errors import ConfigError
from .harness import OPTIMIZERS, SweepSpec
from .maxr import OptimizerCfg


def _parse_bool(text):
    if isinstance(text, bool):
        return text
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_floats(text, count=None):
    if isinstance(text, (list, tuple)):
        items = [float(v) for v in text]
    else:
        items = [float(p) for p in str(text).replace(",", " ").split()]
    if count is not None and len(items) != count:
        raise ConfigError(f"expected {count} numbers, got {len(items)}")
    return tuple(items)


def _parse_names(text):
    if isinstance(text, (list, tuple)):
        return tuple(str(v).strip() for v in text)
    return tuple(p.strip() for p in str(text).split(",") if p.strip())


SCENARIO_KEYS = {
    "num_ues": int,
    "bs_antennas": int,
    "ue_antennas": int,
    "ris_elements": int,
    "num_paths": int,
    "tx_power_dbm": float,
    "noise_dbm": float,
    "pathloss_exponent_los": float,
    "pathloss_exponent_nlos": float,
    "ref_gain_direct": float,
    "ref_gain_bs_ris": float,
    "ref_gain_ris_ue": float,
    "ref_distance": float,
    "ue_height": float,
    "seed": int,
    "bs_position": lambda v: _parse_floats(v, 3),
    "ris_position": lambda v: _parse_floats(v, 3),
    "ue_area": lambda v: _parse_floats(v, 4),
}

LOOP_KEYS = {
    "max_outer": int,
    "tol_bpcu": float,
}

RUN_KEYS = dict(SCENARIO_KEYS, optimizer=str, **LOOP_KEYS)

SWEEP_KEYS = dict(
    SCENARIO_KEYS,
    axis=str,
    values=_parse_floats,
    trials=int,
    optimizers=_parse_names,
    direct_channel=str,
    record_timing=_parse_bool,
    **LOOP_KEYS,
)


def parse_kv_text(text):
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_config(path):
    """Read a config file (flat text or JSON) into a raw key->value dict."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"JSON config must be an object: {path}")
        return {str(k): v for k, v in data.items()}
    return parse_kv_text(text)


def coerce(raw, schema):
    """Type-check a raw dict against a key schema; unknown keys rejected."""
    out = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[key] = schema[key](value)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    return out


def apply_overrides(raw, overrides):
    """Fold --override key=value pairs into the raw dict (last one wins)."""
    out = dict(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    return out


def scenario_from_dict(cfg):
    """Build a ScenarioConfig from coerced scenario keys (missing = default)."""
    kwargs = {}
    if "num_ues" in cfg:
        kwargs["num_ues"] = cfg["num_ues"]
    if "bs_antennas" in cfg:
        kwargs["bs_geometry"] = near_square_geometry(cfg["bs_antennas"])
    if "ue_antennas" in cfg:
        kwargs["ue_geometry"] = near_square_geometry(cfg["ue_antennas"])
    if "ris_elements" in cfg:
        kwargs["ris_geometry"] = near_square_geometry(cfg["ris_elements"])
    if "num_paths" in cfg:
        count = cfg["num_paths"]
        kwargs["paths_direct"] = count
        kwargs["paths_bs_ris"] = count
        kwargs["paths_ris_ue"] = count
    for key in (
        "tx_power_dbm",
        "noise_dbm",
        "pathloss_exponent_los",
        "pathloss_exponent_nlos",
        "ref_gain_direct",
        "ref_gain_bs_ris",
        "ref_gain_ris_ue",
        "ref_distance",
        "ue_height",
        "bs_position",
        "ris_position",
        "ue_area",
    ):
        if key in cfg:
            kwargs[key] = cfg[key]
    if "seed" in cfg:
        kwargs["rng_seed"] = cfg["seed"]
    return ScenarioConfig(**kwargs)


def optimizer_cfg_from_dict(cfg):
    kwargs = {}
    if "tol_bpcu" in cfg:
        kwargs["tol_bpcu"] = cfg["tol_bpcu"]
    if "max_outer" in cfg:
        kwargs["max_outer"] = cfg["max_outer"]
    return OptimizerCfg(**kwargs)


def sweep_from_dict(cfg):
    """Build a SweepSpec from coerced sweep keys."""
    for key in ("axis", "values"):
        if key not in cfg:
            raise ConfigError(f"sweep config needs the {key!r} key")
    optimizers = cfg.get("optimizers", ("maxr_wmmse",))
    for name in optimizers:
        if name not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {name!r} (choose from {OPTIMIZERS})")
    return SweepSpec(
        axis=cfg["axis"],
        values=cfg["values"],
        trials_per_point=cfg.get("trials", 100),
        base=scenario_from_dict(cfg),
        optimizers=optimizers,
        direct_channel=cfg.get("direct_channel", "present"),
        record_timing=cfg.get("record_timing", False),
        optimizer_cfg=optimizer_cfg_from_dict(cfg),
    )
