"""Preset and reference-table loading from packaged and user YAML files."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from importlib import resources
try:
    from importlib.resources.abc import Traversable
except ImportError:  # Python < 3.11
    from importlib.abc import Traversable
from pathlib import Path
from typing import Any

import yaml
from jsonschema import ValidationError, validators

from hsumhr.core.errors import HsumhrError, PresetLoadError, PresetValidationError
from hsumhr.core.model import CombineMode, GridSpec, PipelineConfig, Preset, StftConfig, WindowPlan
from hsumhr.core.signal import check_nyquist, check_window_capacity

LOGGER = logging.getLogger(__name__)

# the recordings this tool targets are sampled at 125 Hz; presets are checked against it
NOMINAL_RATE_HZ = 125.0


class UniqueKeyLoader(yaml.SafeLoader):
    """YAML loader that rejects duplicate mapping keys and keeps on/off as strings."""


UniqueKeyLoader.yaml_implicit_resolvers = {
    key: list(value) for key, value in yaml.SafeLoader.yaml_implicit_resolvers.items()
}

for first_char, mappings in list(UniqueKeyLoader.yaml_implicit_resolvers.items()):
    UniqueKeyLoader.yaml_implicit_resolvers[first_char] = [
        (tag, regexp)
        for tag, regexp in mappings
        if tag != "tag:yaml.org,2002:bool"
    ]


def _construct_mapping(loader: UniqueKeyLoader, node: yaml.Node, deep: bool = False) -> dict[str, Any]:
    mapping: dict[str, Any] = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in mapping:
            raise PresetValidationError(f"Duplicate key '{key}' in YAML document")
        mapping[key] = loader.construct_object(value_node, deep=deep)
    return mapping


UniqueKeyLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG,
    _construct_mapping,
)


@dataclass(frozen=True)
class LoadedPresets:
    presets: dict[str, Preset]
    warnings: tuple[str, ...]


def _load_schema_validator(name: str) -> Any:
    schema_text = resources.files("hsumhr.schemas").joinpath(name).read_text(encoding="utf-8")
    schema = json.loads(schema_text)
    validator_cls = validators.validator_for(schema)
    validator_cls.check_schema(schema)
    return validator_cls(schema)


def _validate(doc: dict[str, Any], schema_name: str, source: Path | Traversable) -> None:
    validator = _load_schema_validator(schema_name)
    try:
        validator.validate(doc)
    except ValidationError as exc:
        path = ".".join(str(p) for p in exc.path)
        where = f" ({path})" if path else ""
        raise PresetValidationError(f"Schema validation failed for {source}{where}: {exc.message}") from exc


def _preset_dirs() -> tuple[Path, Path]:
    xdg_config = Path(os.environ.get("XDG_CONFIG_HOME", Path.home() / ".config"))
    xdg_data = Path(os.environ.get("XDG_DATA_HOME", Path.home() / ".local/share"))
    return xdg_config / "hsumhr/presets", xdg_data / "hsumhr/presets"


def read_yaml(path: Path | Traversable) -> dict[str, Any]:
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PresetLoadError(f"Could not read {path}: {exc}") from exc

    try:
        loaded = yaml.load(content, Loader=UniqueKeyLoader)
    except yaml.YAMLError as exc:
        raise PresetValidationError(f"Invalid YAML in {path}: {exc}") from exc

    if not isinstance(loaded, dict):
        raise PresetValidationError(f"{path} must contain a mapping at root")
    return loaded


def _normalize_bool(value: Any, *, context: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered == "true":
            return True
        if lowered == "false":
            return False
    raise PresetValidationError(f"{context} must be boolean true/false")


def _grid(spec: dict[str, Any] | None, default: GridSpec, *, context: str) -> GridSpec:
    if spec is None:
        return default
    try:
        return GridSpec(float(spec["min_hz"]), float(spec["max_hz"]), float(spec["step_hz"]))
    except HsumhrError as exc:
        raise PresetValidationError(f"{context}: {exc}") from exc


def _build_preset(doc: dict[str, Any], source: Path | Traversable) -> Preset:
    _validate(doc, "preset.schema.json", source)
    preset_id = doc["id"]
    defaults = PipelineConfig()

    try:
        window = doc.get("window", {})
        plan = WindowPlan(
            window_len_s=float(window.get("length_s", defaults.plan.window_len_s)),
            hop_s=float(window.get("hop_s", defaults.plan.hop_s)),
        )
        orders = doc.get("orders", {})
        config = PipelineConfig(
            plan=plan,
            acc_grid=_grid(doc.get("acc_grid"), defaults.acc_grid, context=f"{preset_id}.acc_grid"),
            hr_grid=_grid(doc.get("hr_grid"), defaults.hr_grid, context=f"{preset_id}.hr_grid"),
            motion_order=int(orders.get("motion", defaults.motion_order)),
            heart_order=int(orders.get("heart", defaults.heart_order)),
            combine=CombineMode.parse(doc.get("combine", str(defaults.combine))),
            median=doc.get("median", "off") == "on",
            ppg_channel=int(doc.get("ppg_channel", defaults.ppg_channel)),
            mean_remove=_normalize_bool(doc.get("mean_remove", False), context=f"{preset_id}.mean_remove"),
            collision_tol_hz=float(doc.get("collision_tol_hz", defaults.collision_tol_hz)),
            energy_floor=float(doc.get("energy_floor", defaults.energy_floor)),
            cap_heart_order=_normalize_bool(
                doc.get("cap_heart_order", False), context=f"{preset_id}.cap_heart_order"
            ),
            workers=int(doc.get("workers", defaults.workers)),
        )
        stft_doc = doc.get("stft", {})
        band_doc = stft_doc.get("band", {"min_hz": 0.5, "max_hz": 3.0})
        band = None if band_doc == "full" else (float(band_doc["min_hz"]), float(band_doc["max_hz"]))
        stft = StftConfig(fft_len=int(stft_doc.get("fft_len", 2048)), plan=plan, band=band)
        validate_config(config, NOMINAL_RATE_HZ)
    except PresetValidationError:
        raise
    except HsumhrError as exc:
        raise PresetValidationError(f"Preset '{preset_id}' in {source} is invalid: {exc}") from exc

    if band is not None and band[0] >= band[1]:
        raise PresetValidationError(f"{preset_id}.stft.band: min_hz must be below max_hz")

    return Preset(id=preset_id, description=doc.get("description", ""), config=config, stft=stft)


def validate_config(config: PipelineConfig, sample_rate_hz: float) -> None:
    """Semantic checks that need the sample rate: Nyquist and window capacity."""
    check_nyquist(config.acc_grid.f_max_hz, config.motion_order, sample_rate_hz, context="accelerometer grid")
    if not config.cap_heart_order:
        check_nyquist(config.hr_grid.f_max_hz, config.heart_order, sample_rate_hz, context="heart grid")
    check_window_capacity(config.plan, sample_rate_hz, max(config.motion_order, config.heart_order))


def _iter_packaged_preset_paths() -> list[Traversable]:
    preset_root = resources.files("hsumhr.presets")
    return [item for item in preset_root.iterdir() if item.name.endswith((".yml", ".yaml"))]


def _iter_user_preset_paths() -> list[Path]:
    paths: list[Path] = []
    for directory in _preset_dirs():
        if not directory.exists() or not directory.is_dir():
            continue
        paths.extend(sorted(p for p in directory.iterdir() if p.suffix in {".yml", ".yaml"}))
    return paths


def load_presets() -> LoadedPresets:
    presets: dict[str, Preset] = {}
    warnings: list[str] = []

    for path in sorted(_iter_packaged_preset_paths(), key=lambda p: p.name):
        preset = _build_preset(read_yaml(path), path)
        presets[preset.id] = preset

    for path in _iter_user_preset_paths():
        preset = _build_preset(read_yaml(path), path)
        if preset.id in presets:
            warning = f"User preset '{preset.id}' overrides packaged preset"
            LOGGER.warning(warning)
            warnings.append(warning)
        presets[preset.id] = preset

    return LoadedPresets(presets=presets, warnings=tuple(warnings))


def load_reference_document() -> dict[str, Any]:
    path = resources.files("hsumhr.references").joinpath("published.yaml")
    doc = read_yaml(path)
    _validate(doc, "reference.schema.json", path)
    subjects = len(doc["subjects"])
    for kind, table in doc["tables"].items():
        for method, values in table.items():
            if len(values) != subjects:
                raise PresetValidationError(
                    f"Reference table {kind}.{method} has {len(values)} values for {subjects} subjects"
                )
    return doc
