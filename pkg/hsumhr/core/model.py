"""Core data models shared by the fitting modules, the pipeline, and the CLI."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from hsumhr.core.errors import EvaluationError, GridError, SignalError, WindowError

_AXIS_MODE_RE = re.compile(r"^axis:(\d+)$")


def _frozen_array(values: object) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SampledSignal:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self) -> None:
        samples = _frozen_array(self.samples)
        if samples.ndim != 1:
            raise SignalError(f"Signal samples must be one-dimensional, got shape {samples.shape}")
        if not math.isfinite(self.sample_rate_hz) or self.sample_rate_hz <= 0:
            raise SignalError(f"Sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            first = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise SignalError(f"Signal contains a non-finite sample at index {first}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class MultiAxisSignal:
    axes: tuple[SampledSignal, SampledSignal, SampledSignal]

    def __post_init__(self) -> None:
        if len(self.axes) != 3:
            raise SignalError(f"Acceleration needs exactly 3 axes, got {len(self.axes)}")
        lengths = {len(axis) for axis in self.axes}
        rates = {axis.sample_rate_hz for axis in self.axes}
        if len(lengths) != 1 or len(rates) != 1:
            raise SignalError("All acceleration axes must share length and sample rate")
        object.__setattr__(self, "axes", tuple(self.axes))

    def __len__(self) -> int:
        return len(self.axes[0])

    @property
    def sample_rate_hz(self) -> float:
        return self.axes[0].sample_rate_hz


@dataclass(frozen=True, eq=False)
class Recording:
    """One synchronized wrist recording: two PPG channels and three acceleration axes."""

    ppg: tuple[SampledSignal, SampledSignal]
    acc: MultiAxisSignal

    def __post_init__(self) -> None:
        if len(self.ppg) != 2:
            raise SignalError(f"Recording needs 2 PPG channels, got {len(self.ppg)}")
        for channel in self.ppg:
            if len(channel) != len(self.acc) or channel.sample_rate_hz != self.acc.sample_rate_hz:
                raise SignalError("PPG channels and acceleration must share length and sample rate")

    @property
    def sample_rate_hz(self) -> float:
        return self.acc.sample_rate_hz

    def ppg_channel(self, channel: int) -> SampledSignal:
        if channel not in (1, 2):
            raise SignalError(f"PPG channel must be 1 or 2, got {channel}")
        return self.ppg[channel - 1]


@dataclass(frozen=True)
class WindowPlan:
    window_len_s: float = 8.0
    hop_s: float = 2.0

    def __post_init__(self) -> None:
        if not (self.window_len_s > 0 and self.hop_s > 0):
            raise WindowError("Window length and hop must be positive")
        if self.hop_s > self.window_len_s:
            raise WindowError(
                f"Hop ({self.hop_s} s) must not exceed window length ({self.window_len_s} s)"
            )

    def window_len_samples(self, sample_rate_hz: float) -> int:
        return int(round(self.window_len_s * sample_rate_hz))

    def hop_samples(self, sample_rate_hz: float) -> int:
        return max(1, int(round(self.hop_s * sample_rate_hz)))


@dataclass(frozen=True, eq=False)
class WindowView:
    index: int
    start: int
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", _frozen_array(self.samples))

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def start_time_s(self) -> float:
        return self.start / self.sample_rate_hz

    @property
    def energy(self) -> float:
        return float(np.dot(self.samples, self.samples))

    def with_samples(self, samples: np.ndarray) -> WindowView:
        return replace(self, samples=samples)


@dataclass(frozen=True)
class GridSpec:
    f_min_hz: float
    f_max_hz: float
    step_hz: float

    def __post_init__(self) -> None:
        if not (self.step_hz > 0):
            raise GridError(f"Grid step must be positive, got {self.step_hz}")
        if not (0 < self.f_min_hz < self.f_max_hz):
            raise GridError(
                f"empty grid: need 0 < min < max, got {self.f_min_hz}:{self.f_max_hz}:{self.step_hz}"
            )

    def frequencies(self) -> np.ndarray:
        count = int(math.floor((self.f_max_hz - self.f_min_hz) / self.step_hz + 1e-9)) + 1
        return np.round(self.f_min_hz + self.step_hz * np.arange(count), 10)

    def __len__(self) -> int:
        return int(self.frequencies().shape[0])

    @classmethod
    def parse(cls, text: str) -> GridSpec:
        """Parse a ``min:max:step`` grid string."""
        parts = text.split(":")
        if len(parts) != 3:
            raise GridError(f"Grid '{text}' must have the form min:max:step")
        try:
            f_min, f_max, step = (float(part) for part in parts)
        except ValueError as exc:
            raise GridError(f"Grid '{text}' contains a non-numeric bound") from exc
        return cls(f_min_hz=f_min, f_max_hz=f_max, step_hz=step)

    def __str__(self) -> str:
        return f"{self.f_min_hz:g}:{self.f_max_hz:g}:{self.step_hz:g}"


@dataclass(frozen=True)
class CombineMode:
    kind: Literal["best-axis", "l2", "axis"] = "best-axis"
    axis: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("best-axis", "l2", "axis"):
            raise SignalError(f"Unknown combine mode '{self.kind}'")
        if self.kind == "axis" and self.axis not in (0, 1, 2):
            raise SignalError(f"Fixed-axis combine mode needs axis 0, 1 or 2, got {self.axis}")

    @classmethod
    def parse(cls, text: str) -> CombineMode:
        normalized = text.strip().lower()
        if normalized in ("best-axis", "best"):
            return cls("best-axis")
        if normalized in ("l2", "l2-magnitude", "magnitude"):
            return cls("l2")
        match = _AXIS_MODE_RE.match(normalized)
        if match:
            return cls("axis", int(match.group(1)))
        raise SignalError(f"Invalid combine mode '{text}'. Use best-axis, l2 or axis:<0-2>")

    def __str__(self) -> str:
        return f"axis:{self.axis}" if self.kind == "axis" else self.kind


@dataclass(frozen=True)
class HarmonicBlock:
    """One harmonic series inside a design matrix."""

    f0_hz: float
    order: int
    include_dc: bool

    @property
    def columns(self) -> int:
        return 2 * self.order + (1 if self.include_dc else 0)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    matrix: np.ndarray
    sample_rate_hz: float
    blocks: tuple[HarmonicBlock, ...]

    @property
    def rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def columns(self) -> int:
        return int(self.matrix.shape[1])


@dataclass(frozen=True, eq=False)
class LstsqResult:
    amplitudes: np.ndarray
    se: float
    rank: int
    rank_deficient: bool


@dataclass(frozen=True, eq=False)
class HsumFit:
    f0_hz: float
    amplitudes: np.ndarray
    se: float
    order: int
    relative_se: float
    energy: float
    include_dc: bool = True
    rank_deficient: bool = False
    axis: int | None = None


@dataclass(frozen=True, eq=False)
class JointFit:
    f_oa_hz: float
    f_oh_hz: float
    motion_order: int
    heart_order: int
    amplitudes_motion: np.ndarray
    amplitudes_heart: np.ndarray
    se_p: float
    energy: float
    collision_flag: bool = False
    weak_heart: bool = False
    rank_deficient: bool = False

    @property
    def hr_bpm(self) -> float:
        return 60.0 * self.f_oh_hz

    @property
    def motion_dc(self) -> float:
        return float(self.amplitudes_motion[0])


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Per-window view of a joint fit: model output, its parts, and the residual."""

    fit: np.ndarray
    heartbeat: np.ndarray
    artifact: np.ndarray
    dc: float
    residual: np.ndarray


@dataclass(frozen=True)
class HrWindow:
    index: int
    start_time_s: float
    hr_bpm: float
    f_oa_hz: float
    se_p: float
    relative_error_energy: float
    collision_flag: bool = False
    weak_heart: bool = False


@dataclass(frozen=True)
class HrSeries:
    windows: tuple[HrWindow, ...]
    method: str = "hsum"
    median_filtered: bool = False
    warnings: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.windows)

    @property
    def hr_bpm(self) -> np.ndarray:
        return np.array([w.hr_bpm for w in self.windows], dtype=np.float64)

    def with_hr(self, values: np.ndarray, *, median_filtered: bool) -> HrSeries:
        if len(values) != len(self.windows):
            raise WindowError("Replacement HR values must match the window count")
        windows = tuple(replace(w, hr_bpm=float(v)) for w, v in zip(self.windows, values))
        return replace(self, windows=windows, median_filtered=median_filtered)


@dataclass(frozen=True)
class PipelineConfig:
    plan: WindowPlan = field(default_factory=WindowPlan)
    acc_grid: GridSpec = field(default_factory=lambda: GridSpec(1.0, 3.0, 0.01))
    hr_grid: GridSpec = field(default_factory=lambda: GridSpec(0.5, 3.0, 0.01))
    motion_order: int = 17
    heart_order: int = 7
    combine: CombineMode = field(default_factory=CombineMode)
    median: bool = False
    ppg_channel: int = 2
    mean_remove: bool = False
    collision_tol_hz: float = 0.02
    energy_floor: float = 1e-10
    cap_heart_order: bool = False
    workers: int = 1


@dataclass(frozen=True)
class StftConfig:
    fft_len: int = 2048
    plan: WindowPlan = field(default_factory=WindowPlan)
    band: tuple[float, float] | None = (0.5, 3.0)


@dataclass(frozen=True)
class Preset:
    id: str
    description: str
    config: PipelineConfig
    stft: StftConfig


@dataclass(frozen=True, eq=False)
class Spectrogram:
    magnitudes: np.ndarray
    freqs_hz: np.ndarray
    window_starts_s: np.ndarray


@dataclass(frozen=True)
class BlandAltman:
    mean_diff: float
    sd_diff: float
    loa_low: float
    loa_high: float
    fraction_within_loa: float


@dataclass(frozen=True, eq=False)
class EvalReport:
    n: int
    mae_bpm: float
    std_abs_err_bpm: float
    std_signed_err_bpm: float
    rmse_bpm: float
    bland_altman: BlandAltman
    pearson_r: float
    spearman_rho: float
    per_window_errors: np.ndarray


@dataclass(frozen=True)
class PooledReport:
    per_recording: tuple[EvalReport, ...]
    pooled: EvalReport


@dataclass(frozen=True)
class ReferenceTable:
    """Published per-subject errors, one row per method."""

    kind: str
    subjects: tuple[str, ...]
    rows: dict[str, tuple[float, ...]]

    @staticmethod
    def method_key(method: str) -> str:
        return re.sub(r"[\s_]+", "-", method.strip().lower())

    def lookup(self, method: str, subject: str) -> float:
        key = self.method_key(method)
        if key not in self.rows:
            raise EvaluationError(f"No published {self.kind} row for method '{method}'")
        if subject not in self.subjects:
            raise EvaluationError(f"Unknown subject '{subject}'; expected one of {', '.join(self.subjects)}")
        return self.rows[key][self.subjects.index(subject)]


@dataclass(frozen=True)
class ReferenceSummary:
    corpus: dict[str, tuple[float, float]]
    loa_low: float
    loa_high: float
    pearson_r: float
    spearman_rho: float
    single_recording: tuple[str, float] | None = None


@dataclass(frozen=True)
class ComparisonRow:
    subject: str
    computed: float
    published: dict[str, float]


@dataclass(frozen=True, eq=False)
class WindowComponents:
    """One window's inputs next to its joint-fit decomposition."""

    index: int
    start: int
    sample_rate_hz: float
    ppg: np.ndarray
    acc: np.ndarray
    acc_fit: np.ndarray
    motion: HsumFit
    joint: JointFit
    decomposition: Decomposition
