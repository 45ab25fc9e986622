"""Typer CLI entrypoint."""

from __future__ import annotations

import io
import logging
import sys
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import typer

from hsumhr.core import recording_io
from hsumhr.core.errors import HsumhrError, OptionError
from hsumhr.core.metrics import bland_altman_pairs, compare_to_reference, reference_summary, reference_table
from hsumhr.core.model import CombineMode, GridSpec, HrSeries, PooledReport
from hsumhr.core.recording_io import read_hr_series, read_recording, read_truth
from hsumhr.core.service import HrService, parse_series_spec

app = typer.Typer(help="Heart rate from motion-corrupted wrist PPG by harmonic-sum fitting")


@app.callback()
def main(
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="-v for INFO, -vv for DEBUG logging"),
) -> None:
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG if verbose > 1 else logging.INFO,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )


@contextmanager
def _errors() -> Iterator[None]:
    try:
        yield
    except HsumhrError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(code=1) from None
    except typer.Exit:
        raise
    except Exception as exc:  # noqa: BLE001
        typer.echo(f"Internal error: {exc}", err=True)
        raise typer.Exit(code=2) from None


def _build_service() -> HrService:
    service = HrService()
    for warning in getattr(service, "load_warnings", ()):
        typer.echo(f"Warning: {warning}", err=True)
    return service


def _echo_warnings(series: HrSeries) -> None:
    for warning in series.warnings:
        typer.echo(f"Warning: {warning}", err=True)


def _switch(value: str | None, option: str) -> bool | None:
    if value is None:
        return None
    lowered = value.strip().lower()
    if lowered == "on":
        return True
    if lowered == "off":
        return False
    raise OptionError(f"{option} must be 'on' or 'off', got '{value}'")


def _grid(value: str | None) -> GridSpec | None:
    return None if value is None else GridSpec.parse(value)


def _combine(value: str | None) -> CombineMode | None:
    return None if value is None else CombineMode.parse(value)


def _band(value: str | None) -> tuple[tuple[float, float] | None, bool]:
    """Return ``(band, full_band)`` for ``--band min:max`` or ``--band full``."""
    if value is None:
        return None, False
    if value.strip().lower() == "full":
        return None, True
    parts = value.split(":")
    try:
        low, high = (float(part) for part in parts)
    except ValueError:
        raise OptionError(f"--band must be 'min:max' or 'full', got '{value}'") from None
    if not 0 <= low < high:
        raise OptionError(f"--band needs 0 <= min < max, got '{value}'")
    return (low, high), False


def _emit_csv(writer: Callable[[Any, Path | TextIO], None], payload: Any, out: Path | None) -> None:
    if out is not None:
        writer(payload, out)
        return
    buffer = io.StringIO()
    writer(payload, buffer)
    typer.echo(buffer.getvalue(), nl=False)


@app.command("estimate")
def estimate(
    input_path: Path = typer.Option(..., "--input", help="Recording CSV (t,ppg1,ppg2,acc_x,acc_y,acc_z)"),
    fs: float | None = typer.Option(None, "--fs", help="Sample rate when the file has no 't' column"),
    preset: str | None = typer.Option(None, "--preset", help="Preset ID"),
    channel: int | None = typer.Option(None, "--channel", help="PPG channel (1 or 2)"),
    window: float | None = typer.Option(None, "--window", help="Window length in seconds"),
    hop: float | None = typer.Option(None, "--hop", help="Hop in seconds"),
    ma: int | None = typer.Option(None, "--ma", help="Motion harmonic order"),
    mh: int | None = typer.Option(None, "--mh", help="Heart harmonic order"),
    acc_grid: str | None = typer.Option(None, "--acc-grid", help="Motion grid min:max:step in Hz"),
    hr_grid: str | None = typer.Option(None, "--hr-grid", help="Heart grid min:max:step in Hz"),
    combine: str | None = typer.Option(None, "--combine", help="best-axis, l2 or axis:<i>"),
    median: str | None = typer.Option(None, "--median", help="on or off"),
    mean_remove: str | None = typer.Option(None, "--mean-remove", help="on or off"),
    cap_heart_order: str | None = typer.Option(None, "--cap-heart-order", help="on or off"),
    workers: int | None = typer.Option(None, "--workers", help="Parallel window workers"),
    out: Path | None = typer.Option(None, "--out", help="HR CSV path; stdout when omitted"),
) -> None:
    """Estimate per-window heart rate from a recording."""
    with _errors():
        service = _build_service()
        cfg = service.config_for(
            preset,
            window_s=window,
            hop_s=hop,
            motion_order=ma,
            heart_order=mh,
            acc_grid=_grid(acc_grid),
            hr_grid=_grid(hr_grid),
            combine=_combine(combine),
            median=_switch(median, "--median"),
            ppg_channel=channel,
            mean_remove=_switch(mean_remove, "--mean-remove"),
            cap_heart_order=_switch(cap_heart_order, "--cap-heart-order"),
            workers=workers,
        )
        series = service.estimate_file(input_path, cfg, fs=fs)
        _echo_warnings(series)
        _emit_csv(recording_io.write_hr_series, series, out)
        summary = f"Estimated {len(series)} windows (mean HR {float(np.mean(series.hr_bpm)):.2f} BPM)"
        typer.echo(summary, err=out is None)


@app.command("evaluate")
def evaluate(
    estimates: list[Path] = typer.Option(..., "--estimates", help="HR CSV; repeat for several recordings"),
    truth: list[Path] = typer.Option(..., "--truth", help="Truth CSV (window_index,bpm); one per --estimates"),
    subject: list[str] | None = typer.Option(None, "--subject", help="Subject label (S1..S12) per recording"),
    pooled: bool = typer.Option(False, "--pooled", help="Pool all recordings into one report"),
    report: Path | None = typer.Option(None, "--report", help="Write report to .json or .txt"),
    bland_altman: Path | None = typer.Option(None, "--bland-altman", help="Write mean,diff pairs CSV"),
) -> None:
    """Compare HR estimates with ground truth."""
    with _errors():
        service = _build_service()
        labels = list(subject or [])
        if labels and len(labels) != len(estimates):
            raise OptionError(f"Got {len(labels)} --subject labels for {len(estimates)} recordings")
        result = service.evaluate_files(estimates, truth, pooled=pooled)

        per_recording = result.per_recording if isinstance(result, PooledReport) else (result,)
        comparison = compare_to_reference(dict(zip(labels, per_recording))) if labels else ()
        published = reference_summary()

        if bland_altman is not None:
            pairs: list[tuple[float, float]] = []
            for est_path, truth_path in zip(estimates, truth):
                pairs.extend(bland_altman_pairs(read_hr_series(est_path), read_truth(truth_path)))
            recording_io.write_bland_altman(pairs, bland_altman)

        if report is not None:
            recording_io.write_report(report, result, labels=labels, comparison=comparison, published=published)
        typer.echo(
            recording_io.render_report_text(result, labels=labels, comparison=comparison, published=published),
            nl=False,
        )


@app.command("synth")
def synth(
    motion: str = typer.Option(..., "--motion", help="f0,a1,...,aM,b1,...,bM of the motion series"),
    heart: str = typer.Option(..., "--heart", help="f0,c1,...,cM,d1,...,dM of the heart series"),
    duration: float = typer.Option(60.0, "--duration", help="Duration in seconds"),
    fs: float = typer.Option(125.0, "--fs", help="Sample rate in Hz"),
    noise_rms: float = typer.Option(0.0, "--noise-rms", help="White noise RMS added to every column"),
    seed: int = typer.Option(0, "--seed", help="Noise generator seed"),
    artifact_gain: float = typer.Option(1.0, "--artifact-gain", help="Motion series gain in the PPG columns"),
    out: Path = typer.Option(..., "--out", help="Recording CSV path"),
) -> None:
    """Write a synthetic recording with known motion and heart series."""
    with _errors():
        service = _build_service()
        recording = service.synthesize(
            parse_series_spec(motion),
            parse_series_spec(heart),
            duration_s=duration,
            sample_rate_hz=fs,
            noise_rms=noise_rms,
            seed=seed,
            artifact_gain=artifact_gain,
        )
        recording_io.write_recording(recording, out)
        typer.echo(f"Wrote {len(recording.acc)} samples to {out}")


@app.command("baseline")
def baseline(
    input_path: Path = typer.Option(..., "--input", help="Recording CSV"),
    fs: float | None = typer.Option(None, "--fs", help="Sample rate when the file has no 't' column"),
    preset: str | None = typer.Option(None, "--preset", help="Preset ID"),
    signal: str = typer.Option("ppg", "--signal", help="ppg or acc"),
    channel: int | None = typer.Option(None, "--channel", help="PPG channel (1 or 2)"),
    combine: str | None = typer.Option(None, "--combine", help="Acceleration read-out: l2 or axis:<i>"),
    band: str | None = typer.Option(None, "--band", help="Peak search band min:max in Hz, or full"),
    fft_len: int | None = typer.Option(None, "--fft-len", help="FFT length"),
    window: float | None = typer.Option(None, "--window", help="Window length in seconds"),
    hop: float | None = typer.Option(None, "--hop", help="Hop in seconds"),
    median: str | None = typer.Option(None, "--median", help="on or off"),
    out: Path | None = typer.Option(None, "--out", help="HR CSV path; stdout when omitted"),
) -> None:
    """Short-time spectrum peak read-out, for comparison."""
    with _errors():
        service = _build_service()
        chosen_band, full_band = _band(band)
        cfg = service.stft_config_for(
            preset, window_s=window, hop_s=hop, fft_len=fft_len, band=chosen_band, full_band=full_band
        )
        ppg_channel = channel or service.preset(preset).config.ppg_channel
        recording = read_recording(input_path, fs)
        series = service.baseline(
            recording,
            cfg,
            signal=signal,
            channel=ppg_channel,
            combine=_combine(combine),
            median=bool(_switch(median, "--median")),
        )
        _echo_warnings(series)
        _emit_csv(recording_io.write_hr_series, series, out)
        if signal == "ppg":
            fraction = service.peak_coincidence(recording, cfg, channel=ppg_channel, combine=_combine(combine))
            typer.echo(f"PPG peak within one bin of the acceleration peak in {fraction:.1%} of windows", err=True)


@app.command("spectrogram")
def spectrogram(
    input_path: Path = typer.Option(..., "--input", help="Recording CSV"),
    fs: float | None = typer.Option(None, "--fs", help="Sample rate when the file has no 't' column"),
    preset: str | None = typer.Option(None, "--preset", help="Preset ID"),
    signal: str = typer.Option("ppg", "--signal", help="ppg or acc"),
    channel: int | None = typer.Option(None, "--channel", help="PPG channel (1 or 2)"),
    combine: str | None = typer.Option(None, "--combine", help="Acceleration read-out: l2 or axis:<i>"),
    fft_len: int | None = typer.Option(None, "--fft-len", help="FFT length"),
    window: float | None = typer.Option(None, "--window", help="Window length in seconds"),
    hop: float | None = typer.Option(None, "--hop", help="Hop in seconds"),
    out: Path | None = typer.Option(None, "--out", help="Long-format CSV path; stdout when omitted"),
) -> None:
    """Export a full-band magnitude spectrogram as window_index,bin_hz,magnitude rows."""
    with _errors():
        service = _build_service()
        cfg = service.stft_config_for(preset, window_s=window, hop_s=hop, fft_len=fft_len)
        spec = service.spectrogram(
            read_recording(input_path, fs),
            cfg,
            signal=signal,
            channel=channel or service.preset(preset).config.ppg_channel,
            combine=_combine(combine),
        )
        _emit_csv(recording_io.write_spectrogram, spec, out)


@app.command("components")
def components(
    input_path: Path = typer.Option(..., "--input", help="Recording CSV"),
    window_index: int = typer.Option(..., "--window-index", help="Window to decompose"),
    fs: float | None = typer.Option(None, "--fs", help="Sample rate when the file has no 't' column"),
    preset: str | None = typer.Option(None, "--preset", help="Preset ID"),
    channel: int | None = typer.Option(None, "--channel", help="PPG channel (1 or 2)"),
    combine: str | None = typer.Option(None, "--combine", help="best-axis, l2 or axis:<i>"),
    out: Path | None = typer.Option(None, "--out", help="Components CSV path; stdout when omitted"),
) -> None:
    """Export one window's PPG, joint fit, heartbeat, artifact and acceleration."""
    with _errors():
        service = _build_service()
        cfg = service.config_for(preset, ppg_channel=channel, combine=_combine(combine))
        view = service.components(read_recording(input_path, fs), cfg, window_index)

        def _write(v: Any, target: Path | TextIO) -> None:
            recording_io.write_components(v.decomposition, v.ppg, v.acc, v.acc_fit, v.start, v.sample_rate_hz, target)

        _emit_csv(_write, view, out)
        typer.echo(
            f"Window {view.index}: f_oa {view.joint.f_oa_hz:.2f} Hz, HR {view.joint.hr_bpm:.1f} BPM",
            err=out is None,
        )


@app.command("presets")
def presets(
    show: str | None = typer.Option(None, "--show", help="Print the effective settings of one preset"),
) -> None:
    """List packaged and user presets."""
    with _errors():
        service = _build_service()
        if show is None:
            for item in service.list_presets():
                typer.echo(f"{item.id}: {item.description}")
            return

        item = service.preset(show)
        cfg, stft_cfg = item.config, item.stft
        band = "full" if stft_cfg.band is None else f"{stft_cfg.band[0]:g}:{stft_cfg.band[1]:g}"
        typer.echo(f"{item.id}: {item.description}")
        typer.echo(f"  window: {cfg.plan.window_len_s:g} s, hop {cfg.plan.hop_s:g} s")
        typer.echo(f"  acc_grid: {cfg.acc_grid}")
        typer.echo(f"  hr_grid: {cfg.hr_grid}")
        typer.echo(f"  orders: motion {cfg.motion_order}, heart {cfg.heart_order}")
        typer.echo(f"  combine: {cfg.combine}")
        typer.echo(f"  median: {'on' if cfg.median else 'off'}")
        typer.echo(f"  ppg_channel: {cfg.ppg_channel}")
        typer.echo(f"  mean_remove: {str(cfg.mean_remove).lower()}")
        typer.echo(f"  collision_tol_hz: {cfg.collision_tol_hz:g}")
        typer.echo(f"  energy_floor: {cfg.energy_floor:g}")
        typer.echo(f"  cap_heart_order: {str(cfg.cap_heart_order).lower()}")
        typer.echo(f"  workers: {cfg.workers}")
        typer.echo(f"  stft: fft_len {stft_cfg.fft_len}, band {band}")


@app.command("reference")
def reference(
    kind: str = typer.Option("mae", "--kind", help="mae or std"),
) -> None:
    """Print the published per-subject comparison table."""
    with _errors():
        table = reference_table(kind)
        typer.echo("method  " + "  ".join(table.subjects))
        for method, values in table.rows.items():
            typer.echo(f"{method}  " + "  ".join(f"{v:.3f}" for v in values))
        summary = reference_summary()
        typer.echo("")
        for method, (mae, std) in summary.corpus.items():
            typer.echo(f"corpus {method}: mae {mae:.4f} std {std:.4f}")
        typer.echo(
            f"agreement: loa [{summary.loa_low:.4f}, {summary.loa_high:.4f}] "
            f"pearson_r {summary.pearson_r:.4f} spearman_rho {summary.spearman_rho:.4f}"
        )


def run() -> None:
    app()


if __name__ == "__main__":
    run()
