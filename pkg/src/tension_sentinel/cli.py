"""Command-line front end.

Subcommands: synth, detrend, train, impute, diagnose, plot. A single JSON
config document (--config) provides defaults; command flags override it.
Exit codes: 0 success (or no damage), 1 any error, 2 damage detected
(diagnose only).
"""

import dataclasses
import json
import sys

import click
import numpy as np

from . import pipeline, preprocess, synthgen
from .autoencoder import build_model, load_checkpoint, save_checkpoint
from .errors import CheckpointError, ConfigError
from .pipeline import DamageReport, TrainConfig, TrainLog
from .series import export_csv, import_csv

CONFIG_SECTIONS = ("bridge", "traffic", "scenario", "preprocess", "train")


def _build_dataclass(cls, data, what):
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    return cls(**data)


def load_run_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(doc) - set(CONFIG_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return doc


def _scenario_from_config(section):
    section = dict(section)
    damage = [
        _build_dataclass(synthgen.DamageEvent, d, "damage event")
        for d in section.pop("damage_events", [])
    ]
    missing = [
        _build_dataclass(synthgen.MissingEvent, d, "missing event")
        for d in section.pop("missing_events", [])
    ]
    script = _build_dataclass(synthgen.ScenarioScript, section, "scenario")
    script.damage_events = damage
    script.missing_events = missing
    return script


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config document with sections " + ", ".join(CONFIG_SECTIONS))
@click.option("--seed", type=int, default=None, help="Override every seeded step.")
@click.option("--verbose", is_flag=True, default=False)
@click.pass_context
def cli(ctx, config_path, seed, verbose):
    ctx.ensure_object(dict)
    ctx.obj["config"] = load_run_config(config_path)
    ctx.obj["seed"] = seed
    ctx.obj["verbose"] = verbose


def _log(ctx, msg):
    if ctx.obj.get("verbose"):
        click.echo(msg, err=True)


@cli.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--duration", type=float, default=None, help="Corpus length in seconds.")
@click.option("--rate", type=float, default=None, help="Sample rate in Hz.")
@click.option("--seed", type=int, default=None)
@click.pass_context
def synth(ctx, out, duration, rate, seed):
    """Generate a synthetic cable-tension corpus CSV."""
    cfg = ctx.obj["config"]
    bridge = _build_dataclass(synthgen.BridgeModel, cfg.get("bridge", {}), "bridge")
    traffic = _build_dataclass(synthgen.TrafficScenario, cfg.get("traffic", {}), "traffic")
    script = _scenario_from_config(cfg.get("scenario", {}))
    if duration is not None:
        traffic.duration = duration
    if rate is not None:
        traffic.sample_rate = rate
    seed = _pick_seed(ctx, seed)
    series = synthgen.generate_corpus(bridge, traffic, script, seed)
    export_csv(series, out)
    _log(ctx, f"wrote {series.n_samples} samples x {series.channel_count} channels to {out}")


def _pick_seed(ctx, seed):
    if seed is not None:
        return seed
    if ctx.obj.get("seed") is not None:
        return ctx.obj["seed"]
    return 0


@cli.command()
@click.argument("data", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--trend-out", type=click.Path(), default=None)
@click.option("--segment-seconds", type=float, default=30.0, show_default=True)
@click.pass_context
def detrend(ctx, data, out, trend_out, segment_seconds):
    """Remove the segment-median temperature trend from a corpus CSV."""
    series = import_csv(data)
    trend = preprocess.estimate_trend(series, segment_seconds)
    detrended = preprocess.detrend(series, trend)
    export_csv(detrended, out)
    if trend_out is not None:
        from .series import MultiChannelSeries

        tvals = trend.evaluate()
        tser = MultiChannelSeries(
            list(series.names), series.sample_rate, tvals, ~np.isnan(tvals)
        )
        export_csv(tser, trend_out)
    _log(ctx, f"detrended {data} with {segment_seconds}s segments")


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True),
              help="Corpus CSV (raw; it is detrended and normalized internally).")
@click.option("--out", "out_ckpt", required=True, type=click.Path())
@click.option("--model", "model_kind", type=click.Choice(["lstm", "dnn"]), default="lstm",
              show_default=True)
@click.option("--drop-k", type=int, default=None, help="Channels dropped per window.")
@click.option("--iterations", type=int, default=None)
@click.option("--window-length", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--segment-seconds", type=float, default=30.0, show_default=True)
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Train-log CSV (iteration, loss).")
@click.option("--seed", type=int, default=None)
@click.pass_context
def train(ctx, data, out_ckpt, model_kind, drop_k, iterations, window_length,
          batch_size, learning_rate, segment_seconds, log_path, seed):
    """Train an autoencoder with channel dropout; writes a checkpoint."""
    cfg_section = dict(ctx.obj["config"].get("train", {}))
    config = _build_dataclass(TrainConfig, cfg_section, "train")
    if drop_k is not None:
        config.drop_channels = drop_k
    if iterations is not None:
        config.max_iterations = iterations
    if window_length is not None:
        config.window_length = window_length
    if batch_size is not None:
        config.batch_size = batch_size
    if learning_rate is not None:
        config.learning_rate = learning_rate
    config.seed = _pick_seed(ctx, seed) if (seed is not None or ctx.obj.get("seed") is not None) else config.seed

    series = import_csv(data)
    trend = preprocess.estimate_trend(series, segment_seconds)
    detrended = preprocess.detrend(series, trend)
    stats = preprocess.fit_normalizer(detrended)
    normalized = preprocess.apply_normalizer(detrended, stats)

    rng = np.random.default_rng(config.seed)
    model = build_model(model_kind, channel_count=series.channel_count, rng=rng)
    _log(ctx, f"training {model_kind} model: {config}")
    log = pipeline.train(model, normalized, config)
    save_checkpoint(
        model,
        out_ckpt,
        channel_stats=stats.to_records(),
        train_config=dataclasses.asdict(config),
        seed=config.seed,
    )
    if log_path is not None:
        log.to_csv(log_path)
    _log(ctx, f"final loss {log.final_loss:.6f} after {log.iterations[-1]} iterations")


def _load_model_and_stats(checkpoint):
    model, meta = load_checkpoint(checkpoint)
    records = meta.get("channel_stats")
    if not records:
        raise CheckpointError(f"checkpoint {checkpoint} carries no channel stats")
    stats = preprocess.ChannelStats.from_records(records)
    return model, stats, meta


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(),
              help="Imputed CSV in detrended space.")
@click.option("--window-length", type=int, default=None)
@click.option("--segment-seconds", type=float, default=30.0, show_default=True)
@click.pass_context
def impute(ctx, data, checkpoint, out, window_length, segment_seconds):
    """Fill missing channels of a corpus with model reconstructions."""
    model, stats, meta = _load_model_and_stats(checkpoint)
    if window_length is None:
        window_length = (meta.get("train_config") or {}).get("window_length", 240)
    series = import_csv(data)
    trend = preprocess.estimate_trend(series, segment_seconds)
    detrended = preprocess.detrend(series, trend)
    filled, _ = pipeline.impute(model, detrended, stats, window_length)
    export_csv(filled, out)
    _log(ctx, f"imputed {data} -> {out}")


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--baseline-start", type=float, required=True,
              help="Healthy reference period start, seconds offset.")
@click.option("--baseline-end", type=float, required=True,
              help="Healthy reference period end, seconds offset.")
@click.option("--eval-start", type=float, default=None,
              help="Evaluation period start; defaults to baseline end.")
@click.option("--eval-end", type=float, default=None)
@click.option("--drop", "dropped", multiple=True,
              help="Channel treated as missing at the model input (repeatable).")
@click.option("--out-report", required=True, type=click.Path())
@click.option("--out-imputed", type=click.Path(), default=None)
@click.option("--baseline-windows", type=int, default=64, show_default=True)
@click.option("--window-length", type=int, default=None)
@click.option("--segment-seconds", type=float, default=30.0, show_default=True)
@click.option("--seed", type=int, default=None)
@click.pass_context
def diagnose(ctx, data, checkpoint, baseline_start, baseline_end, eval_start,
             eval_end, dropped, out_report, out_imputed, baseline_windows,
             window_length, segment_seconds, seed):
    """3-sigma damage diagnosis against a named healthy reference period.

    Exits 0 when no channel is flagged, 2 when damage is detected.
    """
    model, stats, meta = _load_model_and_stats(checkpoint)
    if window_length is None:
        window_length = (meta.get("train_config") or {}).get("window_length", 240)
    series = import_csv(data)
    trend = preprocess.estimate_trend(series, segment_seconds)
    detrended = preprocess.detrend(series, trend)

    reference = detrended.slice_time(baseline_start, baseline_end)
    if eval_start is None:
        eval_start = baseline_end
    if eval_end is None:
        eval_end = series.n_samples / series.sample_rate
    evaluation = detrended.slice_time(eval_start, eval_end)

    baseline = pipeline.fit_baseline(
        model,
        reference,
        stats,
        window_length,
        n_windows=baseline_windows,
        seed=_pick_seed(ctx, seed),
        period_id=f"[{baseline_start}, {baseline_end})",
        declared_missing=list(dropped),
    )
    report = pipeline.diagnose(
        model, baseline, evaluation, stats, window_length, declared_missing=list(dropped)
    )
    report.to_json(out_report)
    if out_imputed is not None:
        eval_masked = evaluation.copy()
        for name in dropped:
            ci = eval_masked.channel_index(name)
            eval_masked.mask[:, ci] = False
            eval_masked.values[:, ci] = np.nan
        filled, _ = pipeline.impute(model, eval_masked, stats, window_length)
        export_csv(filled, out_imputed)
    for c in report.channels:
        _log(ctx, f"{c.name}: z={c.z:.2f} damaged={c.damaged} missing={c.missing}")
    if report.any_damage:
        click.echo(f"damage detected: {', '.join(report.damaged_channels)}")
        sys.exit(2)
    click.echo("no damage detected")


@cli.command()
@click.option("--kind", required=True,
              type=click.Choice(["loss", "sweep", "overlay", "zbars", "violin"]))
@click.option("--out", required=True, type=click.Path())
@click.option("--in", "inputs", multiple=True, type=str,
              help="Input artifact(s); sweep takes repeated k=path pairs, "
                   "overlay takes truth and prediction CSVs.")
@click.option("--channel", type=str, default=None, help="Channel for overlay/violin.")
@click.option("--segment-seconds", type=float, default=30.0, show_default=True)
@click.pass_context
def plot(ctx, kind, out, inputs, channel, segment_seconds):
    """Export plot-ready CSV data for the standard result views."""
    if kind == "loss":
        _require(len(inputs) == 1, "loss needs exactly one train-log CSV")
        log = TrainLog.from_csv(inputs[0])
        with open(out, "w") as fh:
            fh.write("iteration,loss\n")
            for it, loss in zip(log.iterations, log.losses):
                fh.write(f"{it},{loss!r}\n")
    elif kind == "sweep":
        _require(len(inputs) >= 1, "sweep needs k=path pairs")
        rows = []
        for spec in inputs:
            if "=" not in spec:
                raise ConfigError(f"sweep input must be k=path, got {spec!r}")
            k, path = spec.split("=", 1)
            log = TrainLog.from_csv(path)
            rows.append((int(k), log.final_loss))
        rows.sort()
        with open(out, "w") as fh:
            fh.write("k,final_loss\n")
            for k, loss in rows:
                fh.write(f"{k},{loss!r}\n")
    elif kind == "overlay":
        _require(len(inputs) == 2 and channel, "overlay needs truth and prediction CSVs plus --channel")
        truth = import_csv(inputs[0])
        pred = import_csv(inputs[1])
        ci = truth.channel_index(channel)
        pj = pred.channel_index(channel)
        n = min(truth.n_samples, pred.n_samples)
        with open(out, "w") as fh:
            fh.write("timestamp,truth,prediction\n")
            ts = truth.timestamps
            for i in range(n):
                tv = truth.values[i, ci]
                pv = pred.values[i, pj]
                fh.write(f"{ts[i]!r},{'' if np.isnan(tv) else repr(tv)},"
                         f"{'' if np.isnan(pv) else repr(pv)}\n")
    elif kind == "zbars":
        _require(len(inputs) == 1, "zbars needs one report JSON")
        report = DamageReport.from_json(inputs[0])
        with open(out, "w") as fh:
            fh.write("channel,z,threshold\n")
            for c in report.channels:
                z = "" if not np.isfinite(c.z) else repr(c.z)
                fh.write(f"{c.name},{z},{report.threshold!r}\n")
    elif kind == "violin":
        _require(len(inputs) == 1 and channel, "violin needs one corpus CSV plus --channel")
        from scipy.stats import gaussian_kde

        series = import_csv(inputs[0])
        ci = series.channel_index(channel)
        seg_len = int(round(segment_seconds * series.sample_rate))
        with open(out, "w") as fh:
            fh.write("segment_midpoint,value,density\n")
            n = series.n_samples
            for s in range(0, n, seg_len):
                seg = series.values[s : s + seg_len, ci]
                seg = seg[~np.isnan(seg)]
                mid = (s + min(s + seg_len, n) - 1) / 2.0 / series.sample_rate
                if seg.size < 4 or np.ptp(seg) == 0:
                    continue
                kde = gaussian_kde(seg)
                grid = np.linspace(seg.min(), seg.max(), 32)
                for v, d in zip(grid, kde(grid)):
                    fh.write(f"{mid!r},{v!r},{d!r}\n")
    _log(ctx, f"wrote {kind} plot data to {out}")


def _require(cond, message):
    if not cond:
        raise click.UsageError(message)


def main(argv=None):
    """Entry point with the package's exit-code policy (1 on any error)."""
    try:
        cli(args=argv, standalone_mode=False, obj={})
    except SystemExit:
        raise
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    sys.exit(0)


if __name__ == "__main__":
    main()
