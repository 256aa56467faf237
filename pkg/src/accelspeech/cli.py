"""Command-line entry point: one binary, one subcommand per pipeline stage.

Exit status is 0 on success, 1 for usage errors and 2 for data errors.
Every command stages its artifacts in memory and commits them with
atomic renames, then writes a manifest naming inputs, outputs, the
config hash and the seed.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, dsp
from .config import TARGETS, ConfigError, RunConfig, build_config, format_config, parse_config_text
from .errors import AccelSpeechError
from .features import FEATURE_NAMES, vectors_from_csv, vectors_to_csv
from .ingest import format_csv, parse_csv
from .ml import Dataset, TrainedModel, confusion_matrix, evaluate, info_gain_ranking, make_trainer
from .ml.evaluation import render_table
from . import pipeline as pl
from .segment import regions_from_csv, regions_to_csv

COMMANDS = ("ingest", "segment", "features", "spectrogram", "train", "eval", "simulate", "pipeline")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Staging:
    """Artifacts held in memory until the command has fully succeeded."""

    def __init__(self, out_dir: str):
        self.out_dir = Path(out_dir)
        self.files: dict[str, bytes] = {}

    def add(self, name: str, data) -> None:
        if isinstance(data, str):
            data = data.encode()
        self.files[name] = data

    def add_png(self, name: str, image: np.ndarray) -> None:
        buf = io.BytesIO()
        from PIL import Image

        Image.fromarray(np.asarray(image, dtype=np.uint8), mode="L").save(buf, format="PNG")
        self.add(name, buf.getvalue())

    def commit(self) -> None:
        for name, data in self.files.items():
            path = self.out_dir / name
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=path.parent)
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise


class Run:
    """Config plus the record of which inputs a command has read."""

    def __init__(self, command: str, cfg: RunConfig, config_path: str | None):
        self.command = command
        self.cfg = cfg
        self.stage = Staging(cfg.out)
        self.inputs: dict[str, dict] = {}
        if config_path:
            self._record("config", config_path, Path(config_path).read_bytes())

    def _record(self, role: str, path: str, data: bytes) -> None:
        self.inputs[role] = {"path": str(path), "sha256": sha256_bytes(data)}

    def read(self, role: str) -> str:
        path = getattr(self.cfg, role)
        if path is None:
            raise UsageError(f"{self.command} needs --{role}")
        data = Path(path).read_bytes()
        self._record(role, path, data)
        return data.decode()

    def stream(self, role: str = "input"):
        path = getattr(self.cfg, role)
        if path is None:
            raise UsageError(f"{self.command} needs --{role}")
        self._record(role, path, Path(path).read_bytes())
        return parse_csv(path, self.cfg.columns)

    def finish(self) -> None:
        outputs = {name: sha256_bytes(data) for name, data in sorted(self.stage.files.items())}
        manifest = {
            "command": self.command,
            "version": __version__,
            "seed": self.cfg.seed,
            "config": self.cfg.content_dict(),
            "config_hash": self.cfg.digest(),
            "inputs": self.inputs,
            "outputs": outputs,
        }
        self.stage.add(f"{self.command}.manifest.json", dumps_json(manifest))
        self.stage.commit()


# -- commands --------------------------------------------------------------------


def _stream_summary(stream) -> dict:
    return {"n_samples": len(stream), "nominal_rate": stream.nominal_rate,
            "duration_s": stream.duration, "units": stream.units,
            "uniform": bool(stream.is_uniform), "irregular": bool(stream.irregular)}


def cmd_simulate(run: Run) -> None:
    stream, truth = pl.simulate_corpus(run.cfg)
    labels = [t.labels for t in truth]
    run.stage.add("corpus.csv", format_csv(stream, run.cfg.columns))
    run.stage.add("truth.csv", regions_to_csv([t.region for t in truth], stream.nominal_rate,
                                              float(stream.timestamps[0]), labels))
    info = _stream_summary(stream)
    info.update({"n_utterances": len(truth),
                 "white_std": float(stream.metadata["white_std"]),
                 "source_rate": float(stream.metadata["source_rate"])})
    run.stage.add("simulate.json", dumps_json(info))


def cmd_ingest(run: Run) -> None:
    raw = run.stream()
    stream = pl.prepare_stream(raw, run.cfg.rate)
    run.stage.add("stream.csv", format_csv(stream, run.cfg.columns))
    run.stage.add("ingest.json", dumps_json({"input": _stream_summary(raw),
                                             "output": _stream_summary(stream)}))


def _truth(run: Run, stream):
    if run.cfg.truth is None:
        return None
    return pl.rescale_truth(pl.truth_from_csv(run.read("truth")), stream)


def cmd_segment(run: Run) -> None:
    stream = pl.prepare_stream(run.stream(), run.cfg.rate)
    res = pl.segment_and_label(stream, run.cfg, _truth(run, stream))
    t0 = float(stream.timestamps[0])
    run.stage.add("regions.csv", regions_to_csv(res.regions, stream.nominal_rate, t0, res.labels))
    run.stage.add("segment.json", dumps_json({
        "axis": res.axis, "variances": res.variances, "n_regions": len(res.regions),
        "detection_rate": res.detection_rate, "rate": stream.nominal_rate}))


def _regions(run: Run, stream):
    regions, labels = regions_from_csv(run.read("regions"), stream.nominal_rate,
                                       float(stream.timestamps[0]))
    return regions, labels


def cmd_features(run: Run) -> None:
    stream = pl.prepare_stream(run.stream(), run.cfg.rate)
    regions, labels = _regions(run, stream)
    vectors = pl.features_for(stream, regions, run.cfg)
    available = set(labels[0]) if labels else set()
    targets = pl.targets_for(run.cfg, available) if available else []
    if not targets:
        run.stage.add("features.csv", vectors_to_csv(vectors))
        return
    for t in targets:
        if t not in available:
            raise ConfigError(f"region file has no {t!r} column")
        run.stage.add(f"features_{t}.csv", vectors_to_csv(pl.relabel(vectors, labels, t)))


def cmd_spectrogram(run: Run) -> None:
    stream = pl.prepare_stream(run.stream(), run.cfg.rate)
    regions, _ = _regions(run, stream)
    cfg = run.cfg
    summary, filtered = [], {}
    for i, r in enumerate(regions):
        if r.axis not in filtered:
            filtered[r.axis] = dsp.highpass(stream.axis(r.axis), stream.nominal_rate,
                                            cfg.feature_filter)
        x = filtered[r.axis]
        s, e = pl.spectrogram_span(r, len(x), cfg.window_len)
        spec = dsp.stft(x[s:e], stream.nominal_rate, cfg.window_len, cfg.hop)
        rid = f"r{i:04d}"
        run.stage.add_png(f"spectrograms/{rid}.png", dsp.render_image(spec, cfg.image_size))
        if cfg.image_csv:
            run.stage.add(f"spectrograms/{rid}.csv", dsp.spectrogram_csv(spec))
        summary.append({"region_id": rid, "frames": spec.shape[0], "bins": spec.shape[1],
                        "peak_hz": dsp.peak_frequency(spec)})
    run.stage.add("spectrogram.json", dumps_json({"regions": summary}))


def _dataset(run: Run) -> Dataset:
    vectors = vectors_from_csv(run.read("features"))
    if not vectors:
        raise AccelSpeechError("feature file has no rows")
    if any(v.label == "" for v in vectors):
        raise AccelSpeechError("feature file has unlabelled rows")
    return Dataset.from_vectors(vectors)


def cmd_train(run: Run) -> None:
    data = _dataset(run)
    cfg = run.cfg
    model = make_trainer(cfg.classifier, cfg.classifier_params, int(cfg.seed))(data)
    run.stage.add("model.json", model.dumps())
    run.stage.add("info_gain.json", dumps_json(
        [{"feature": n, "gain": g} for n, g in info_gain_ranking(data)]))


def _report_files(run: Run, reports: dict, detection: str, extra: dict, classifier=None) -> None:
    cfg = run.cfg
    title = classifier or pl.CLASSIFIER_TITLES[cfg.classifier]
    rows = [(detection, title, pl.TARGET_TITLES.get(t, t), rep)
            for t, rep in reports.items()]
    run.stage.add("eval.json", dumps_json({
        "classifier": cfg.classifier, "split": cfg.split, "seed": cfg.seed, **extra,
        "targets": {t: rep.to_dict() for t, rep in reports.items()}}))
    lines = [render_table(rows)]
    lines += [f"{pl.TARGET_TITLES.get(t, t)}: accuracy {rep.accuracy * 100:.1f}% | {rep.row()}"
              for t, rep in reports.items()]
    run.stage.add("report.txt", "\n".join(lines) + "\n")


def _labelled_datasets(stream, run: Run, truth):
    res = pl.segment_and_label(stream, run.cfg, truth)
    if not res.regions:
        raise AccelSpeechError("no word regions matched the ground truth")
    vectors = pl.features_for(stream, res.regions, run.cfg)
    datasets = {}
    for t in pl.targets_for(run.cfg, set(res.labels[0])):
        if t not in res.labels[0]:
            raise ConfigError(f"ground truth has no {t!r} column")
        datasets[t] = Dataset.from_vectors(pl.relabel(vectors, res.labels, t))
    return res, vectors, datasets


def cmd_eval(run: Run) -> None:
    cfg = run.cfg
    if cfg.model is not None:
        model = TrainedModel.loads(run.read("model"))
        vectors = vectors_from_csv(run.read("features"))
        unknown = sorted({v.label for v in vectors} - set(model.classes))
        if unknown:
            raise AccelSpeechError(f"labels {unknown} are not classes of the model")
        X = np.array([v.values for v in vectors], dtype=float).reshape(-1, len(FEATURE_NAMES))
        pred = model.predict_index(X)
        idx = {c: i for i, c in enumerate(model.classes)}
        y = np.array([idx[v.label] for v in vectors], dtype=np.int64)
        rep = evaluate(confusion_matrix(y, pred, len(model.classes)), model.classes)
        rep.meta.update({"protocol": "model", "n": len(y)})
        _report_files(run, {"label": rep}, "Model", {"kind": model.kind},
                      pl.KIND_TITLES.get(model.kind, model.kind))
        return
    if cfg.features is not None:
        rep = pl.run_protocol(_dataset(run), cfg)
        _report_files(run, {"label": rep}, "Features", {})
        return
    if cfg.input is None or cfg.truth is None:
        raise UsageError("eval needs --model and --features, --features, or --input with --truth")
    stream = pl.prepare_stream(run.stream(), cfg.rate)
    res, _, datasets = _labelled_datasets(stream, run, _truth(run, stream))
    reports = {t: pl.run_protocol(d, cfg) for t, d in datasets.items()}
    _report_files(run, reports, "Automatic", {"rate": stream.nominal_rate,
                                              "detection_rate": res.detection_rate})


def cmd_pipeline(run: Run) -> None:
    cfg = run.cfg
    if cfg.input is not None:
        if cfg.truth is None:
            raise UsageError("pipeline on recorded data needs --truth for labels")
        raw = run.stream()
        truth_s = pl.truth_from_csv(run.read("truth"))
    else:
        raw, truth = pl.simulate_corpus(cfg)
        truth_s = pl.truth_in_seconds(truth, raw)
        run.stage.add("corpus.csv", format_csv(raw, cfg.columns))
        run.stage.add("truth.csv", regions_to_csv([t.region for t in truth], raw.nominal_rate,
                                                  float(raw.timestamps[0]), [t.labels for t in truth]))
    stream = pl.prepare_stream(raw, cfg.rate)
    truth = pl.rescale_truth(truth_s, stream)
    res, vectors, datasets = _labelled_datasets(stream, run, truth)
    t0 = float(stream.timestamps[0])
    run.stage.add("regions.csv", regions_to_csv(res.regions, stream.nominal_rate, t0, res.labels))
    reports, gains = {}, {}
    for t, data in datasets.items():
        run.stage.add(f"features_{t}.csv", vectors_to_csv(pl.relabel(vectors, res.labels, t)))
        model = make_trainer(cfg.classifier, cfg.classifier_params, int(cfg.seed))(data)
        run.stage.add(f"model_{t}.json", model.dumps())
        reports[t] = pl.run_protocol(data, cfg)
        gains[t] = [{"feature": n, "gain": g} for n, g in info_gain_ranking(data)[:5]]
    _report_files(run, reports, "Automatic", {
        "rate": stream.nominal_rate, "axis": res.axis, "variances": res.variances,
        "detection_rate": res.detection_rate, "n_regions": len(res.regions),
        "n_truth": len(truth), "top_info_gain": gains})


HELP = {
    "ingest": "read a sensor CSV, optionally resample, write stream.csv",
    "segment": "detect word regions, write regions.csv",
    "features": "extract per-region features, write features CSVs",
    "spectrogram": "render per-region spectrogram PNGs",
    "train": "train a classifier on a features CSV",
    "eval": "evaluate a model or run the evaluation protocol",
    "simulate": "generate a synthetic labelled corpus",
    "pipeline": "simulate or ingest, then segment, extract, train and evaluate",
}

HANDLERS = {
    "ingest": cmd_ingest, "segment": cmd_segment, "features": cmd_features,
    "spectrogram": cmd_spectrogram, "train": cmd_train, "eval": cmd_eval,
    "simulate": cmd_simulate, "pipeline": cmd_pipeline,
}


# -- argument handling -------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--rate", type=float, help="resample to this rate (Hz) before processing")
    p.add_argument("--cutoff", type=float, help="feature high-pass cutoff (Hz)")
    p.add_argument("--classifier", choices=("rf", "rss", "dt"))
    p.add_argument("--split", choices=("holdout", "cv10"))
    p.add_argument("--target", choices=TARGETS + ("all",))
    p.add_argument("--out", metavar="DIR")
    for name in ("input", "truth", "regions", "features", "model"):
        p.add_argument(f"--{name}", metavar="PATH")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="any other config key")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="accelspeech", description="Accelerometer speech side-channel toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        _add_common(sub.add_parser(name, help=HELP[name]))
    sub.add_parser("show-config", help="print the merged configuration")
    _add_common(sub.choices["show-config"])
    return parser


def resolve_config(args) -> tuple[RunConfig, str | None]:
    file_values = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        file_values = parse_config_text(text)
    extra = parse_config_text("\n".join(args.set)) if args.set else {}
    overrides = {k: getattr(args, k) for k in
                 ("seed", "rate", "cutoff", "classifier", "split", "target", "out",
                  "input", "truth", "regions", "features", "model")}
    cfg = build_config({**file_values, **extra}, overrides)
    return cfg.validate(), args.config


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        cfg, config_path = resolve_config(args)
        if args.command == "show-config":
            sys.stdout.write(format_config(cfg))
            return 0
        run = Run(args.command, cfg, config_path)
        HANDLERS[args.command](run)
        run.finish()
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (AccelSpeechError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
