"""Command-line entry point.

Subcommands: mix, train, eval, infer, report. All randomness flows from
explicit --seed values; reruns with the same inputs produce identical
outputs. Exit codes: 0 ok, 1 I/O failure, 2 validation failure,
3 numerical failure (diverged training).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .audio_io import build_manifest, load_manifest, mix_at_snr, read_wav, save_manifest, write_wav
from .baseline import BaselineConfig, unbiased_mmse_spp
from .errors import DivergedLossError, EmptyManifestError, SppError
from .evaluation import evaluate, load_report, save_report
from .model import (
    ModelBundle,
    config_fingerprint,
    config_from_dict,
    count_macs_per_frame,
    count_params,
    infer,
    load_bundle,
    save_bundle,
    train_binwise,
    train_typical,
)
from .spectral import power_spec, stft
from .targets import TargetConfig, ground_truth_labels, write_matrix_csv


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return data


def _target_config(section: dict) -> TargetConfig:
    extra = set(section) - {"prior_ratio", "xi_h1", "noise_smoothing"}
    if extra:
        raise ValueError(f"unknown target config fields {sorted(extra)}")
    cfg = TargetConfig(**{k: float(v) for k, v in section.items()})
    cfg.validate()
    return cfg


def _baseline_config(section: dict) -> BaselineConfig:
    known = {"xi_h1", "prior_ratio", "psd_smoothing", "spp_time_smoothing", "stuck_guard", "init_frames"}
    extra = set(section) - known
    if extra:
        raise ValueError(f"unknown baseline config fields {sorted(extra)}")
    kwargs = {k: (int(v) if k == "init_frames" else float(v)) for k, v in section.items()}
    cfg = BaselineConfig(**kwargs)
    cfg.validate()
    return cfg


def cmd_mix(args) -> int:
    out_dir = Path(args.out_dir)
    manifest = build_manifest(
        args.clean_dir, args.noise_dir,
        snr_min=args.snr_min, snr_max=args.snr_max,
        seed=args.seed if args.seed is not None else 0,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    save_manifest(manifest, out_dir / "manifest.json")
    for idx, entry in enumerate(manifest.entries):
        clean = read_wav(entry.clean)
        noise = read_wav(entry.noise)
        noisy, scaled_noise, _ = mix_at_snr(clean, noise, entry.snr_db, entry.seed)
        stem = f"{idx:04d}_{Path(entry.clean).stem}"
        write_wav(out_dir / "noisy" / f"{stem}.wav", noisy)
        write_wav(out_dir / "noise" / f"{stem}.wav", scaled_noise)
    print(f"mixed {len(manifest.entries)} utterances "
          f"(SNR in [{args.snr_min}, {args.snr_max}] dB) into {out_dir}")
    return 0


def cmd_train(args) -> int:
    file_cfg = _load_config_file(args.config)
    target_section = file_cfg.pop("target", {})
    for flag, key in (
        (args.kind, "kind"), (args.neighbors, "neighbors"), (args.epochs, "epochs"),
        (args.workers, "workers"), (args.seed, "seed"),
    ):
        if flag is not None:
            file_cfg[key] = flag
    cfg = config_from_dict(file_cfg)
    target_cfg = _target_config(target_section)
    manifest = load_manifest(args.manifest, split="train")
    if not manifest.entries:
        raise EmptyManifestError(f"{args.manifest} has no entries")
    train = train_binwise if cfg.kind == "binwise" else train_typical
    bundle, history = train(manifest, cfg, target_cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_bundle(bundle, out)
    loss_csv = Path(args.loss_csv) if args.loss_csv else out.with_suffix(".loss.csv")
    with loss_csv.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "lr", "loss"])
        for rec in history:
            writer.writerow([rec.epoch, repr(rec.lr), repr(rec.loss)])
    print(f"trained {cfg.kind} (neighbors={cfg.neighbors}): "
          f"params={count_params(bundle)} macs/frame={count_macs_per_frame(bundle)} -> {out}")
    return 0


def _estimator_id(bundle: ModelBundle) -> str:
    if bundle.config.kind == "binwise":
        return f"binwise-I{bundle.config.neighbors}"
    return "typical"


def cmd_eval(args) -> int:
    if (args.bundle is None) == (args.estimator is None):
        raise ValueError("pass exactly one of --bundle or --estimator unbiased")
    file_cfg = _load_config_file(args.config)
    manifest = load_manifest(args.manifest, split="test")
    if not manifest.entries:
        raise EmptyManifestError(f"{args.manifest} has no entries")

    if args.bundle is not None:
        bundle = load_bundle(args.bundle)
        estimator = _estimator_id(bundle)
        frame_len, hop = bundle.config.frame_len, bundle.config.hop
        params, macs = count_params(bundle), count_macs_per_frame(bundle)
        fingerprint = config_fingerprint(bundle.config)
        baseline_cfg = None
    else:
        if args.estimator != "unbiased":
            raise ValueError(f"unknown estimator {args.estimator!r}")
        bundle = None
        estimator = "unbiased"
        frame_len = int(file_cfg.get("frame_len", 256))
        hop = int(file_cfg.get("hop", 128))
        params = macs = 0
        baseline_cfg = _baseline_config(file_cfg.get("baseline", {}))
        fingerprint = ""

    dump_dir = Path(args.dump_labels) if args.dump_labels else None
    pairs = []
    for idx, entry in enumerate(manifest.entries):
        clean = read_wav(entry.clean)
        noise = read_wav(entry.noise)
        noisy, _, _ = mix_at_snr(clean, noise, entry.snr_db, entry.seed)
        labels = ground_truth_labels(power_spec(stft(clean, frame_len, hop), role="clean"))
        if bundle is not None:
            spp = infer(bundle, noisy)
        else:
            spp, _ = unbiased_mmse_spp(power_spec(stft(noisy, frame_len, hop)), baseline_cfg)
        pairs.append((spp, labels))
        if dump_dir is not None:
            write_matrix_csv(labels.values, dump_dir / f"{idx:04d}_labels.csv")
            write_matrix_csv(spp.values, dump_dir / f"{idx:04d}_spp.csv")

    report = evaluate(
        pairs,
        estimator=estimator,
        dataset=Path(args.manifest).stem,
        config_fingerprint=fingerprint,
        params=params,
        macs_per_frame=macs,
    )
    out_dir = Path(args.out_dir)
    save_report(report, out_dir / f"report_{estimator}.json", out_dir / f"roc_{estimator}.csv")
    print(f"{estimator}: AUC={report.auc:.4f} Pd@0.05={report.pd_at_pfa05:.4f} "
          f"params={params} macs/frame={macs} ({report.num_scores} pooled bins)")
    return 0


def cmd_infer(args) -> int:
    bundle = load_bundle(args.bundle)
    utterance = read_wav(args.wav)
    spp = infer(bundle, utterance)
    out = Path(args.out) if args.out else Path(args.out_dir) / f"{Path(args.wav).stem}_spp.csv"
    write_matrix_csv(spp.values, out)
    print(f"wrote {spp.values.shape[0]}x{spp.values.shape[1]} SPP matrix to {out}")
    return 0


def cmd_report(args) -> int:
    from . import reporting

    reports = [load_report(p) for p in args.reports]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / "comparison.csv"
    reporting.write_comparison_csv(reports, table)
    curves = [
        (r.estimator, Path(p).parent / json.loads(Path(p).read_text())["roc_csv"])
        for r, p in zip(reports, args.reports)
    ]
    reporting.write_gnuplot_script(curves, out_dir / "roc_curves.gp")
    reporting.render_roc_figure(reports, out_dir / "roc_curves.png")
    reporting.render_complexity_figure(reports, out_dir / "detection_vs_complexity.png")
    print(f"report for {len(reports)} estimators -> {table}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sppkit",
        description="Frequency bin-wise speech presence probability toolkit",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base RNG seed")
    common.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    common.add_argument("--config", type=Path, default=None, help="JSON config file")

    sub = parser.add_subparsers(dest="command", required=True)

    mix = sub.add_parser("mix", parents=[common], help="mix clean and noise dirs into a manifest + WAVs")
    mix.add_argument("--clean-dir", type=Path, required=True)
    mix.add_argument("--noise-dir", type=Path, required=True)
    mix.add_argument("--snr-min", type=float, default=-5.0)
    mix.add_argument("--snr-max", type=float, default=25.0)
    mix.set_defaults(func=cmd_mix)

    train = sub.add_parser("train", parents=[common], help="train a model on a manifest")
    train.add_argument("--manifest", type=Path, required=True)
    train.add_argument("--out", type=Path, required=True, help="bundle JSON path")
    train.add_argument("--kind", choices=["binwise", "typical"], default=None)
    train.add_argument("--neighbors", type=int, default=None, help="bins on each side of the estimated bin")
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--workers", type=int, default=None)
    train.add_argument("--loss-csv", type=Path, default=None)
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", parents=[common], help="evaluate a bundle or the unbiased baseline")
    ev.add_argument("--manifest", type=Path, required=True)
    ev.add_argument("--bundle", type=Path, default=None)
    ev.add_argument("--estimator", choices=["unbiased"], default=None)
    ev.add_argument("--dump-labels", type=Path, default=None,
                    help="directory for per-utterance label/SPP CSV dumps")
    ev.set_defaults(func=cmd_eval)

    inf = sub.add_parser("infer", parents=[common], help="SPP matrix CSV for one WAV")
    inf.add_argument("--bundle", type=Path, required=True)
    inf.add_argument("--wav", type=Path, required=True)
    inf.add_argument("--out", type=Path, default=None)
    inf.set_defaults(func=cmd_infer)

    rep = sub.add_parser("report", parents=[common], help="merge metric reports into a table and plots")
    rep.add_argument("reports", nargs="+", type=Path)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except DivergedLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SppError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
