"""``graphceps`` command line.

Exit codes: 0 success, 2 usage or configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import pipeline
from .errors import ConfigError, ContractError, DataError
from .features import KINDS

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", type=Path, help="JSON run config (defaults apply when omitted)")
    p.add_argument("--dataset", help="dataset directory (holds dataset.json)")
    p.add_argument("--output", help="output root")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--graph", help='graph config path or "fixture"')
    p.add_argument("--alpha", type=float, help="override the graph's connection weight")
    p.add_argument("--kind", action="append", choices=KINDS, help="feature kind (repeatable)")
    p.add_argument("--order", type=int, help="feature order K")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=None, help="per-frame z-normalization")
    p.add_argument("--centered", action=argparse.BooleanOptionalAction, default=None, help="mean-centred PCA for SC")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphceps", description="Graph cepstrum features for distributed microphones.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "render a synthetic train/test dataset",
        "extract": "write per-clip feature files",
        "fit-basis": "fit the SC (PCA) basis on the training split",
        "basis-report": "emit basis grids and the similarity table",
        "train": "train per-scene GMMs",
        "classify": "classify standalone clips",
        "evaluate": "test-split accuracy and confusion matrix",
        "sweep": "accuracy versus inter-group offset spread",
    }
    cmds = {}
    for name, text in helps.items():
        cmds[name] = sub.add_parser(name, help=text)
        _common(cmds[name])
    cmds["synth"].add_argument("--n-train", type=int)
    cmds["synth"].add_argument("--n-test", type=int)
    cmds["synth"].add_argument("--sample-rate", type=float)
    cmds["synth"].add_argument("--clip-s", type=float)
    cmds["extract"].add_argument("--force", action="store_true", help="recompute existing feature files")
    cmds["basis-report"].add_argument("--alphas", type=float, nargs="+")
    cmds["classify"].add_argument("clips", nargs="+", type=Path, help="WAV files or channel manifests")
    cmds["sweep"].add_argument("--sigmas-ms", type=float, nargs="+")
    cmds["sweep"].add_argument("--reps", type=int)
    return parser


_FLAG_KEYS = {
    "dataset": "dataset",
    "output": "output",
    "seed": "seed",
    "workers": "workers",
    "graph": "graph",
    "order": "features.order",
    "normalize": "features.normalize",
    "centered": "features.centered",
    "n_train": "synth.n_train",
    "n_test": "synth.n_test",
    "sample_rate": "synth.sample_rate",
    "clip_s": "synth.clip_s",
    "alphas": "report.alphas",
    "sigmas_ms": "sweep.sigmas_ms",
    "reps": "sweep.repetitions",
}


def _overrides(args) -> dict:
    out = {}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[key] = list(value) if isinstance(value, (list, tuple)) else value
    for key in ("dataset", "output", "graph"):
        # command-line paths are relative to the working directory
        if key in out and out[key] != "fixture":
            out[key] = str(Path(out[key]).resolve())
    return out


def load_config(args) -> pipeline.RunConfig:
    over = _overrides(args)
    if args.config is not None:
        cfg = pipeline.RunConfig.load(args.config, over)
    else:
        cfg = pipeline.RunConfig.from_dict(pipeline.apply_overrides({}, over), Path.cwd())
    if args.alpha is not None:
        cfg = replace(cfg, graph=cfg.require_graph("--alpha").with_alpha(args.alpha))
    return cfg


def run(args) -> object:
    cfg = load_config(args)
    kinds = tuple(dict.fromkeys(args.kind)) if args.kind else None
    cmd = args.command
    if cmd == "synth":
        return pipeline.cmd_synth(cfg)
    if cmd == "extract":
        return pipeline.cmd_extract(cfg, kinds, force=args.force)
    if cmd == "fit-basis":
        return pipeline.cmd_fit_basis(cfg)
    if cmd == "basis-report":
        return pipeline.cmd_basis_report(cfg)
    if cmd == "train":
        return pipeline.cmd_train(cfg, kinds)
    if cmd == "classify":
        return pipeline.cmd_classify(cfg, args.clips, kinds)
    if cmd == "evaluate":
        return pipeline.cmd_evaluate(cfg, kinds)
    return pipeline.cmd_sweep(cfg, kinds)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            result = run(args)
    except ConfigError as exc:
        print(f"graphceps {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ContractError, OSError) as exc:
        print(f"graphceps {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
