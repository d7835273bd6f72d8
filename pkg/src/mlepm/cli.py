"""Command-line interface: ``mlepm {synth,train,evaluate,perturb}``.

Exit codes: 0 success, 2 usage or validation error, 3 I/O error,
4 dataset error, 5 checkpoint error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import data
from .epm import EigenvectorMode, Target, bounds_of, perturb
from .errors import (
    CheckpointError,
    DatasetError,
    DegenerateSpread,
    EmptyPartition,
    InvalidConfig,
    InvalidDelta,
    NonPositiveFreestream,
    TooFewProfiles,
)
from .ml import CnnModel, TrainingConfig, load_checkpoint, save_checkpoint, train
from .ml.network import param_count
from .pipeline import CorrectionModel, evaluate_station, report, stress_from_anisotropy
from .tensor import SymTensor3, anisotropy, is_realizable, tke

log = logging.getLogger("mlepm")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATASET = 4
EXIT_CHECKPOINT = 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _targets(text):
    try:
        return [Target.parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    parser = argparse.ArgumentParser(prog="mlepm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic paired dataset")
    p.add_argument("--profiles", type=int, default=12)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--noise", type=float, default=0.01, help="noise std as a fraction of each profile's peak")
    p.add_argument("--law", choices=sorted(data.LAWS), default="default")
    p.add_argument("--cases", type=int, default=1)
    p.add_argument("--u-inf", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("train", help="train the correction network")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="checkpoint path")
    p.add_argument("--history", type=Path, help="history JSON (default: <out stem>.history.json)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--loss", choices=("mae", "mse"), default="mae")
    p.add_argument("--u-inf", type=float)

    p = sub.add_parser("evaluate", help="evaluate held-out stations and write reports")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--report", required=True, type=Path, help="output directory")
    p.add_argument("--targets", type=_targets, default=list(Target))
    p.add_argument("--u-inf", type=float)

    p = sub.add_parser("perturb", help="perturb one Reynolds stress and print the envelope")
    p.add_argument("--k", required=True, type=float, help="turbulent kinetic energy")
    p.add_argument("--b", required=True, help="anisotropy components xx,yy,zz,xy,xz,yz")
    p.add_argument("--delta-b", type=float, default=1.0)
    p.add_argument("--targets", type=_targets, default=list(Target))
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--swap", action="store_true", help="swap the extreme eigenvectors")
    return parser


def cmd_synth(args):
    config = data.SynthConfig(
        profiles=args.profiles,
        points=args.points,
        law=args.law,
        noise=args.noise,
        seed=args.seed,
        cases=args.cases,
        u_inf=args.u_inf,
    )
    try:
        ps = data.synthesize(config)
    except InvalidConfig as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    try:
        data.write_dataset(ps, args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from None
    print(f"wrote {sum(len(p) for p in ps)} records in {len(ps)} profiles to {args.out}")
    return EXIT_OK


def _load(path, u_inf):
    try:
        return data.load_dataset(path, u_inf=u_inf)
    except (DatasetError, NonPositiveFreestream) as exc:
        raise CliError(f"{path}: {exc}", EXIT_DATASET) from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None


def _partitions(ps, fractions, seed):
    try:
        return data.split_profiles(ps, fractions, seed)
    except (TooFewProfiles, InvalidConfig) as exc:
        raise CliError(str(exc), EXIT_DATASET) from None


def cmd_train(args):
    try:
        config = TrainingConfig(
            learning_rate=args.lr,
            patience=args.patience,
            max_epochs=args.max_epochs,
            batch_size=args.batch_size,
            seed=args.seed,
            loss=args.loss,
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    ps = _load(args.data, args.u_inf)
    split = _partitions(ps, config.split_fractions, args.seed)
    x_train, y_train = data.windowed(ps, split.ids("train"))
    x_val, y_val = data.windowed(ps, split.ids("val"))
    try:
        std = data.Standardizer.fit(x_train, y_train)
        model, history = train(
            CnnModel(seed=args.seed),
            (std.apply_inputs(x_train), std.apply_targets(y_train)),
            (std.apply_inputs(x_val), std.apply_targets(y_val)),
            config,
        )
    except (DegenerateSpread, EmptyPartition) as exc:
        raise CliError(str(exc), EXIT_DATASET) from None

    history_path = args.history or args.out.with_name(args.out.stem + ".history.json")
    try:
        save_checkpoint(
            args.out,
            model,
            std.to_dict(),
            args.seed,
            split={"fractions": list(split.fractions), "seed": split.seed, "counts": split.counts()},
            training=config.to_dict(),
        )
        history_path.write_text(json.dumps(history.to_dict(), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write checkpoint: {exc}", EXIT_IO) from None
    print(
        f"epochs {history.epochs_run} (best {history.best_epoch}, stopped early: {history.stopped_early}); "
        f"final train {config.loss} {history.train_loss[-1]:.6g}, "
        f"best val {config.loss} {history.best_val_loss:.6g}; {param_count(model)} parameters"
    )
    return EXIT_OK


def cmd_evaluate(args):
    try:
        network, doc = load_checkpoint(args.model)
        standardizer = data.Standardizer.from_dict(doc["standardization"])
        split_doc = doc.get("split", {"fractions": [0.75, 0.05, 0.20], "seed": doc["seed"]})
    except (CheckpointError, KeyError, TypeError, ValueError) as exc:
        raise CliError(f"checkpoint error: {exc}", EXIT_CHECKPOINT) from None
    ps = _load(args.data, args.u_inf)
    split = _partitions(ps, split_doc["fractions"], split_doc["seed"])
    model = CorrectionModel(network, standardizer)
    reports = [
        evaluate_station(ps.get(pid), model, ps.u_inf[pid[0]], corners=args.targets)
        for pid in split.ids("test")
    ]
    try:
        summary = report(reports, args.report)
    except OSError as exc:
        raise CliError(f"cannot write report: {exc}", EXIT_IO) from None
    agg = summary["aggregate"]
    print(json.dumps(agg, indent=2))
    return EXIT_OK


def _tensor_json(r):
    return r.as_dict()


def cmd_perturb(args):
    try:
        b = SymTensor3.from_array([float(v) for v in args.b.split(",")])
    except ValueError as exc:
        raise CliError(f"--b: {exc}", EXIT_USAGE) from None
    if not args.k > 0.0 or abs(b.trace()) > 1e-9:
        raise CliError("need k > 0 and a traceless anisotropy tensor", EXIT_USAGE)
    if not args.amplitude > 0.0:
        raise CliError("--amplitude must be positive", EXIT_USAGE)
    if not args.targets:
        raise CliError("--targets must name at least one limiting state", EXIT_USAGE)
    r = stress_from_anisotropy(args.k, b)
    if not is_realizable(r):
        raise CliError("input stress is not realizable", EXIT_USAGE)
    mode = EigenvectorMode.SWAP_EXTREMES if args.swap else EigenvectorMode.KEEP
    try:
        perturbed = [(t, perturb(r, t, args.delta_b, args.amplitude, mode)) for t in args.targets]
    except InvalidDelta as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    env = bounds_of([r] + [m for _, m in perturbed])
    out = {
        "input": {"k": tke(r), "tensor": _tensor_json(r), "anisotropy": _tensor_json(anisotropy(r))},
        "delta_b": args.delta_b,
        "amplitude": args.amplitude,
        "eigenvector_mode": mode.value,
        "perturbed": [{"target": t.value, "k": tke(m), "tensor": _tensor_json(m)} for t, m in perturbed],
        "envelope": {
            "lower": _tensor_json(env.lower),
            "upper": _tensor_json(env.upper),
            "member_count": env.member_count,
        },
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "evaluate": cmd_evaluate, "perturb": cmd_perturb}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"mlepm {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
