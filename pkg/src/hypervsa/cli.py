"""Command-line entry point: ``hypervsa <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import analysis, expressivity, learn, rff
from .core import Family
from .encoding import Encoder, build_basis, quantize_features
from .errors import ConfigError, DataError, HyperVsaError
from .harness import synth
from .harness.config import ExperimentConfig, parse_config
from .harness.data import load_directory
from .harness.experiment import BASIS_STREAM, run_experiment, sha256, train_model
from .rng import SeededRng


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _family(name: str) -> Family:
    try:
        return Family.parse(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# commands


def cmd_init_basis(args) -> int:
    family = _family(args.family)
    rng = SeededRng(args.seed, BASIS_STREAM)
    if args.target:
        target = rff.SimilarityTarget.read(args.target)
        basis = rff.sample_correlated(target, args.dim, family, rng, args.threads)
    else:
        basis = build_basis(family, args.dim, args.mode, args.sigma, args.n_features, rng, args.threads, args.values)
    data = basis.to_bytes()
    Path(args.out).write_bytes(data)
    _emit({"basis": args.out, "family": family.name, "dim": args.dim, "entries": len(basis), "sha256": sha256(data)})
    return 0


def cmd_encode(args) -> int:
    basis = rff.CorrelatedBasis.load(args.basis)
    ds = load_directory(args.data, "train")
    if args.split == "test":
        ds = load_directory(args.data, "test", reference=ds)
    enc = Encoder(basis, ds.n_features).encode_batch(quantize_features(ds.features), args.threads)
    np.savez(args.out, data=enc.data, labels=ds.labels, dim=enc.dim, family=enc.family.name)
    _emit({"encoded": args.out, "rows": len(enc), "family": enc.family.name, "dim": enc.dim})
    return 0


def _experiment_from_args(args) -> ExperimentConfig:
    doc = {
        "dataset": {"path": args.data, "limit_train": args.limit_train, "limit_test": args.limit_test},
        "family": args.family,
        "paradigm": args.paradigm,
        "dim": args.dim,
        "basis": args.basis,
        "sigma": args.sigma,
        "seed": args.seed,
        "threads": args.threads,
        "train": {
            "lr": args.lr,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "beta": args.beta,
            "warm_start": args.warm_start,
            "optimizer": args.optimizer,
        },
    }
    return parse_config(doc)


def cmd_train(args) -> int:
    cfg = _experiment_from_args(args)
    family = _family(cfg.family)
    train = load_directory(cfg.dataset.path, "train").head(cfg.dataset.limit_train)
    basis = build_basis(family, cfg.dim, cfg.basis, cfg.sigma, train.n_features, SeededRng(cfg.seed, BASIS_STREAM), cfg.threads)
    enc = Encoder(basis, train.n_features).encode_batch(quantize_features(train.features), cfg.threads)
    model = train_model(cfg, family, enc, train.labels, train.n_classes)
    model_bytes = learn.save_model(model, args.out)
    basis_out = args.basis_out or args.out + ".basis"
    basis.save(basis_out)
    _emit({
        "model": args.out,
        "basis": basis_out,
        "train_accuracy": learn.evaluate(enc, train.labels, model),
        "model_sha256": sha256(model_bytes),
    })
    return 0


def cmd_eval(args) -> int:
    model = learn.load_model(args.model)
    train = load_directory(args.data, "train")
    test = load_directory(args.data, "test", reference=train).head(args.limit_test)
    basis_path = Path(args.basis_file or args.model + ".basis")
    if basis_path.exists():
        basis = rff.CorrelatedBasis.load(basis_path)
    else:
        basis = build_basis(model.family, model.dim, args.basis, args.sigma, test.n_features, SeededRng(model.seed, BASIS_STREAM), args.threads)
    if basis.family != model.family or basis.dim != model.dim:
        raise ConfigError("basis family/dim does not match the model")
    enc = Encoder(basis, test.n_features).encode_batch(quantize_features(test.features), args.threads)
    _emit({"model": args.model, "accuracy": learn.evaluate(enc, test.labels, model), "n_test": len(test.labels)})
    return 0


def cmd_run(args) -> int:
    record = run_experiment(args.config, args.output_dir)
    print(record.to_json())
    return 0


def cmd_synth_task(args) -> int:
    spec = synth.SyntheticTaskSpec(args.p, args.train, args.seed)
    if args.out:
        ds = synth.synth_task(spec)
        rows = np.column_stack([synth.symbols(ds), ds.labels])
        np.savetxt(args.out, rows, fmt="%d", delimiter=",")
    result = synth.simulate(spec, args.test, args.dim, tuple(args.families), args.threads)
    _emit(result)
    return 0


def cmd_expressivity_check(args) -> int:
    target = rff.SimilarityTarget.read(args.target)
    report = expressivity.check_binary_expressible(target, args.eps)
    print("FEASIBLE" if report.feasible else "INFEASIBLE")
    out = {"feasible": report.feasible, "note": report.certificate_note}
    if report.feasible:
        out["weights"] = [float(w) for w in report.weights]
        out["atoms"] = [list(a.pattern) for a in report.atoms]
        out["residual"] = report.residual
    _emit(out)
    return 0


def cmd_angle(args) -> int:
    out = {
        "k": args.k,
        "bundle_size": 2 * args.k + 1,
        "theory_degrees": expressivity.bundling_angle_theory(args.k),
        "pk": expressivity.pk(args.k),
    }
    if args.empirical:
        dim, trials = args.empirical
        out["empirical_degrees"] = expressivity.bundling_angle_empirical(args.k, dim, trials, args.seed, args.threads)
        out["dim"], out["trials"] = dim, trials
    _emit(out)
    return 0


def cmd_cdc(args) -> int:
    q = analysis.CdcQuery(args.n_features, args.dim, args.group_bits)
    _emit([d.as_dict() for d in analysis.cdc_all(q)])
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--paradigm", choices=("bundle", "sgd", "perceptron"), default="sgd")
    p.add_argument("--family", default="binary", help="binary or gN (e.g. g8)")
    p.add_argument("--dim", type=int, default=1000)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--beta", type=float, default=10.0, help="logit scale")
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--warm-start", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--basis", choices=("rff", "random"), default="rff")
    p.add_argument("--sigma", type=float, default=None, help="RBF bandwidth in level units (default 32*sqrt(N))")
    p.add_argument("--limit-train", type=int, default=None)
    p.add_argument("--limit-test", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypervsa", description=__doc__)
    parser.add_argument("--threads", type=int, default=None, help="worker threads (HYPERVSA_THREADS overrides)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-basis", help="build and save a basis")
    p.add_argument("--family", default="binary")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--mode", choices=("rff", "random"), default="rff")
    p.add_argument("--values", type=int, default=256, help="number of quantized levels")
    p.add_argument("--n-features", type=int, default=1, help="feature count used by the default bandwidth")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--target", help="similarity matrix text file; overrides --mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init_basis)

    p = sub.add_parser("encode", help="encode a dataset split with a saved basis")
    p.add_argument("--basis", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("train", "test"), default="train")
    p.add_argument("--out", required=True, help="output .npz")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", help="train a classifier on a dataset directory")
    _add_train_args(p)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--basis-out", default=None, help="where to save the basis (default <model>.basis)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on the test split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--basis-file", default=None, help="saved basis (default <model>.basis)")
    p.add_argument("--basis", choices=("rff", "random"), default="rff", help="regenerate the basis if no file exists")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--limit-test", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth-task", help="three-symbol task: bundling accuracy per family")
    p.add_argument("--p", type=float, default=0.05)
    p.add_argument("--train", type=int, default=100_000)
    p.add_argument("--test", type=int, default=20_000)
    p.add_argument("--dim", type=int, default=10_000)
    p.add_argument("--families", nargs="+", default=["binary", "g3"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="also write the training pairs as CSV (x,y)")
    p.set_defaults(func=cmd_synth_task)

    p = sub.add_parser("expressivity", help="expressivity tools")
    esub = p.add_subparsers(dest="expr_command", required=True)
    q = esub.add_parser("check", help="is a similarity matrix binary-expressible?")
    q.add_argument("--target", required=True)
    q.add_argument("--eps", type=float, default=0.0)
    q.set_defaults(func=cmd_expressivity_check)
    for parent in (esub, sub):
        q = parent.add_parser("angle", help="bundling angle for 2k+1 vectors")
        q.add_argument("--k", type=int, required=True)
        q.add_argument("--empirical", type=int, nargs=2, metavar=("D", "TRIALS"))
        q.add_argument("--seed", type=int, default=0)
        q.set_defaults(func=cmd_angle)

    p = sub.add_parser("cdc", help="circuit depth of the three classifiers")
    p.add_argument("--n-features", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--group-bits", type=int, default=3)
    p.set_defaults(func=cmd_cdc)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HyperVsaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except (FileNotFoundError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
