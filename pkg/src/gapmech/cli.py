"""Command-line entry point: ``gapmech {datagen,theory,train,eval,sweep}``.

Exit codes: 0 on success, 2 for usage errors (bad flags or parameters), 1 for
runtime failures (unreadable files, malformed documents, training errors).
Diagnostics go to stderr; stdout carries only data and output paths.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import binary, datagen, gaussian
from .learning import train as tr
from .probability import (
    BernoulliXorModel,
    BinaryMechanism,
    GaussMixture,
    GaussPair,
    JointBinary,
    ValidationError,
    binary_map_accuracy,
    expected_hamming_distortion,
    gauss_map_accuracy_general,
    mechanism_joint,
    mutual_information,
)
from .records import (
    GridError,
    TradeoffPoint,
    load_mechanism,
    mechanism_to_dict,
    parse_d_grid,
    write_tradeoff_csv,
)
from .simplex import LpError

THEORY_MODELS = ("binary-pdd", "binary-pdi", "gauss-pdi", "gauss-shift", "gauss-shift-noise", "gauss-full")


class UsageError(Exception):
    pass


# --- parameter handling ---------------------------------------------------------

def _add_binary_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("binary model")
    g.add_argument("--p", type=float, help="P(X=1)")
    g.add_argument("--q", type=float, help="flip probability of the noise bit")


def _add_gauss_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("gaussian model")
    g.add_argument("--ptilde", type=float, help="P(Y=1)")
    g.add_argument("--mu", type=float, help="class mean magnitude")
    g.add_argument("--var0", type=float, default=1.0)
    g.add_argument("--var1", type=float, default=1.0)


def _binary_model(args) -> BernoulliXorModel:
    if args.p is None or args.q is None:
        raise UsageError("binary model needs --p and --q")
    try:
        return BernoulliXorModel(args.p, args.q)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None


def _gauss_model(args) -> GaussMixture:
    if args.ptilde is None or args.mu is None:
        raise UsageError("gaussian model needs --ptilde and --mu")
    try:
        return GaussMixture(args.ptilde, args.mu, args.var0, args.var1)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None


def _has_binary(args) -> bool:
    return args.p is not None or args.q is not None


def _has_gauss(args) -> bool:
    return args.ptilde is not None or args.mu is not None


def _grid(text: str) -> list[float]:
    try:
        return parse_d_grid(text)
    except GridError as exc:
        raise UsageError(str(exc)) from None


def _ms_since(t0: float) -> float:
    return (time.perf_counter() - t0) * 1e3


# --- evaluation -------------------------------------------------------------------

def evaluate_binary(joint: JointBinary, mech: BinaryMechanism) -> tuple[float, float, float]:
    """``(map_accuracy, mi_nats, distortion)`` of a binary mechanism under ``joint``."""
    released = mechanism_joint(joint, mech)
    return binary_map_accuracy(released), mutual_information(released), expected_hamming_distortion(joint, mech)


def empirical_gauss_pair(ds: datagen.Dataset) -> GaussPair:
    y1 = ds.y == 1
    if y1.all() or not y1.any():
        raise ValidationError("dataset needs both labels to fit class-conditional Gaussians")
    x0, x1 = ds.x[~y1], ds.x[y1]
    return GaussPair(float(y1.mean()), float(x0.mean()), float(x1.mean()), float(x0.var()), float(x1.var()))


def theory_point(model_name: str, model, D: float, grid_n: int = 51, objective: str = "map") -> TradeoffPoint:
    t0 = time.perf_counter()
    mi = None
    if objective == "mi":
        if not model_name.startswith("binary"):
            raise UsageError("--objective mi applies to binary models only")
        kind = "PDD" if model_name == "binary-pdd" else "PDI"
        mi, mech = binary.min_mi_mechanism(model.joint(), D, kind)
        acc, _, _ = evaluate_binary(model.joint(), mech)
    elif model_name == "binary-pdd":
        sol = binary.optimal_pdd(model.joint(), D)
        mech = sol.mechanism
        _, mi, _ = evaluate_binary(model.joint(), mech)
        acc = sol.accuracy
    elif model_name == "binary-pdi":
        sol = binary.theorem1_pdi(model.p, model.q, D)
        mech = sol.witness
        _, mi, _ = evaluate_binary(model.joint(), mech)
        acc = sol.accuracy
    else:
        solver = {
            "gauss-pdi": gaussian.theorem2_pdi,
            "gauss-shift": gaussian.theorem3_pdd_shift,
            "gauss-shift-noise": lambda m, d: gaussian.theorem4_shift_plus_noise(m, d),
            "gauss-full": lambda m, d: gaussian.pdd_full_grid_search(m, d, grid_n=grid_n)[0],
        }[model_name]
        sol = solver(model, D)
        mech, acc = sol.mechanism, sol.accuracy
    return TradeoffPoint(D=D, source="theory", map_accuracy=float(acc), mechanism=mech, mi_nats=mi, elapsed_ms=_ms_since(t0))


# --- commands -----------------------------------------------------------------------

def cmd_datagen(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    if args.model == "binary":
        ds = datagen.gen_binary(_binary_model(args), args.n, args.seed)
    else:
        ds = datagen.gen_gauss(_gauss_model(args), args.n, args.seed)
    datagen.write_csv(ds, args.out)
    print(len(ds))
    return 0


def cmd_theory(args) -> int:
    grid = _grid(args.D_grid)
    model = _binary_model(args) if args.model.startswith("binary") else _gauss_model(args)
    if args.model.startswith("binary") and grid[-1] > 1.0:
        raise UsageError("binary budgets must lie in [0, 1]")
    if args.model in ("gauss-pdi", "gauss-shift", "gauss-shift-noise") and not model.equal_variance:
        raise UsageError(f"{args.model} needs equal class variances; use gauss-full")
    points = [theory_point(args.model, model, D, args.grid_n, args.objective) for D in grid]
    write_tradeoff_csv(points, args.out)
    if args.json:
        side = {"command": "theory", "model": args.model, "params": asdict(model), "grid_n": args.grid_n,
                "objective": args.objective,
                "points": [{"D": p.D, "map_accuracy": p.map_accuracy, "mi_nats": p.mi_nats,
                            "mechanism": mechanism_to_dict(p.mechanism)} for p in points]}
        Path(args.json).write_text(json.dumps(side, indent=2) + "\n", encoding="utf-8")
    print(args.out)
    return 0


def _train_config(args, D: float, seed: int) -> tr.TrainConfig:
    try:
        return tr.TrainConfig(
            D=D,
            learning_rate=args.lr,
            minibatch=args.minibatch,
            adversary_epochs_k=args.k,
            outer_iters=args.iters,
            constraint_mode=args.constraint,
            rho0=args.rho0,
            rho_growth=args.rho_growth,
            rho_max=args.rho_max,
            lambda0=args.lambda0,
            seed=seed,
            loss=args.loss,
            alpha=args.alpha,
            average_tail=args.average_tail,
        )
    except ValidationError as exc:
        raise UsageError(str(exc)) from None


def _add_train_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--constraint", choices=(tr.PENALTY, tr.AUGMENTED_LAGRANGIAN), default=tr.PENALTY)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--iters", type=int, default=10_000, help="outer iterations")
    g.add_argument("--lr", type=float, default=0.01)
    g.add_argument("--minibatch", type=int, default=200)
    g.add_argument("--k", type=int, default=5, help="adversary steps per privatizer step")
    g.add_argument("--loss", choices=("xe", "alpha"), default="xe")
    g.add_argument("--alpha", type=float)
    g.add_argument("--rho0", type=float, default=1.0)
    g.add_argument("--rho-growth", type=float)
    g.add_argument("--rho-max", type=float)
    g.add_argument("--lambda0", type=float, default=0.0)
    g.add_argument("--average-tail", type=float, default=0.5)


@dataclass
class _Evaluator:
    """Exact MAP/MI evaluation of learned mechanisms under a fixed reference law."""

    joint: JointBinary | None = None
    model: GaussMixture | None = None
    pair: GaussPair | None = None

    def __call__(self, result: tr.TrainResult) -> tuple[object, float, float | None]:
        if result.model_kind == tr.GAUSS:
            mech = tr.gauss_mechanism_from(result)
            p = result.privatizer
            g0, g1 = float(p["gamma0_raw"]) ** 2, float(p["gamma1_raw"]) ** 2
            base = self.model.as_pair() if self.model is not None else self.pair
            released = GaussPair(
                base.prior1,
                base.mean0 + float(p["beta0"]),
                base.mean1 - float(p["beta1"]),
                base.var0 + g0**2,
                base.var1 + g1**2,
            )
            return mech, gauss_map_accuracy_general(released), None
        mech = tr.binary_mechanism_from(result)
        acc, mi, _ = evaluate_binary(self.joint, mech)
        return mech, acc, mi


def _evaluator_for(args, ds: datagen.Dataset, model_kind: str) -> tuple[_Evaluator, str]:
    if model_kind == tr.GAUSS:
        if _has_gauss(args):
            return _Evaluator(model=_gauss_model(args)), "model"
        return _Evaluator(pair=empirical_gauss_pair(ds)), "empirical"
    if _has_binary(args):
        return _Evaluator(joint=_binary_model(args).joint()), "model"
    return _Evaluator(joint=JointBinary.from_array(ds.empirical_joint())), "empirical"


def _load_dataset(path: str, model_kind: str) -> datagen.Dataset:
    kind = datagen.GAUSSIAN if model_kind == tr.GAUSS else datagen.BINARY
    ds = datagen.read_csv(path)
    if ds.kind != kind:
        raise ValidationError(f"{path} holds a {ds.kind} dataset but model {model_kind!r} needs {kind} data")
    return ds


def cmd_train(args) -> int:
    if args.D < 0:
        raise UsageError("--D must be nonnegative")
    cfg = _train_config(args, args.D, args.seed)
    ds = _load_dataset(args.dataset, args.model)
    evaluate, reference = _evaluator_for(args, ds, args.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    result = tr.train_gap(ds, args.model, cfg)
    elapsed = _ms_since(t0)
    mech, acc, mi = evaluate(result)
    point = TradeoffPoint(D=args.D, source="trained", map_accuracy=acc, mechanism=mech, mi_nats=mi,
                          elapsed_ms=elapsed, seed=args.seed)

    paths = {
        "mechanism": out / "mechanism.json",
        "history": out / "history.csv",
        "tradeoff": out / "tradeoff.csv",
        "record": out / "run.json",
    }
    paths["mechanism"].write_text(json.dumps(mechanism_to_dict(mech), indent=2) + "\n", encoding="utf-8")
    result.history.write_csv(paths["history"])
    write_tradeoff_csv([point], paths["tradeoff"])
    record = {
        "command": "train",
        "model": args.model,
        "dataset": {"path": str(args.dataset), "sha256": ds.content_hash(), "rows": len(ds)},
        "config": result.config_dict(),
        "iterations": result.iterations,
        "privatizer": {k: np.asarray(v).tolist() for k, v in result.privatizer.items()},
        "evaluation": {
            "reference": reference,
            "map_accuracy": acc,
            "mi_nats": mi,
            "distortion": tr.full_distortion(ds, result),
        },
        "elapsed_ms": elapsed,
    }
    paths["record"].write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    for p in paths.values():
        print(p)
    return 0


def cmd_eval(args) -> int:
    mech = load_mechanism(args.mechanism)
    t0 = time.perf_counter()
    if isinstance(mech, BinaryMechanism):
        joint = _binary_model(args).joint()
        acc, mi, dist = evaluate_binary(joint, mech)
    else:
        model = _gauss_model(args)
        acc, mi, dist = mech.map_accuracy(model), None, mech.distortion(model.ptilde)
    D = dist if args.D is None else args.D
    point = TradeoffPoint(D=D, source=args.source, map_accuracy=acc, mechanism=mech, mi_nats=mi,
                          elapsed_ms=_ms_since(t0))
    if args.out:
        write_tradeoff_csv([point], args.out, append=True)
    summary = {"map_accuracy": acc, "distortion": dist, "mi_nats": mi}
    if args.bits and mi is not None:
        summary["mi_bits"] = mi / math.log(2)
    print(json.dumps(summary))
    return 0


def _sweep_point(task) -> TradeoffPoint:
    ds, model_kind, cfg, evaluate = task
    t0 = time.perf_counter()
    result = tr.train_gap(ds, model_kind, cfg)
    mech, acc, mi = evaluate(result)
    return TradeoffPoint(D=cfg.D, source="trained", map_accuracy=acc, mechanism=mech, mi_nats=mi,
                         elapsed_ms=_ms_since(t0), seed=cfg.seed)


def cmd_sweep(args) -> int:
    grid = _grid(args.D_grid)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.model == tr.GAUSS:
        model = _gauss_model(args)
        theory_name = "gauss-full"
    else:
        model = _binary_model(args)
        theory_name = args.model
        if grid[-1] > 1.0:
            raise UsageError("binary budgets must lie in [0, 1]")
    if args.dataset:
        ds = _load_dataset(args.dataset, args.model)
    elif args.model == tr.GAUSS:
        ds = datagen.gen_gauss(model, args.n, args.data_seed)
    else:
        ds = datagen.gen_binary(model, args.n, args.data_seed)
    evaluate = _Evaluator(model=model) if args.model == tr.GAUSS else _Evaluator(joint=model.joint())

    # per-point seeds keep each run reproducible whatever the scheduling
    tasks = [(ds, args.model, _train_config(args, D, args.seed ^ i), evaluate) for i, D in enumerate(grid)]
    points = [theory_point(theory_name, model, D, args.grid_n) for D in grid]
    if args.jobs == 1:
        points += [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            points += list(pool.map(_sweep_point, tasks))
    points.sort(key=lambda p: (p.D, p.source))
    write_tradeoff_csv(points, args.out)
    print(args.out)
    return 0


# --- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapmech", description="Privatization mechanisms for adversarial privacy games.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="generate a synthetic dataset")
    p.add_argument("--model", choices=("binary", "gauss"), required=True)
    _add_binary_params(p)
    _add_gauss_params(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("theory", help="optimal mechanisms over a grid of budgets")
    p.add_argument("--model", choices=THEORY_MODELS, required=True)
    _add_binary_params(p)
    _add_gauss_params(p)
    p.add_argument("--D-grid", dest="D_grid", required=True, help="start:end:step, end inclusive")
    p.add_argument("--grid-n", type=int, default=51, help="cube lattice size for gauss-full")
    p.add_argument("--objective", choices=("map", "mi"), default="map",
                   help="binary models: minimise MAP accuracy or mutual information")
    p.add_argument("--out", required=True, help="tradeoff CSV")
    p.add_argument("--json", help="optional JSON sidecar")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("train", help="learn a privatizer against an adversary")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", choices=tr.MODEL_KINDS, required=True)
    p.add_argument("--D", type=float, required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_train_options(p)
    _add_binary_params(p)
    _add_gauss_params(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="exact MAP accuracy (and MI) of a mechanism")
    p.add_argument("--mechanism", required=True, help="mechanism JSON")
    _add_binary_params(p)
    _add_gauss_params(p)
    p.add_argument("--D", type=float, help="budget to record (default: the mechanism's distortion)")
    p.add_argument("--source", choices=("theory", "trained"), default="theory")
    p.add_argument("--bits", action="store_true", help="also report MI in bits")
    p.add_argument("--out", help="tradeoff CSV to append to")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="theory and trained accuracy over a budget grid")
    p.add_argument("--mode", choices=("theory-vs-trained",), default="theory-vs-trained")
    p.add_argument("--model", choices=tr.MODEL_KINDS, required=True)
    _add_binary_params(p)
    _add_gauss_params(p)
    p.add_argument("--D-grid", dest="D_grid", required=True)
    p.add_argument("--dataset", help="training data (default: generated from the model)")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--grid-n", type=int, default=51)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    _add_train_options(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gapmech: error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, LpError, tr.TrainingDivergedError, OSError) as exc:
        print(f"gapmech: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
