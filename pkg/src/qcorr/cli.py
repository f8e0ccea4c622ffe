"""Command-line interface.

Every command resolves its full configuration first and echoes it into the
output (a ``config`` key in JSON, ``#`` header lines in CSV), so any output
file can be regenerated exactly. Exit codes: 0 success, 1 internal error or
failed property check, 2 invalid input, 3 domain precondition violated.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (
    NotLocallyProducibleError,
    identity_channel,
    l_monotonicity_trial,
    phi_channel,
    random_channel,
    save_channel,
    synthesize_local_creation,
)
from .correlation import analyze, witness_report
from .discord import DEFAULT_OPTIONS, discord, discord_sweep, sweep_csv
from .geometry import (
    DISCORD_TOL,
    classify,
    counting_report,
    f_monotonicity_check,
    monte_carlo_regions,
    trial_seeds,
    worker_count,
)
from .linalg import RANK_REL_TOL, max_entry_norm
from .states import (
    StateValidationError,
    assemble,
    bell_state,
    load_ensemble,
    load_state,
    random_state,
    rho_c,
    rho_l,
    rho_l_ensemble,
    save_state,
    schmidt_rank2_pure,
    werner_state,
)

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3


class InputError(Exception):
    pass


def _number(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"not a number: {text!r}") from None


def resolve_state(spec: str):
    """Builtin literal (``werner:z``, ``rho_l``, ``rho_c``, ``bell``,
    ``schmidt2:d``) or a path to a state JSON file."""
    name, _, arg = spec.partition(":")
    if name == "werner" and arg:
        return werner_state(_number(arg))
    if name == "schmidt2" and arg:
        try:
            return schmidt_rank2_pure(int(arg))
        except ValueError:
            raise InputError(f"bad dimension in {spec!r}") from None
    builtins = {"rho_l": rho_l, "rho_c": rho_c, "bell": bell_state}
    if name in builtins and not arg:
        return builtins[name]()
    path = Path(spec)
    if not path.exists():
        raise InputError(f"{spec!r} is neither a builtin state nor an existing file")
    return load_state(path)


def resolve_ensemble(spec: str):
    if spec == "rho_l":
        return rho_l_ensemble()
    path = Path(spec)
    if not path.exists():
        raise InputError(f"{spec!r} is neither a builtin ensemble nor an existing file")
    return load_ensemble(path)


def _config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg["version"] = __version__
    cfg["threads"] = worker_count()
    return cfg


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False, default=_json_default)
    print(text)
    if out:
        Path(out).write_text(text + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit_csv(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- commands -----------------------------------------------------------------

def cmd_rank(args) -> int:
    rho = resolve_state(args.state)
    an = analyze(rho, args.tol_rank)
    report = witness_report(rho, args.tol_rank, analysis=an)
    result = {"dim_a": rho.dim_a, "dim_b": rho.dim_b, **report.to_dict()}
    _emit_json({"config": _config(args), "result": result}, args.out)
    return EXIT_OK


def cmd_discord(args) -> int:
    rho = resolve_state(args.state)
    res = discord(rho, args.subsystem, DEFAULT_OPTIONS)
    payload = {"config": _config(args), "result": res.to_dict()}
    if not args.trace:
        payload["result"].pop("optimizer_trace")
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_create_local(args) -> int:
    if not args.out:
        raise InputError("create-local needs --out DIR")
    target = resolve_ensemble(args.ensemble)
    creation = synthesize_local_creation(target)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    produced = creation.output()
    wanted = assemble(target)
    residual = max_entry_norm(produced.matrix - wanted.matrix)
    save_state(creation.seed, out_dir / "seed.json")
    save_state(produced, out_dir / "output.json")
    save_state(wanted, out_dir / "target.json")
    save_channel(creation.channel_a, out_dir / "channel_a.json")
    save_channel(creation.channel_b, out_dir / "channel_b.json")
    seed_wit = witness_report(creation.seed, args.tol_rank)
    out_wit = witness_report(produced, args.tol_rank)
    verification = {
        "config": _config(args),
        "result": {
            "terms": target.s,
            "d_min": min(target.dim_a, target.dim_b),
            "reassembly_residual": residual,
            "reassembly_ok": residual <= 1e-9,
            "seed_zero_discord_a": seed_wit.zero_discord_a,
            "seed_zero_discord_b": seed_wit.zero_discord_b,
            "output_rank_l": out_wit.rank_l,
            "output_zero_discord_a": out_wit.zero_discord_a,
            "output_zero_discord_b": out_wit.zero_discord_b,
            "files": ["seed.json", "channel_a.json", "channel_b.json", "output.json", "target.json"],
        },
    }
    _emit_json(verification, str(out_dir / "verification.json"))
    return EXIT_OK if residual <= 1e-9 else EXIT_INTERNAL


def cmd_classify(args) -> int:
    if args.random is None:
        if args.state is None:
            raise InputError("classify needs --state or --random N")
        rho = resolve_state(args.state)
        ens = resolve_ensemble(args.ensemble) if args.ensemble else None
        rep = classify(rho, ens, args.state, args.tol_rank, args.tol_discord)
        _emit_json({"config": _config(args), "result": rep.to_dict()}, args.out)
        return EXIT_OK
    if args.dims is None:
        raise InputError("--random needs --dims A B")
    da, db = args.dims
    mc = monte_carlo_regions(
        da, db, args.random, args.seed, args.ensemble_terms, args.tol_rank, args.tol_discord
    )
    cfg = _config(args)
    if args.out:
        _emit_csv(mc.to_csv([f"config: {json.dumps(cfg, sort_keys=True)}"]), args.out)
    _emit_json({"config": cfg, "result": mc.summary()}, args.summary)
    return EXIT_OK


def _z_grid(start: Fraction, stop: Fraction, step: Fraction) -> list[float]:
    if step <= 0:
        raise InputError("--step must be positive")
    zs, k = [], 0
    while start + k * step <= stop:
        zs.append(float(start + k * step))
        k += 1
    return zs


def cmd_sweep(args) -> int:
    try:
        start, stop, step = Fraction(args.start), Fraction(args.stop), Fraction(args.step)
    except (ValueError, ZeroDivisionError):
        raise InputError("--start/--stop/--step must be numbers or fractions like 1/30") from None
    zs = _z_grid(start, stop, step)
    rows = discord_sweep(args.family, zs, args.subsystem, DEFAULT_OPTIONS, args.tol_rank)
    header = [f"config: {json.dumps(_config(args), sort_keys=True)}"]
    _emit_csv(sweep_csv(rows, header), args.out)
    return EXIT_OK


def cmd_monotonicity(args) -> int:
    da, db = args.dims
    seeds = trial_seeds(args.seed, args.samples)
    violations, pairs = 0, []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        rho = random_state(da, db, rng)
        side = "A" if rng.integers(2) == 0 else "B"
        dim = da if side == "A" else db
        if args.channel == "identity":
            ch = identity_channel(dim)
        elif args.channel == "phi":
            if dim != 2:
                raise InputError("--channel phi needs a qubit on the acted-on side")
            ch = phi_channel()
        else:
            ch = random_channel(dim, int(rng.integers(1, dim * dim + 1)), rng)
        trial = l_monotonicity_trial(rho, ch, side, args.tol_rank)
        violations += not trial.ok
        pairs.append((trial.l_before, trial.l_after))
    phi_check = l_monotonicity_trial(rho_c(), phi_channel(), "A", args.tol_rank)
    result = {
        "trials": args.samples,
        "violations": violations,
        "unchanged": sum(b == a for b, a in pairs),
        "decreased": sum(a < b for b, a in pairs),
        "reference_phi_on_rho_c": [phi_check.l_before, phi_check.l_after],
    }
    _emit_json({"config": _config(args), "result": result}, args.out)
    if violations:
        print(f"error: {violations} trial(s) increased the correlation rank", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_count(args) -> int:
    da, db = args.dims
    rep = counting_report(da, db, args.s)
    result = dict(vars(rep))
    if args.check_max_dim:
        result["f_monotone_up_to"] = args.check_max_dim
        result["f_monotone"] = f_monotonicity_check(args.check_max_dim)
    _emit_json({"config": _config(args), "result": result}, args.out)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, seed: bool = False) -> None:
    p.add_argument("--out", help="output file (directory for create-local)")
    p.add_argument("--tol-rank", type=float, default=RANK_REL_TOL, help="relative singular-value cutoff")
    p.add_argument("--tol-discord", type=float, default=DISCORD_TOL, help="discord zero threshold")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcorr", description="Correlation rank, quantum discord and local creation of discord."
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="correlation rank L, singular values, witness flags")
    p.add_argument("--state", required=True)
    _common(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("discord", help="numerical quantum discord")
    p.add_argument("--state", required=True)
    p.add_argument("--subsystem", choices=["A", "B"], default="A")
    p.add_argument("--trace", action="store_true", help="include the optimizer trace")
    _common(p)
    p.set_defaults(func=cmd_discord)

    p = sub.add_parser("create-local", help="classical seed and local channels for an ensemble")
    p.add_argument("--ensemble", required=True, help="ensemble JSON file or 'rho_l'")
    _common(p)
    p.set_defaults(func=cmd_create_local)

    p = sub.add_parser("classify", help="discord/rank region of one state or a random batch")
    p.add_argument("--state")
    p.add_argument("--ensemble", help="decomposition of --state with at most d_min terms")
    p.add_argument("--random", type=int, metavar="N")
    p.add_argument("--samples", dest="random", type=int, help=argparse.SUPPRESS)
    p.add_argument("--dims", type=int, nargs=2, metavar=("DA", "DB"))
    p.add_argument("--ensemble-terms", type=int, help="sample assembled random ensembles instead")
    p.add_argument("--summary", help="also write the summary JSON here")
    _common(p, seed=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="discord and rank along a state family")
    p.add_argument("--family", choices=["werner"], default="werner")
    p.add_argument("--start", default="0")
    p.add_argument("--stop", default="1")
    p.add_argument("--step", default="1/30")
    p.add_argument("--subsystem", choices=["A", "B"], default="A")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("monotonicity", help="random local channels never raise L")
    p.add_argument("--samples", "--trials", dest="samples", type=int, default=5000)
    p.add_argument("--dims", type=int, nargs=2, default=[2, 2], metavar=("DA", "DB"))
    p.add_argument("--channel", choices=["random", "identity", "phi"], default="random")
    _common(p, seed=True)
    p.set_defaults(func=cmd_monotonicity)

    p = sub.add_parser("count", help="parameter counting for s-term product ensembles")
    p.add_argument("--dims", type=int, nargs=2, required=True, metavar=("DA", "DB"))
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--check-max-dim", type=int)
    _common(p)
    p.set_defaults(func=cmd_count)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NotLocallyProducibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InputError, StateValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
