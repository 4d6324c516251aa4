"""Command-line front end: simulate, plan, overhead, analyze, layout.

Exit codes: 0 on success, 1 on runtime failure, 2 on configuration errors
(including malformed JSON and bad flags).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .analysis import equivalent_siso_afdm, equivalent_siso_otfs, min_rank_over_pairs
from .cdds import (
    AFDM,
    CDD,
    CDDS,
    DODD,
    MIMO,
    OTFS,
    SISO,
    check_non_overlap,
    overhead,
    plan_steps,
)
from .detect import get_alphabet
from .estimate import build_layout
from .harness import (
    ConfigError,
    _prepare,
    curve_to_csv,
    load_config,
    override_seed,
    run_ber,
)

SCHEMES = (SISO, MIMO, CDD, DODD, CDDS)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _parse_profile(text: str) -> frozenset:
    try:
        pairs = json.loads(text)
        return frozenset((float(k), int(l)) for k, l in pairs)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"profile must be JSON pairs like [[0,0],[-1,1]]: {e}") from e


def _cmd_simulate(args) -> str:
    cfg = override_seed(load_config(args.config), args.seed)
    curve = run_ber(cfg, workers=args.workers)
    return curve_to_csv(curve)


def _cmd_plan(args) -> str:
    profile = _parse_profile(args.profile)
    k_window = l_window = None
    if args.window is not None:
        kmin, kmax, lmin, lmax = args.window
        k_window, l_window = (kmin, kmax), (lmin, lmax)
    result = plan_steps(
        profile,
        args.nt,
        args.waveform,
        args.n,
        delay_span=args.delay_span,
        k_window=k_window,
        l_window=l_window,
    )
    lines = [
        "steps: " + " ".join(f"({s.k_shift},{s.l_shift})" for s in result.plan.steps),
        f"feasible: {str(result.feasible).lower()}",
        f"k_shift_extent: {result.k_shift_extent}",
        f"l_shift_extent: {result.l_shift_extent}",
        f"overhead_cells: {result.overhead_cells}",
    ]
    return "\n".join(lines)


def _cmd_overhead(args) -> str:
    lshift = args.lshift if args.lshift is not None else 1
    kshift = args.kshift if args.kshift is not None else 1
    if args.sweep:
        cols = [f"{w}_{s}" for w in (AFDM, OTFS) for s in SCHEMES]
        lines = ["nt," + ",".join(cols)]
        for nt in range(1, args.nt_max + 1):
            row = [str(nt)]
            for w in (AFDM, OTFS):
                for s in SCHEMES:
                    row.append(
                        str(
                            overhead(
                                w, s, args.lmax, args.kmax, nt,
                                l_shift_max=lshift, k_shift_max=kshift,
                            )
                        )
                    )
            lines.append(",".join(row))
        return "\n".join(lines)
    try:
        cells = overhead(
            args.waveform, args.scheme, args.lmax, args.kmax, args.nt,
            l_shift_max=args.lshift, k_shift_max=args.kshift,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return str(cells)


def _cmd_analyze(args) -> str:
    cfg = override_seed(load_config(args.config), args.seed)
    ctx = _prepare(cfg)
    profile = frozenset(cfg.channel.support)
    if cfg.waveform == AFDM:
        sys_eq = equivalent_siso_afdm(profile, ctx.plan, ctx.wcfg, kind=cfg.cdds_kind)
    else:
        sys_eq = equivalent_siso_otfs(profile, ctx.plan, ctx.wcfg, kind=cfg.cdds_kind)
    report = min_rank_over_pairs(
        sys_eq, get_alphabet(cfg.alphabet), cfg.n, seed=cfg.master_seed
    )
    lines = [
        f"theta_min: {report.theta_min}",
        f"pairs_checked: {report.pairs_checked}",
        f"max_order: {ctx.plan.n_t * len(profile)}",
        f"non_overlapping: {str(check_non_overlap(profile, ctx.plan, cfg.n)).lower()}",
        "steps: " + " ".join(f"({s.k_shift},{s.l_shift})" for s in ctx.plan.steps),
        "argmin_diff: " + " ".join(f"{v:g}" for v in np.real_if_close(report.argmin_diff)),
    ]
    return "\n".join(lines)


def _cmd_layout(args) -> str:
    from .afdm import AfdmConfig, optimal_c1
    from .otfs import OtfsConfig

    if args.waveform == AFDM:
        if args.n is None:
            raise ConfigError("missing key 'n' (frame size)")
        c1, _ = optimal_c1(args.kmax, args.kshift, args.n)
        wcfg = AfdmConfig(args.n, c1)
    else:
        if args.grid is None:
            raise ConfigError("missing key 'grid' (K L)")
        wcfg = OtfsConfig(*args.grid)
    layout = build_layout(
        args.waveform, args.scheme, wcfg, args.lmax, args.kmax,
        n_t=args.nt, l_shift_max=args.lshift, k_shift_max=args.kshift,
    )
    lines = [
        f"frame: {layout.n}",
        f"overhead_cells: {layout.overhead_cells}",
        "pilot: " + " ".join(map(str, layout.pilot_cells)),
        "guard: " + " ".join(map(str, layout.guard_cells)),
        "data: " + " ".join(map(str, layout.data_cells)),
    ]
    return "\n".join(lines)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override master_seed")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("--out", default=None, help="write output to a file")

    p = argparse.ArgumentParser(prog="ddwave", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", parents=[common], help="run a BER experiment (CSV)")
    ps.add_argument("config", help="JSON config path or literal JSON")
    ps.set_defaults(fn=_cmd_simulate)

    pp = sub.add_parser("plan", parents=[common], help="search for shift steps")
    pp.add_argument("profile", help='JSON (doppler, delay) pairs, e.g. "[[0,0],[-1,1]]"')
    pp.add_argument("--nt", type=int, required=True)
    pp.add_argument("--waveform", choices=(AFDM, OTFS), default=AFDM)
    pp.add_argument("--n", type=int, required=True, help="frame size")
    pp.add_argument("--delay-span", type=int, default=None, help="delay dimension cap")
    pp.add_argument(
        "--window", type=int, nargs=4, metavar=("KMIN", "KMAX", "LMIN", "LMAX"), default=None
    )
    pp.set_defaults(fn=_cmd_plan)

    po = sub.add_parser("overhead", parents=[common], help="pilot+guard cell counts")
    po.add_argument("--waveform", choices=(AFDM, OTFS), default=AFDM)
    po.add_argument("--scheme", choices=SCHEMES, default=SISO)
    po.add_argument("--lmax", type=int, required=True)
    po.add_argument("--kmax", type=int, required=True)
    po.add_argument("--nt", type=int, default=1)
    po.add_argument("--lshift", type=int, default=None, help="largest delay shift")
    po.add_argument("--kshift", type=int, default=None, help="largest Doppler shift")
    po.add_argument("--sweep", action="store_true", help="CSV over nt = 1..nt-max")
    po.add_argument("--nt-max", type=int, default=8)
    po.set_defaults(fn=_cmd_overhead)

    pa = sub.add_parser("analyze", parents=[common], help="diversity rank report")
    pa.add_argument("config", help="JSON config path or literal JSON (fixed profile)")
    pa.set_defaults(fn=_cmd_analyze)

    pl = sub.add_parser("layout", parents=[common], help="pilot-guard-data index map")
    pl.add_argument("--waveform", choices=(AFDM, OTFS), default=AFDM)
    pl.add_argument("--scheme", choices=(SISO, MIMO, CDDS), default=SISO)
    pl.add_argument("--n", type=int, default=None, help="frame size (chirp waveform)")
    pl.add_argument("--grid", type=int, nargs=2, metavar=("K", "L"), default=None)
    pl.add_argument("--lmax", type=int, required=True)
    pl.add_argument("--kmax", type=int, required=True)
    pl.add_argument("--nt", type=int, default=1)
    pl.add_argument("--lshift", type=int, default=0)
    pl.add_argument("--kshift", type=int, default=0)
    pl.set_defaults(fn=_cmd_layout)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _emit(args.fn(args), args.out)
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
