"""Command line front end.

    cda-relay construct  --tower sr-m3 --B 2 --r 0.5 --snr-db 20
    cda-relay nvd-check  --tower sr-m1 --M 2
    cda-relay outage     --model block-fading --n_t 1 --n_r 1 --B 1 \
                         --r 0.5 --snr-db-grid 10 20 30 --trials 100000 \
                         --seed 7 --out curve.csv
    cda-relay simulate   --nodes 3 --B 3 --r 0.25 --tower sr-m3 \
                         --snr-db-grid 20 24 28 --trials 200000 --seed 7 \
                         --out ddf.csv
    cda-relay dmt        --config experiment.json --window 20 28

Every subcommand also accepts --config pointing at a JSON experiment
file; explicit flags override the file's values.  Exit codes: 0 on
success, 2 for configuration or data problems, 3 when a desk-scale
resource guard refuses the request.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import InsufficientDataError, ResourceLimitError, ValidationError
from .fieldtower import CATALOG_IDS, tower_from_catalog
from .sim import (
    CODEBOOK_GUARD,
    ExperimentConfig,
    compare_exponents,
    fit_slope,
    run_curve,
)
from .stcode import enumerate_codebook, make_code_params, nvd_min

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cda-relay",
        description="Space-time code construction and relay-channel simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="JSON experiment file; flags override it")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="CSV output path")

    p = sub.add_parser("construct", help="resolve code parameters for one SNR")
    p.add_argument("--config", default=None)
    p.add_argument("--tower", choices=CATALOG_IDS)
    p.add_argument("--B", type=int, default=1)
    p.add_argument("--n_t", type=int, default=None)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--snr-db", type=float, default=20.0)
    p.add_argument("--M-policy", dest="m_policy", default="fixed:2")
    p.add_argument("--theta-mode", default="normalized")
    p.add_argument("--codeword", type=int, default=None,
                   help="also print this codeword's complex entries")
    p.add_argument("--restrict", type=int, default=None)

    p = sub.add_parser("nvd-check", help="minimum determinant certificate")
    p.add_argument("--config", default=None)
    p.add_argument("--tower", choices=CATALOG_IDS)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--mode", choices=("auto", "exhaustive", "restricted"),
                   default="auto")
    p.add_argument("--random-pairs", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("outage", help="Monte Carlo outage curve")
    add_config(p)
    p.add_argument("--model", choices=("block-fading", "parallel", "ofdm"),
                   default=None)
    p.add_argument("--n_t", type=int, default=None)
    p.add_argument("--n_r", type=int, default=None)
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--snr-db-grid", type=float, nargs="+", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--distribution", default=None)
    p.add_argument("--q-tones", type=int, default=None)
    p.add_argument("--l-taps", type=int, default=None)

    p = sub.add_parser("simulate", help="coded error curve (relay by default)")
    add_config(p)
    p.add_argument("--scenario",
                   choices=("ddf", "ddf-alamouti", "block-fading",
                            "parallel", "ofdm"),
                   default=None)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--snr-db-grid", type=float, nargs="+", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--tower", choices=CATALOG_IDS, default=None)
    p.add_argument("--M-policy", dest="m_policy", default=None)
    p.add_argument("--theta-mode", default=None)
    p.add_argument("--distribution", default=None)
    p.add_argument("--restrict", type=int, default=None)
    p.add_argument("--n_t", type=int, default=None)
    p.add_argument("--n_r", type=int, default=None)

    p = sub.add_parser("dmt", help="diversity slopes from a coded curve")
    add_config(p)
    p.add_argument("--window", type=float, nargs=2, default=None,
                   metavar=("LO_DB", "HI_DB"))

    return parser


def _load_config_dict(path) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    if "format_version" in data and isinstance(data.get("config"), dict):
        # a result sidecar: reuse its embedded config for an exact re-run
        data = data["config"]
    return data


def _merged_config(args, flag_names: dict, defaults: dict,
                   forced: dict) -> ExperimentConfig:
    """File values, then defaults for absent keys, then flags, then forced."""
    data = _load_config_dict(args.config)
    for key, value in defaults.items():
        data.setdefault(key, value)
    for flag, key in flag_names.items():
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    data.update(forced)
    return ExperimentConfig.from_dict(data)


def _print_points(points) -> None:
    for p in points:
        line = f"snr={p.snr_db:g} dB  outage={p.outage_prob:.6g}"
        if p.coded_error_prob is not None:
            line += f"  scored_error={p.coded_error_prob:.6g}"
        if p.relay_conditional_error is not None:
            line += f"  relay_cond_error={p.relay_conditional_error:.6g}"
        print(line)


def _cmd_construct(args) -> int:
    data = _load_config_dict(args.config)
    tower_id = args.tower or data.get("tower")
    if tower_id is None:
        raise ValidationError("construct needs --tower (or a config with one)")
    tower = tower_from_catalog(tower_id)
    n_t = args.n_t if args.n_t is not None else tower.T
    rho = 10.0 ** (args.snr_db / 10.0)
    params = make_code_params(
        tower, B=args.B, n_t=n_t, r=args.r, rho=rho,
        m_policy=args.m_policy, theta_mode=args.theta_mode,
    )
    book = enumerate_codebook(params, CODEBOOK_GUARD, args.restrict)
    payload = {
        "tower": tower_id,
        "base": tower.base,
        "m": tower.m,
        "T": tower.T,
        "symbol_dim": tower.symbol_dim,
        "coeff_count": params.coeff_count,
        "B": params.B,
        "n_t": params.n_t,
        "M": params.M,
        "theta": params.theta,
        "codebook_size": book.size,
    }
    if args.codeword is not None:
        cw = book.codeword(args.codeword)
        payload["codeword_entries"] = [
            [[z.real, z.imag] for z in row] for row in cw.entries_array()
        ]
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_nvd_check(args) -> int:
    data = _load_config_dict(args.config)
    tower_id = args.tower or data.get("tower")
    if tower_id is None:
        raise ValidationError("nvd-check needs --tower (or a config with one)")
    tower = tower_from_catalog(tower_id)
    params = make_code_params(
        tower, B=1, n_t=tower.T, r=0.0, rho=4.0, m_policy=f"fixed:{args.M}"
    )
    book = enumerate_codebook(params, CODEBOOK_GUARD)
    report = nvd_min(tower, book, mode=args.mode,
                     random_pairs=args.random_pairs, seed=args.seed)
    print(json.dumps({
        "tower": tower_id,
        "mode": report.mode,
        "pairs_checked": report.pairs_checked,
        "min_value": float(report.min_value),
        "min_value_exact": report.min_value_str,
        "non_vanishing": report.min_value >= 1,
    }, indent=2, sort_keys=True))
    return 0


def _cmd_outage(args) -> int:
    flags = {
        "model": "scenario", "n_t": "n_t", "n_r": "n_r", "B": "B", "r": "r",
        "snr_db_grid": "snr_db_grid", "trials": "trials", "seed": "seed",
        "distribution": "distribution", "q_tones": "q_tones",
        "l_taps": "l_taps", "out": "out",
    }
    cfg = _merged_config(args, flags, {"scenario": "block-fading"},
                         {"mode": "outage"})
    points = run_curve(cfg)
    _print_points(points)
    if cfg.out:
        print(f"wrote {cfg.out}")
    return 0


def _cmd_simulate(args) -> int:
    flags = {
        "scenario": "scenario", "nodes": "nodes", "T": "T", "B": "B",
        "r": "r", "snr_db_grid": "snr_db_grid", "trials": "trials",
        "tower": "tower", "m_policy": "m_policy", "theta_mode": "theta_mode",
        "seed": "seed", "distribution": "distribution",
        "restrict": "restrict", "n_t": "n_t", "n_r": "n_r", "out": "out",
    }
    cfg = _merged_config(args, flags, {"scenario": "ddf"}, {"mode": "coded"})
    points = run_curve(cfg)
    _print_points(points)
    if cfg.out:
        print(f"wrote {cfg.out}")
    return 0


def _cmd_dmt(args) -> int:
    data = _load_config_dict(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["out"] = args.out
    cfg = ExperimentConfig.from_dict(data)
    if cfg.mode != "coded":
        raise ValidationError("dmt needs a coded-mode config")
    points = run_curve(cfg)
    window = tuple(args.window) if args.window else (
        cfg.snr_db_grid[0], cfg.snr_db_grid[-1]
    )
    coded = fit_slope(points, window, "coded")
    outage_fit = fit_slope(points, window, "outage")
    print(json.dumps({
        "window_db": list(window),
        "coded_slope": coded.estimate,
        "coded_stderr": coded.stderr,
        "outage_slope": outage_fit.estimate,
        "outage_stderr": outage_fit.stderr,
        "slope_gap": abs(coded.estimate - outage_fit.estimate),
        "max_decade_gap": compare_exponents(points, points),
    }, indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "construct": _cmd_construct,
    "nvd-check": _cmd_nvd_check,
    "outage": _cmd_outage,
    "simulate": _cmd_simulate,
    "dmt": _cmd_dmt,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
