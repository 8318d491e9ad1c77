"""Command-line front end: ``oscillax {build-symbol,check-class,blowup,crosscheck}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, build_run_config, load_config_file
from .crosscheck import run_crosscheck
from .errors import OscillaxError
from .experiment import BlowupConfig, emit_report, run_blowup, slope_per_doubling
from .mollifier import MOLLIFIERS, iterated_log_weight
from .symbol import (CounterexampleSymbol, SymbolClassSpec, build_counterexample_symbol,
                     check_symbol, make_cutoff)

log = logging.getLogger("oscillax")


def _symbol(cfg: RunConfig) -> CounterexampleSymbol:
    cutoff = make_cutoff(cfg.delta, cfg.z_max, cfg.table_size)
    return build_counterexample_symbol(MOLLIFIERS[cfg.mollifier](), cfg.n, beta=cfg.beta,
                                       cutoff=cutoff)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2))
    log.info("wrote %s", path)


def symbol_dump(sym: CounterexampleSymbol) -> dict:
    """``a`` on a small diagonal grid ``x = (s, ..., s)``, ``theta = (t, ..., t)``."""
    s_vals = np.array([0.0, 1e-3, 1e-2, 0.1, 0.3, 0.5, 0.8, 0.95, 1.0])
    t_vals = np.array([0.0, 1.0, 10.0, 100.0, 1e3, 1e4])
    X = np.repeat(s_vals[:, None, None], sym.n, axis=2)
    T = np.repeat(t_vals[None, :, None], sym.n, axis=2)
    a = sym(X, T)
    # the modulus is the real amplitude; np.abs(a) would add exp() round-off
    return {"x_diag": s_vals.tolist(), "theta_diag": t_vals.tolist(),
            "abs": np.abs(sym.amplitude(X, T)).tolist(), "real": a.real.tolist(),
            "imag": a.imag.tolist()}


def cmd_build_symbol(cfg: RunConfig) -> int:
    sym = _symbol(cfg)
    dump = symbol_dump(sym)
    payload = {"symbol": sym.describe(), "dump": dump, "run_config": cfg.to_dict()}
    _write_json(_outdir(cfg) / "symbol.json", payload)
    absa = np.asarray(dump["abs"])
    ok = bool(np.all(absa <= 1.0) and np.all(absa[0] == 1.0))
    print(f"build-symbol: |a| <= 1 and |a(0, theta)| = 1: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_check_class(cfg: RunConfig) -> int:
    sym = _symbol(cfg)
    out = _outdir(cfg)
    ok = True
    for l in range(1, cfg.l_max + 1):
        spec = SymbolClassSpec(m=0.0, delta_class=1.0, weight=iterated_log_weight(l))
        rep = check_symbol(sym, spec, cfg.max_order)
        payload = rep.to_dict()
        payload["run_config"] = cfg.to_dict()
        _write_json(out / f"check_class_l{l}.json", payload)
        worst = max(rep.entries, key=lambda e: e["trend_slope"])
        print(f"check-class l={l}: {'PASS' if rep.passed else 'FAIL'} "
              f"(max trend slope {worst['trend_slope']:.4f} at alpha={worst['alpha']}, "
              f"gamma={worst['gamma']})")
        ok &= rep.passed
    return 0 if ok else 1


def cmd_blowup(cfg: RunConfig) -> int:
    cutoff = make_cutoff(cfg.delta, cfg.z_max, cfg.table_size)
    bcfg = BlowupConfig(n=cfg.n, beta=cfg.beta, p_list=list(cfg.p_list),
                        mollifier=MOLLIFIERS[cfg.mollifier](), cutoff=cutoff)
    report = run_blowup(bcfg)
    report.config["run_config"] = cfg.to_dict()
    out = _outdir(cfg)
    emit_report(report, "csv", out / "blowup.csv")
    emit_report(report, "json", out / "blowup.json")
    for r in report.rows:
        print(f"p={r.p:<4d} eps={r.epsilon_p:.6e} ratio={r.ratio_computed:.6f} "
              f"bound={r.ratio_lower_bound:.6f} margin={r.margin:+.4f}")
    if len(report.rows) > 1:
        print(f"log2-ratio slope per doubling: {slope_per_doubling(report):.4f}")
    print(f"blowup: N0={report.N0_used:.6g} invariants {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def cmd_crosscheck(cfg: RunConfig) -> int:
    sym = _symbol(cfg)
    res = run_crosscheck(sym, cfg.extent, cfg.grid_points)
    res["run_config"] = cfg.to_dict()
    _write_json(_outdir(cfg) / "crosscheck.json", res)
    worst_dr = max(e["rel_l2"] for e in res["direct_vs_reduced"])
    worst_rb = max(e["rel"] for e in res["reduced_vs_box"])
    print(f"direct vs reduced (Gaussians): max rel L2 {worst_dr:.3e}")
    print(f"reduced vs closed form (boxes): max rel {worst_rb:.3e}")
    print(f"crosscheck: {'PASS' if res['passed'] else 'FAIL'}")
    return 0 if res["passed"] else 1


COMMANDS = {
    "build-symbol": cmd_build_symbol,
    "check-class": cmd_check_class,
    "blowup": cmd_blowup,
    "crosscheck": cmd_crosscheck,
}


def _p_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oscillax", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat TOML file; flags override its values")
        sp.add_argument("--n", type=int)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--delta", type=float, help="plateau radius of K")
        sp.add_argument("--mollifier", choices=sorted(MOLLIFIERS))
        sp.add_argument("--p-list", type=_p_list, dest="p_list", help="e.g. 1,2,4,8")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--grid-points", type=int, dest="grid_points")
        sp.add_argument("--extent", type=float)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = load_config_file(args.config) if args.config else {}
        overrides = {k: getattr(args, k) for k in ("n", "beta", "delta", "mollifier", "p_list",
                                                    "out", "seed", "grid_points", "extent")}
        cfg = build_run_config(args.command, file_values, overrides)
        np.random.seed(cfg.seed)
        return COMMANDS[args.command](cfg)
    except (OscillaxError, OSError) as exc:
        print(f"oscillax {args.command}: error: {exc}", file=sys.stderr)
        return 2

