"""Command-line front door: iterations, lemma suites, scaling sweeps,
weak-residual checks; plot-ready CSV/JSON output.

Configuration is layered (later wins): built-in defaults, a flat key=value
config file (``--config``), environment variables prefixed ``STATKDV_``
(e.g. ``STATKDV_LAMBDA_MAX=4096``), then explicit command-line flags.
Unknown keys anywhere are rejected.

Exit codes: 0 all checks passed, 2 a check failed, 3 configuration error,
4 the lambda search was exhausted.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, fields
from fractions import Fraction

from .norms import sobolev_norm
from .scheme import (IncrementInfo, IterationState, SchemeParams,
                     SearchExhausted, _shifted_blocks, iterate)
from .spectral import TorusFunction, load_coeffs, save_coeffs
from .verify import (InsufficientGrid, certify_stage, coverage_check,
                     increment_lp, run_lemma_suite, scaling_suite,
                     weak_residual)

ENV_PREFIX = "STATKDV_"

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_CONFIG = 3
EXIT_EXHAUSTED = 4


class ConfigError(Exception):
    pass


# ------------------------------------------------------------- config parsing

def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_fraction(s: str) -> Fraction:
    return Fraction(s.strip())


def _parse_pairs(s: str) -> tuple:
    """item3 (alpha, p) pairs as 'alpha:p,alpha:p', e.g. '-0.5:1,-0.25:1.5'."""
    out = []
    for part in s.split(","):
        alpha, p = part.split(":")
        out.append((float(alpha), float(p)))
    return tuple(out)


def _parse_grid(s: str) -> tuple:
    """Lambda grid: 'lo..hi' doubles from lo to hi, or a comma list."""
    s = s.strip()
    if ".." in s:
        lo, hi = (int(t) for t in s.split("..", 1))
        if lo < 1 or hi < lo:
            raise ValueError(f"bad grid bounds: {s!r}")
        vals = []
        v = lo
        while v <= hi:
            vals.append(v)
            v *= 2
        return tuple(vals)
    return tuple(int(t) for t in s.split(","))


def _parse_freqs(s: str) -> tuple:
    """Test frequencies: 'a..b' inclusive range, or a comma list."""
    s = s.strip()
    if ".." in s:
        lo, hi = (int(t) for t in s.split("..", 1))
        return tuple(range(lo, hi + 1))
    return tuple(int(t) for t in s.split(","))


# Every configurable key with its parser; mirrors SchemeParams plus run knobs.
CONFIG_KEYS = {
    # scheme parameters
    "s": int,
    "c0": int,
    "sigma_factor": _parse_fraction,
    "sigma_exponent": int,
    "lambda_min": int,
    "lambda_max": int,
    "A": float,
    "decay_ratio": float,
    "amplitude_tail_tol": float,
    "vanish_tol": float,
    "c_lower": float,
    "w_l2_floor": float,
    "item3_pairs": _parse_pairs,
    "item3_rate": float,
    "item3_prefactor": float,
    "item6_C1": float,
    "item6_C2": float,
    "item6_kappa": int,
    # run knobs
    "q_max": int,
    "lambda_grid": _parse_grid,
    "eps_target": float,
    "out_dir": str,
    "seed": int,
    "checkpoint": str,
    "test_freqs": _parse_freqs,
}

_SCHEME_FIELDS = {f.name for f in fields(SchemeParams)}


@dataclass
class RunConfig:
    params: SchemeParams
    q_max: int = 2
    lambda_grid: tuple = tuple(2 ** m for m in range(7, 14))
    eps_target: float = 0.5
    out_dir: str = "out"
    seed: int = 0
    checkpoint: str | None = None
    test_freqs: tuple = tuple(range(1, 9))


def _read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' comments and blank lines ignored."""
    raw = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{lineno}: expected key=value, got {line!r}")
                key, val = (t.strip() for t in line.split("=", 1))
                raw[key] = val
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    return raw


def _read_env() -> dict:
    raw = {}
    for name, val in os.environ.items():
        if name.startswith(ENV_PREFIX):
            raw[name[len(ENV_PREFIX):].lower()] = val
    return raw


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults < config file < environment < CLI flags."""
    merged = {}
    if getattr(args, "config", None):
        merged.update(_read_config_file(args.config))
    merged.update(_read_env())
    # CLI flags use the same key names with '-' -> '_'
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    parsed = {}
    for key, val in merged.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key: {key!r}")
        if isinstance(val, str):
            try:
                val = CONFIG_KEYS[key](val)
            except (ValueError, ArithmeticError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}")
        parsed[key] = val
    scheme_kwargs = {k: v for k, v in parsed.items() if k in _SCHEME_FIELDS}
    run_kwargs = {k: v for k, v in parsed.items() if k not in _SCHEME_FIELDS}
    try:
        params = SchemeParams(**scheme_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc))
    return RunConfig(params=params, **run_kwargs)


# ------------------------------------------------------------- atomic output

def _atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_save_coeffs(f: TorusFunction, path: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    os.close(fd)
    try:
        save_coeffs(f, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------- checkpoints

def save_checkpoint(state: IterationState, dirpath: str, s: int = 3) -> None:
    """One coefficient CSV per function plus a JSON manifest (atomic)."""
    os.makedirs(dirpath, exist_ok=True)
    _atomic_save_coeffs(state.u, os.path.join(dirpath, "u.csv"))
    _atomic_save_coeffs(state.E, os.path.join(dirpath, "E.csv"))
    inc_meta = []
    for i, info in enumerate(state.increment_info, 1):
        _atomic_save_coeffs(info.envelope,
                            os.path.join(dirpath, f"envelope_{i}.csv"))
        inc_meta.append({"index": i, "sigma": info.sigma, "lam": info.lam,
                         "mu": info.mu, "epsilon": info.epsilon,
                         "shell_j": info.shell_j,
                         "prefactor": info.prefactor})
    norms = {"E_Hms": sobolev_norm(state.E, -s), "E_inf": state.E_inf}
    if state.increment_info:
        last = state.increment_info[-1]
        norms["w_L2"] = increment_lp(last, 2)
        norms["w_L1"] = increment_lp(last, 1)
    manifest = {"q": state.q, "lambda": state.lam, "epsilon": state.epsilon,
                "sigma": state.sigma, "s": s, "e0_norm": state.e0_norm,
                "norms": norms, "increments": inc_meta}
    _atomic_write_text(os.path.join(dirpath, "manifest.json"),
                       json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_checkpoint(dirpath: str) -> IterationState:
    manifest_path = os.path.join(dirpath, "manifest.json")
    if not os.path.isfile(manifest_path):
        raise ConfigError(f"missing checkpoint: no manifest at {manifest_path}")
    with open(manifest_path) as fh:
        man = json.load(fh)
    u = load_coeffs(os.path.join(dirpath, "u.csv"))
    E = load_coeffs(os.path.join(dirpath, "E.csv"))
    increments, infos = [], []
    for meta in man["increments"]:
        env = load_coeffs(
            os.path.join(dirpath, f"envelope_{meta['index']}.csv"))
        w = _shifted_blocks(env, meta["sigma"], meta["prefactor"])
        infos.append(IncrementInfo(
            w=w, envelope=env, sigma=meta["sigma"], lam=meta["lam"],
            mu=meta["mu"], epsilon=meta["epsilon"], shell_j=meta["shell_j"],
            prefactor=meta["prefactor"]))
        increments.append(w)
    return IterationState(q=man["q"], u=u, E=E, lam=man["lambda"],
                          epsilon=man["epsilon"], sigma=man["sigma"],
                          increments=increments, increment_info=infos,
                          e0_norm=man["e0_norm"],
                          E_inf=man["norms"]["E_inf"])


# ----------------------------------------------------------------- commands

def _summary_rows(states, s):
    rows = []
    for st in states:
        if st.increment_info:
            last = st.increment_info[-1]
            w_l2, w_l1 = increment_lp(last, 2), increment_lp(last, 1)
        else:
            w_l2 = w_l1 = 0.0
        rows.append((st.q, st.lam, st.epsilon, st.sigma,
                     sobolev_norm(st.E, -s), w_l2, w_l1))
    return rows


def cmd_iterate(cfg: RunConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    try:
        states = iterate(cfg.params, cfg.q_max, certify=True)
    except SearchExhausted as exc:
        print(f"exhausted: {exc}", file=sys.stderr)
        if exc.last_failure:
            print(f"last failed check: {exc.last_failure}", file=sys.stderr)
        return EXIT_EXHAUSTED
    first_fail = None
    for st in states:
        save_checkpoint(st, os.path.join(cfg.out_dir, f"q{st.q}"),
                        s=cfg.params.s)
        cert = st.certificates[-1]
        _atomic_write_text(
            os.path.join(cfg.out_dir, f"certificate_q{st.q}.json"),
            cert.to_json() + "\n")
        if not cert.passed and first_fail is None:
            first_fail = next(r["name"] for r in cert.item_results
                              if not r["pass"])
            first_fail = f"q={st.q}: {first_fail}"
    rows = _summary_rows(states, cfg.params.s)
    header = ("q", "lambda", "epsilon", "sigma", "E_Hms", "w_L2", "w_L1")
    lines = [",".join(header)]
    print(" ".join(f"{h:>12}" for h in header))
    for row in rows:
        q, lam, eps, sigma, e, w2, w1 = row
        print(f"{q:>12} {lam:>12} {eps:>12.6f} {sigma:>12} "
              f"{e:>12.5e} {w2:>12.5e} {w1:>12.5e}")
        lines.append(",".join(map(repr, row)))
    _atomic_write_text(os.path.join(cfg.out_dir, "summary.csv"),
                       "\n".join(lines) + "\n")
    if first_fail:
        print(f"failed check: {first_fail}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_lemmas(cfg: RunConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    report = run_lemma_suite(seed=cfg.seed)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    _atomic_write_text(
        os.path.join(cfg.out_dir, f"lemmas_seed{cfg.seed}.json"), text)
    for r in report["results"]:
        mark = "pass" if r["pass"] else "FAIL"
        print(f"{r['lemma']:>16}: constant {r['constant']:.6g} "
              f"(tolerance {r['tolerance']:g}) [{mark}]")
    if not report["passed"]:
        bad = next(r["lemma"] for r in report["results"] if not r["pass"])
        print(f"failed check: {bad}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_scaling(cfg: RunConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    try:
        reports = scaling_suite(params=cfg.params, lambdas=cfg.lambda_grid,
                                eps_target=cfg.eps_target)
    except InsufficientGrid as exc:
        print(f"insufficient grid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    coverage_check(reports)
    failures = []
    for rep in reports:
        path = os.path.join(cfg.out_dir, f"scaling_{rep.quantity}.csv")
        tmp = path + ".tmp"
        rep.write_csv(tmp)
        os.replace(tmp, path)
        slope = "n/a" if rep.slope is None else f"{rep.slope:+.4f}"
        pred = "n/a" if rep.predicted is None else f"{rep.predicted:+.4f}"
        mark = "pass" if rep.passed else "FAIL"
        print(f"{rep.quantity:>24}: slope {slope} vs predicted {pred} "
              f"[{mark}]")
        if not rep.passed:
            failures.append(rep.quantity)
    if failures:
        print(f"failed check: {failures[0]}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_residual(cfg: RunConfig) -> int:
    if not cfg.checkpoint:
        raise ConfigError("residual requires --checkpoint")
    state = load_checkpoint(cfg.checkpoint)
    entries = weak_residual(state, cfg.test_freqs, s=cfg.params.s)
    os.makedirs(cfg.out_dir, exist_ok=True)
    lines = ["k,residual,scale,rhs,rhs_bound"]
    ok = True
    for e in entries:
        tol = 1e-9 * e.scale
        mark = "pass" if e.residual < tol or e.k == 0 else "FAIL"
        ok &= (e.residual < tol or e.k == 0)
        print(f"k={e.k:>3}: |LHS-RHS| = {e.residual:.3e} "
              f"(scale {e.scale:.3e}) [{mark}]")
        lines.append(",".join(map(repr, (e.k, e.residual, e.scale, e.rhs,
                                         e.rhs_bound))))
    _atomic_write_text(os.path.join(cfg.out_dir, "weak_residual.csv"),
                       "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# --------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    """argparse whose usage errors map to the config-error exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _add_common(sp):
    sp.add_argument("--config", help="flat key=value configuration file")
    sp.add_argument("--out-dir", dest="out_dir", help="output directory")
    sp.add_argument("--seed", help="seed for randomized families")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="statkdv", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_it = sub.add_parser("iterate", help="run the iteration with "
                          "certificates and checkpoints")
    _add_common(p_it)
    p_it.add_argument("--q-max", dest="q_max", help="number of stages")
    p_it.add_argument("--A", dest="A", help="base-case amplitude")
    p_it.add_argument("--lambda-min", dest="lambda_min")
    p_it.add_argument("--lambda-max", dest="lambda_max")
    p_it.add_argument("--decay-ratio", dest="decay_ratio")

    p_lm = sub.add_parser("lemmas", help="seeded empirical-constant suite")
    _add_common(p_lm)

    p_sc = sub.add_parser("scaling", help="scaling-law slope sweeps")
    _add_common(p_sc)
    p_sc.add_argument("--lambda", dest="lambda_grid",
                      help="grid 'lo..hi' (doubling) or comma list")
    p_sc.add_argument("--eps", dest="eps_target", help="target epsilon")

    p_rs = sub.add_parser("residual", help="weak-residual identity from "
                          "a checkpoint")
    _add_common(p_rs)
    p_rs.add_argument("--checkpoint", help="checkpoint directory (e.g. out/q2)")
    p_rs.add_argument("--test-freqs", dest="test_freqs",
                      help="'a..b' or comma list")
    return parser


_COMMANDS = {"iterate": cmd_iterate, "lemmas": cmd_lemmas,
             "scaling": cmd_scaling, "residual": cmd_residual}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SearchExhausted as exc:
        print(f"exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED


if __name__ == "__main__":
    sys.exit(main())
