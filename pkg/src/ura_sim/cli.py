"""Command-line experiment runner.

Subcommands emit CSV data for the diversity, interferer and outage figures
and manage Steiner code files::

    ura-sim diversity   --config fig2.cfg --out fig2.csv
    ura-sim interferers --config fig3.cfg
    ura-sim outage      --config fig4.cfg --workers 4
    ura-sim gen-code -M 25 -K 4 --out s2425.txt
    ura-sim verify-code s2425.txt
    ura-sim oracle-check

Config files are flat ``key = value`` lines; ``#`` starts a comment.  Units:
lambda is dimensionless, ``gamma_db`` and ``theta_db*`` are in dB
(x_dB = 10 log10 x), ``seed`` is a decimal integer.  Lists are comma
separated.  See README.md for every key and its default.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .access_codes import SteinerCode, build_steiner_code, read_code, verify_steiner, write_code
from .analytics import (
    ScenarioParams,
    collision_outage,
    db_to_linear,
    diversity_distribution,
    interferer_distribution,
)
from .channel_mrc import RECEIVERS
from .errors import (
    CodeInvariantError,
    CodeParseError,
    ConfigError,
    InadmissibleParameters,
    InvalidParameters,
    UnsupportedParameters,
)
from .montecarlo import SimConfig, default_workers, estimate_outage

log = logging.getLogger("ura_sim")

EXIT_OK, EXIT_CONFIG, EXIT_UNSUPPORTED, EXIT_VERIFY = 0, 1, 2, 3

SCHEMES = ("dsa", "steiner")

# key -> (parser, default); None default means "derived" or "required when used"
CONFIG_KEYS = {
    "M": (int, 25),
    "K": (int, 4),
    "schemes": (lambda v: _parse_list(v, str), list(SCHEMES)),
    "code_file": (str, None),
    "lambdas": (lambda v: _parse_list(v, float), None),
    "lambda_min": (float, 1e-2),
    "lambda_max": (float, 1e2),
    "lambda_points": (int, 50),
    "lambda": (float, 0.5),
    "tail_eps": (float, 1e-12),
    "gamma_db": (float, 30.0),
    "theta_db": (lambda v: _parse_list(v, float), None),
    "theta_db_min": (float, -10.0),
    "theta_db_max": (float, 30.0),
    "theta_points": (int, 41),
    "trials": (int, 1_000_000),
    "seed": (int, 0),
    "receivers": (lambda v: _parse_list(v, str), list(RECEIVERS)),
    "workers": (int, None),
}


def _parse_list(value, cast):
    items = [v.strip() for v in value.split(",") if v.strip()]
    if not items:
        raise ValueError("empty list")
    return [cast(v) for v in items]


def parse_config(text: str, source: str = "<config>") -> dict:
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {raw!r}")
        if key not in CONFIG_KEYS:
            raise ConfigError(key, f"unknown key ({source}:{lineno})")
        if key in cfg:
            raise ConfigError(key, f"duplicate key ({source}:{lineno})")
        try:
            cfg[key] = CONFIG_KEYS[key][0](value)
        except ValueError as exc:
            raise ConfigError(key, f"bad value {value!r}: {exc}") from None
    return cfg


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    return parse_config(text, str(path))


class Settings:
    """Config values with defaults filled in and validated on access."""

    def __init__(self, cfg: dict):
        self.cfg = cfg

    def __getitem__(self, key):
        return self.cfg.get(key, CONFIG_KEYS[key][1])

    def schemes(self):
        schemes = self["schemes"]
        for s in schemes:
            if s not in SCHEMES:
                raise ConfigError("schemes", f"unknown scheme {s!r}")
        return schemes

    def lambda_grid(self):
        if self["lambdas"] is not None:
            lams = np.array(self["lambdas"], dtype=float)
            if np.any(lams < 0):
                raise ConfigError("lambdas", "must be >= 0")
            return lams
        lo, hi, n = self["lambda_min"], self["lambda_max"], self["lambda_points"]
        if not 0 < lo <= hi:
            raise ConfigError("lambda_min", "need 0 < lambda_min <= lambda_max")
        if n < 1:
            raise ConfigError("lambda_points", "must be >= 1")
        return np.logspace(np.log10(lo), np.log10(hi), n)

    def theta_db_grid(self):
        if self["theta_db"] is not None:
            th = np.array(self["theta_db"], dtype=float)
        else:
            if self["theta_points"] < 1:
                raise ConfigError("theta_points", "must be >= 1")
            if self["theta_db_min"] > self["theta_db_max"]:
                raise ConfigError("theta_db_min", "must not exceed theta_db_max")
            th = np.linspace(self["theta_db_min"], self["theta_db_max"], self["theta_points"])
        if np.any(np.diff(th) <= 0):
            raise ConfigError("theta_db", "grid must be strictly increasing")
        return th

    def scenario(self, scheme, lam):
        try:
            if scheme == "steiner":
                return ScenarioParams.steiner(self["M"], self["K"], lam)
            return ScenarioParams.dsa(self["M"], self["K"], lam)
        except InadmissibleParameters:
            raise
        except InvalidParameters as exc:
            raise ConfigError("M/K", str(exc)) from None

    def code(self) -> SteinerCode | None:
        path = self["code_file"]
        if path is None:
            return None
        code = read_code(path)
        if (code.M, code.K) != (self["M"], self["K"]):
            raise ConfigError("code_file", f"code is S(2,{code.K},{code.M}), config has M={self['M']}, K={self['K']}")
        return code


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(out, meta: dict, header, rows):
    buf = io.StringIO()
    buf.write(f"# ura-sim {__version__}\n")
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def cmd_diversity(settings: Settings, out=None):
    rows, tails = [], {}
    for scheme in settings.schemes():
        worst = 0.0
        for lam in settings.lambda_grid():
            dist = diversity_distribution(settings.scenario(scheme, float(lam)), settings["tail_eps"])
            worst = max(worst, dist.discarded_tail)
            rows += [(scheme, _fmt(lam), k, _fmt(p)) for k, p in enumerate(dist.probabilities)]
        tails[scheme] = worst
    meta = {"command": "diversity", "M": settings["M"], "K": settings["K"],
            "max_discarded_poisson_tail": _tails(tails)}
    _write_csv(out, meta, ("scheme", "lambda", "k_prime", "probability"), rows)


def cmd_interferers(settings: Settings, out=None):
    rows, tails = [], {}
    for scheme in settings.schemes():
        worst = 0.0
        for lam in settings.lambda_grid():
            dist = interferer_distribution(settings.scenario(scheme, float(lam)), settings["tail_eps"])
            worst = max(worst, dist.discarded_tail)
            rows += [(scheme, _fmt(lam), l, _fmt(p)) for l, p in enumerate(dist.probabilities)]
        tails[scheme] = worst
    meta = {"command": "interferers", "M": settings["M"], "K": settings["K"],
            "max_discarded_poisson_tail": _tails(tails)}
    _write_csv(out, meta, ("scheme", "lambda", "l_prime", "probability"), rows)


def _tails(tails):
    return " ".join(f"{k}={_fmt(v)}" for k, v in tails.items())


def cmd_outage(settings: Settings, out=None):
    receivers = settings["receivers"]
    for r in receivers:
        if r not in RECEIVERS:
            raise ConfigError("receivers", f"unknown receiver {r!r}")
    lam = settings["lambda"]
    if lam < 0:
        raise ConfigError("lambda", "must be >= 0")
    if settings["trials"] < 1:
        raise ConfigError("trials", "must be >= 1")
    if not 0 <= settings["seed"] < 2**64:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    gamma_bar = float(db_to_linear(settings["gamma_db"]))
    theta_db = settings.theta_db_grid()
    theta = db_to_linear(theta_db)
    workers = settings["workers"] or default_workers()

    rows, tails = [], {}
    for scheme in settings.schemes():
        sc = settings.scenario(scheme, lam)
        code = settings.code() if scheme == "steiner" else None
        curves = estimate_outage(SimConfig(sc, gamma_bar, theta, settings["trials"], settings["seed"],
                                           tuple(receivers), workers, code))
        tails[scheme] = curves[0].discarded_tail
        for c in curves:
            if c.receiver == "collision_mrc":
                for tdb, th in zip(theta_db, theta):
                    rows.append((scheme, c.receiver, _fmt(tdb), _fmt(collision_outage(sc, th, gamma_bar)),
                                 _fmt(0.0), "analytic"))
            for tdb, p, hw in zip(theta_db, c.p_hat, c.half_width):
                rows.append((scheme, c.receiver, _fmt(tdb), _fmt(p), _fmt(hw), "mc"))
    meta = {"command": "outage", "M": settings["M"], "K": settings["K"], "lambda": _fmt(lam),
            "gamma_db": _fmt(settings["gamma_db"]), "trials": settings["trials"], "seed": settings["seed"],
            "discarded_poisson_tail": _tails(tails)}
    _write_csv(out, meta, ("scheme", "receiver", "theta_db", "p_out", "ci_halfwidth", "source"), rows)


def cmd_gen_code(M: int, K: int, out=None):
    code = build_steiner_code(M, K)
    if out is None:
        from .access_codes import format_code
        sys.stdout.write(format_code(code))
    else:
        write_code(out, code)
    return code


def cmd_verify_code(path) -> int:
    try:
        code = read_code(path, verify=False)
    except CodeParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = verify_steiner(code)
    if report.ok:
        print(f"ok: S(2,{code.K},{code.M}) with C={code.C}, D={code.D}")
        return EXIT_OK
    for v in report.violations:
        print(f"violation: {v}")
    return EXIT_VERIFY


def cmd_oracle_check() -> int:
    from .oracle import cross_check

    checked, worst, bad = cross_check()
    print(f"checked {checked} conditional distributions, worst abs error {worst:.3e}")
    for m in bad:
        print(f"MISMATCH {m.label}: {m.max_abs_error:.3e}")
    return EXIT_VERIFY if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ura-sim", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False, workers=False):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--out", help="output file (default: stdout)")
        if seed:
            sp.add_argument("--seed", type=int, help="override the config seed")
        if workers:
            sp.add_argument("--workers", type=int, help="worker processes (default: CPU count)")

    common(sub.add_parser("diversity", help="distribution of clean replicas K' vs lambda"))
    common(sub.add_parser("interferers", help="per-subchannel interferer count L' vs lambda"))
    common(sub.add_parser("outage", help="outage vs SINR threshold, analytic and simulated"), True, True)
    g = sub.add_parser("gen-code", help="construct an S(2,K,M) code file")
    g.add_argument("-M", type=int)
    g.add_argument("-K", type=int)
    common(g)
    v = sub.add_parser("verify-code", help="check a code file")
    v.add_argument("path")
    sub.add_parser("oracle-check", help="compare closed forms against exhaustive enumeration")
    return p


def _setup_logging():
    level = os.environ.get("URA_SIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify-code":
            return cmd_verify_code(args.path)
        if args.command == "oracle-check":
            return cmd_oracle_check()
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            cfg["seed"] = args.seed
        if getattr(args, "workers", None) is not None:
            if args.workers < 1:
                raise ConfigError("--workers", "must be >= 1")
            cfg["workers"] = args.workers
        settings = Settings(cfg)
        if args.command == "diversity":
            cmd_diversity(settings, args.out)
        elif args.command == "interferers":
            cmd_interferers(settings, args.out)
        elif args.command == "outage":
            cmd_outage(settings, args.out)
        elif args.command == "gen-code":
            M = args.M if args.M is not None else settings["M"]
            K = args.K if args.K is not None else settings["K"]
            cmd_gen_code(M, K, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnsupportedParameters, InadmissibleParameters) as exc:
        print(f"unsupported parameters: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (CodeParseError, CodeInvariantError) as exc:
        print(f"code file error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except InvalidParameters as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
