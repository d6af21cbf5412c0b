"""``noma-accuracy`` command-line entry point.

Settings come from an optional flat ``key = value`` config file and from
flags; flags win. List-valued settings are comma separated, and several
rank selections are separated by ``;`` (``select = 1,3; 1,2``).

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .cluster import Pairing
from .errors import ParameterError
from .experiments import FIGURES, ExperimentConfig, OutputError, preset, run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

COMMAND_KINDS = {
    "analytic": "accuracy-analytic",
    "mc": "accuracy-mc",
    "coverage": "coverage-mc",
    "sweep": "sweep",
}

# config-file keys, written the way the matching flag is spelled
SETTING_KEYS = (
    "model",
    "alpha",
    "m",
    "n_users",
    "pool_size",
    "select",
    "pairing",
    "theta",
    "beta",
    "msp_mode",
    "direction",
    "seed",
    "samples",
    "out",
    "lam",
    "radius",
    "sigma2",
    "omega",
    "a1",
    "a2",
    "p_tx",
    "p_bs",
    "noise",
    "voronoi",
    "workers",
    "timing",
)


def _normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected key = value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = _normalize_key(key)
        if key not in SETTING_KEYS:
            raise ParameterError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _split(text: str) -> list:
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _floats(name: str, text: str) -> tuple:
    try:
        vals = tuple(float(p) for p in _split(text))
    except ValueError:
        raise ParameterError(f"{name}: expected numbers, got {text!r}") from None
    if not vals:
        raise ParameterError(f"{name}: empty list")
    return vals


def _int(name: str, text: str) -> int:
    text = str(text).strip()
    try:
        return int(text)
    except ValueError:
        pass
    # accept 1e6-style counts
    try:
        x = float(text)
    except ValueError:
        x = float("nan")
    if not x.is_integer():
        raise ParameterError(f"{name}: expected an integer, got {text!r}")
    return int(x)


def _ints(name: str, text: str) -> tuple:
    vals = tuple(_int(name, p) for p in _split(text))
    if not vals:
        raise ParameterError(f"{name}: empty list")
    return vals


def _bool(name: str, text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"{name}: expected true/false, got {text!r}")


def _msp_modes(text: str) -> tuple:
    modes = []
    for p in _split(text):
        p = p.replace("-", "_")
        if p == "both":
            modes += ["first_term", "unconditional"]
        elif p in ("first_term", "unconditional"):
            modes.append(p)
        else:
            raise ParameterError(f"msp-mode must be first-term, unconditional or both, got {p!r}")
    return tuple(dict.fromkeys(modes))


def _selections(text: str) -> list:
    out = []
    for chunk in str(text).split(";"):
        chunk = chunk.strip()
        if chunk:
            try:
                out.append(tuple(int(v) for v in chunk.replace("-", ",").split(",") if v.strip()))
            except ValueError:
                raise ParameterError(f"select: expected ranks like 1,3, got {chunk!r}") from None
    return out


def _pairings_from_spec(text: str) -> list:
    """``3:1-3; 6:1-6`` -> pool size and ranks for each pairing."""
    out = []
    for chunk in str(text).split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ParameterError(f"pairing: expected POOL:RANKS, got {chunk!r}")
        pool, ranks = chunk.split(":", 1)
        sels = _selections(ranks)
        if len(sels) != 1:
            raise ParameterError(f"pairing: one rank set per entry, got {chunk!r}")
        out.append(Pairing(_int("pairing", pool), sels[0]))
    return out


def settings_to_fields(settings: dict) -> dict:
    """Translate raw settings into ``ExperimentConfig`` keyword arguments."""
    kw = {}
    if "model" in settings:
        kw["models"] = tuple(p.lower() for p in _split(settings["model"]))
    if "alpha" in settings:
        kw["alphas"] = _floats("alpha", settings["alpha"])
    if "m" in settings:
        kw["shapes"] = _floats("m", settings["m"])
    if "n_users" in settings:
        kw["n_users"] = _ints("n-users", settings["n_users"])
    if "theta" in settings:
        kw["thetas"] = _floats("theta", settings["theta"])
    if "beta" in settings:
        kw["betas"] = _floats("beta", settings["beta"])
    if "msp_mode" in settings:
        kw["msp_modes"] = _msp_modes(settings["msp_mode"])
    if "direction" in settings:
        kw["directions"] = tuple(p.lower() for p in _split(settings["direction"]))
    for key in ("lam", "radius", "sigma2", "omega", "a1", "a2", "p_tx", "p_bs", "noise"):
        if key in settings:
            vals = _floats(key, settings[key])
            if len(vals) != 1:
                raise ParameterError(f"{key}: expected a single value, got {settings[key]!r}")
            kw[key] = vals[0]
    if "seed" in settings:
        kw["seed"] = _int("seed", settings["seed"])
    if "samples" in settings:
        kw["n_samples"] = _int("samples", settings["samples"])
    if "workers" in settings:
        kw["workers"] = _int("workers", settings["workers"])
    if "out" in settings:
        kw["output_path"] = settings["out"]
    if "voronoi" in settings:
        kw["voronoi"] = _bool("voronoi", settings["voronoi"])
    if "timing" in settings:
        kw["timing"] = _bool("timing", settings["timing"])

    pairings = []
    if "pairing" in settings:
        pairings += _pairings_from_spec(settings["pairing"])
    if "pool_size" in settings or "select" in settings:
        pools = _ints("pool-size", settings["pool_size"]) if "pool_size" in settings else None
        sels = _selections(settings["select"]) if "select" in settings else None
        if sels is None:
            sizes = kw.get("n_users", (2,))
            if sizes != (2,):
                raise ParameterError("--pool-size without --select is only defined for 2-user clusters")
            pairings += [Pairing(pool, (1, pool)) for pool in pools]
        else:
            if pools is None:
                # without a pool size the ranks are taken out of exactly max(rank) users
                pools = (max(max(s) for s in sels),)
            pairings += [Pairing(pool, sel) for pool in pools for sel in sels]
    if pairings:
        sizes = kw.get("n_users")
        if sizes is not None and any(len(p.selection) not in sizes for p in pairings):
            raise ParameterError(f"selected rank sets do not match --n-users {sizes}")
        kw["pairings"] = tuple(pairings)
        kw["n_users"] = ()
    return kw


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", metavar="PATH", help="flat key = value config file (flags override it)")
    g.add_argument("--seed", metavar="U64", help="master seed for every Monte Carlo point")
    g.add_argument("--samples", metavar="N", help="Monte Carlo samples per grid point")
    g.add_argument("--out", metavar="PATH", help="CSV output path (default: stdout)")
    g.add_argument("--workers", metavar="K", help="grid points evaluated concurrently")
    g.add_argument("--no-timing", dest="timing", action="store_const", const="false", help="leave runtime_ms empty")
    g.add_argument("--quiet", action="store_true", help="do not echo the summary table on stderr")
    s = common.add_argument_group("scenario (comma-separated lists sweep a grid axis)")
    s.add_argument("--model", metavar="ppp|mcp|tcp")
    s.add_argument("--alpha", metavar="F")
    s.add_argument("--m", metavar="F", help="Nakagami shape")
    s.add_argument("--n-users", metavar="N")
    s.add_argument("--pool-size", metavar="M")
    s.add_argument("--select", metavar="1,3", help="selected ranks; separate several sets with ';'")
    s.add_argument("--pairing", metavar="M:RANKS", help="explicit pairings such as '3:1-3;6:1-6'")
    s.add_argument("--theta", metavar="F", help="SIR threshold, linear")
    s.add_argument("--beta", metavar="F", help="residual SIC fraction")
    s.add_argument("--msp-mode", metavar="first-term|unconditional|both")
    s.add_argument("--direction", metavar="uplink|downlink")
    s.add_argument("--voronoi", action="store_const", const="true", help="ppp Monte Carlo draws the true Voronoi cell")
    for name in ("lam", "radius", "sigma2", "omega", "a1", "a2", "p-tx", "p-bs", "noise"):
        s.add_argument(f"--{name}", metavar="F")

    parser = argparse.ArgumentParser(
        prog="noma-accuracy",
        description="Accuracy of distance-based NOMA user ranking: analytic values, Monte Carlo and coverage tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analytic", parents=[common], help="analytic accuracy over a grid")
    sub.add_parser("mc", parents=[common], help="Monte Carlo accuracy over a grid")
    sub.add_parser("coverage", parents=[common], help="ISP vs MSP coverage by Monte Carlo")
    sub.add_parser("sweep", parents=[common], help="analytic then Monte Carlo rows for the same grid")
    rep = sub.add_parser("reproduce", parents=[common], help="run a figure preset")
    rep.add_argument("figure", choices=FIGURES)
    return parser


def _flag_settings(args: argparse.Namespace) -> dict:
    out = {}
    for key in SETTING_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    return out


def _base_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.command == "reproduce":
        cfg = preset(args.figure)
        return replace(cfg, notes=(f"preset {args.figure}",) + cfg.notes)
    if args.command == "coverage":
        # reference coverage scenario: 2-user MCP cluster of radius 10, lam = 1e-4
        return ExperimentConfig(kind="coverage-mc", models=("mcp",), lam=1e-4, radius=10.0)
    return ExperimentConfig(kind=COMMAND_KINDS[args.command])


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    settings = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise OutputError(f"cannot read config {args.config}: {exc}") from exc
        settings.update(parse_config_text(text))
    settings.update(_flag_settings(args))
    return replace(_base_config(args), **settings_to_fields(settings))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; that code means numerical failure here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args)
    except OutputError as exc:
        print(f"noma-accuracy: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParameterError as exc:
        print(f"noma-accuracy: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run(cfg, summary=None if args.quiet else sys.stderr)
    except OutputError as exc:
        print(f"noma-accuracy: {exc}", file=sys.stderr)
        return EXIT_IO
    for row in report.rows:
        if row.failed:
            print(f"noma-accuracy: failed point ({row.model}, alpha={row.alpha}): {row.reason}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
