"""Command-line front end.

Every subcommand resolves its parameters as flags > ``--config`` JSON file >
built-in defaults, range-checks them, and echoes the effective values as
``#`` comment lines at the top of its output.  SNRs are given in dB here and
converted to linear scale before any library call.

Exit status: 0 on success, 1 on a numeric or convergence failure (or a
failed verification check), 2 on a usage or domain error.
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import DomainError, InsufficientDataError, PhaseQuantError
from .fileio import to_csv, to_json
from .info import capacity_from_snr, entropy_bits
from .montecarlo import DEFAULT_SEED
from .oracle import DEFAULT_FAMILIES, InputGrid, blahut_arimoto, rate_sweep
from .outage import GenieCapacity, outage_exponent_fit, outage_semianalytic, parse_policy, policy_compare
from .quantizer import ComplexPoint, PhaseQuantizer, transition_row
from .verify import run_checks

log = logging.getLogger("phasequant")

MAX_BITS = 10
# keys that change how a run executes but not what it computes
NOT_ECHOED = ("out", "workers", "exponent_out")


class UsageError(Exception):
    pass


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, float) / 10.0)


def parse_grid(value):
    """``"start:stop:step"`` (inclusive) or ``"a,b,c"``, or a list, into a tuple of floats."""
    if isinstance(value, (list, tuple)):
        vals = [float(v) for v in value]
    else:
        text = str(value).strip()
        try:
            if ":" in text:
                start, stop, step = (float(t) for t in text.split(":"))
                if not step > 0:
                    raise UsageError(f"grid step must be > 0 in {text!r}")
                n = int(math.floor((stop - start) / step + 1e-9)) + 1
                if n < 1:
                    raise UsageError(f"empty grid {text!r}")
                # rounding keeps decimal steps exact-looking and reproducible
                vals = [round(start + k * step, 12) for k in range(n)]
            else:
                vals = [float(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"cannot parse grid {text!r}; use start:stop:step or a,b,c") from None
    if not vals:
        raise UsageError("grid is empty")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError("grid values must be finite")
    return tuple(vals)


def parse_window(value):
    if isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        parts = str(value).split(":")
    try:
        lo, hi = (float(p) for p in parts)
    except (TypeError, ValueError):
        raise UsageError(f"window must be lo:hi in dB, got {value!r}") from None
    if not lo < hi:
        raise UsageError(f"window must satisfy lo < hi, got {value!r}")
    return (lo, hi)


@dataclass(frozen=True)
class Option:
    name: str
    type: object
    default: object
    help: str
    check: object = None
    repeat: bool = False
    shown: str = None

    @property
    def dest(self):
        return self.name.replace("-", "_")


def _int_range(lo, hi=None):
    def check(v):
        if v != int(v) or v < lo or (hi is not None and v > hi):
            bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
            return f"must be an integer in {bound}"
        return None

    return check


def _nonneg(v):
    return None if math.isfinite(v) and v >= 0 else "must be finite and >= 0"


def _pos(v):
    return None if math.isfinite(v) and v > 0 else "must be finite and > 0"


def _finite(v):
    return None if math.isfinite(v) else "must be finite"


BITS = Option("bits", int, 3, "quantizer resolution b (2**b sectors)", _int_range(1, MAX_BITS))
COMMON = (
    Option("seed", int, DEFAULT_SEED, "random seed", _int_range(0), shown=hex(DEFAULT_SEED)),
    Option("workers", int, 1, "worker threads; results do not depend on this", _int_range(1, 256)),
    Option("out", str, None, "output file; standard output if omitted"),
)

COMMANDS = {
    "transition": (
        "transition probabilities W_y for one input and the output entropy",
        "csv",
        (
            BITS,
            Option("alpha", float, 1.0, "normalized SNR |u|^2 (linear)", _nonneg),
            Option("theta", float, 0.0, "input phase (rad)", _finite),
        ),
    ),
    "capacity": (
        "closed-form capacity across an SNR grid",
        "csv",
        (
            BITS,
            Option("snr-db", parse_grid, "-10:30:1", "SNR grid in dB, start:stop:step or a,b,c"),
        ),
    ),
    "figure1": (
        "rates of PSK orders, a discretized Gaussian input and capacity versus SNR",
        "csv",
        (
            BITS,
            Option("snr-db", parse_grid, "-10:30:1", "SNR grid in dB, start:stop:step or a,b,c"),
            Option("families", str, ",".join(DEFAULT_FAMILIES), "comma-separated input families"),
        ),
    ),
    "verify": (
        "numerical certificate suite; exits 1 if any check fails",
        "csv",
        (
            BITS,
            Option("snr-db", float, 10.0, "SNR in dB", _finite),
            Option("n-samples", int, 10**6, "Monte Carlo draws for the outage probe", _int_range(1000)),
            Option("inject-wrong-bisector", bool, False, "negative control: test the KKT equality at theta=0"),
            Option("skip-outage", bool, False, "skip the Monte Carlo outage probe"),
        ),
    ),
    "outage": (
        "Monte Carlo outage probability under Rayleigh fading, with exponent fits",
        "csv",
        (
            Option("bits", int, 2, "quantizer resolution b (2**b sectors)", _int_range(1, MAX_BITS)),
            Option("snr-db", parse_grid, "0:40:5", "average SNR grid in dB"),
            Option("rate", float, 1.0, "target rate R (bits per channel use)", _nonneg),
            Option("policy", str, None, "genie, fixed-psk:M or fixed-psk:M:ROT; repeatable (default: fixed-psk:2**b)", repeat=True),
            Option("n-samples", int, 10**6, "fading draws per policy", _int_range(1)),
            Option("window", parse_window, None, "exponent fit window lo:hi in dB; repeatable (default: 20:40)", repeat=True),
            Option("exponent-out", str, None, "exponent JSON file (default: OUT.exponent.json, or stderr)"),
        ),
    ),
    "oracle": (
        "power-constrained Blahut-Arimoto on a polar input grid",
        "json",
        (
            BITS,
            Option("snr-db", float, 0.0, "SNR in dB", _finite),
            Option("n-phases", int, 24, "grid phases", _int_range(1, 4096)),
            Option("n-radii", int, 8, "grid radii, the origin included", _int_range(1, 4096)),
            Option("max-radius-factor", float, 1.75, "largest radius as a multiple of sqrt(P')", _pos),
            Option("tol", float, 1e-6, "duality-gap tolerance in bits", _pos),
            Option("max-iter", int, 20000, "iteration cap per inner solve", _int_range(1)),
        ),
    ),
}


def _options(command):
    return COMMANDS[command][2] + COMMON + (Option("format", str, COMMANDS[command][1], "output format: csv or json"),)


def build_parser():
    parser = argparse.ArgumentParser(prog="phasequant", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, (summary, _, _) in COMMANDS.items():
        p = sub.add_parser(name, help=summary, description=summary)
        p.add_argument("--config", help="JSON file of parameter defaults (keys as flag names)")
        for opt in _options(name):
            flag = "--" + opt.name
            shown = opt.default if opt.shown is None else opt.shown
            text = opt.help if shown is None else f"{opt.help} (default: {shown})"
            if opt.type is bool:
                p.add_argument(flag, action="store_const", const=True, default=None, help=text)
            elif opt.repeat:
                p.add_argument(flag, action="append", default=None, help=text)
            elif opt.type is parse_grid:
                # allow grids that start with a minus sign, e.g. --snr-db=-10:30:1
                p.add_argument(flag, default=None, help=text, metavar="GRID")
            elif opt.name == "format":
                p.add_argument(flag, choices=("csv", "json"), default=None, help=text)
            else:
                # values stay strings and are converted after merging with the config file
                p.add_argument(flag, default=None, help=text)
    return parser


def _coerce(opt, value):
    if value is None:
        return None
    if opt.repeat:
        values = value if isinstance(value, list) else [value]
        return [_coerce(Option(opt.name, opt.type, None, ""), v) for v in values]
    if opt.type is bool:
        if not isinstance(value, bool):
            raise UsageError(f"{opt.name} must be true or false")
        return value
    if opt.type is parse_grid or opt.type is parse_window:
        return opt.type(value)
    if opt.type is int:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise UsageError(f"{opt.name} must be an integer")
        try:
            return int(value, 0) if isinstance(value, str) else value
        except ValueError:
            raise UsageError(f"{opt.name} must be an integer, got {value!r}") from None
    if opt.type is float:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise UsageError(f"{opt.name} must be a number, got {value!r}") from None
    return str(value)


def resolve(command, args):
    """Merge defaults, config file and flags; range-check and return a dict."""
    opts = {o.dest: o for o in _options(command)}
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config file must hold a JSON object")
        config = {k.replace("-", "_"): v for k, v in config.items()}
        unknown = sorted(set(config) - set(opts))
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
    eff = {}
    for dest, opt in opts.items():
        value = opt.default
        if dest in config:
            value = config[dest]
        flag = getattr(args, dest, None)
        if flag is not None:
            value = flag
        value = _coerce(opt, value)
        if opt.check is not None and value is not None:
            problem = opt.check(value)
            if problem:
                raise UsageError(f"--{opt.name} {problem}, got {value!r}")
        eff[dest] = value
    if eff["format"] not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if command == "outage":
        bits = eff["bits"]
        eff["policy"] = [str(parse_policy(p, bits)) for p in (eff["policy"] or [f"fixed-psk:{2**bits}"])]
        eff["window"] = [list(w) for w in (eff["window"] or [(20.0, 40.0)])]
    return eff


def echoed(command, eff):
    cfg = {k: v for k, v in eff.items() if k not in NOT_ECHOED}
    cfg["command"] = command
    cfg["version"] = __version__
    return cfg


def emit(eff, cfg, columns, rows, extra_header=(), payload=None):
    if eff["format"] == "json":
        body = {"config": cfg, "rows": [{c: r[c] for c in columns} for r in rows]}
        body.update(payload or {})
        return to_json(body)
    return to_csv(rows, columns, cfg, extra_header)


def cmd_transition(eff, cfg):
    q = PhaseQuantizer(eff["bits"])
    row = transition_row(q, ComplexPoint.from_alpha(eff["alpha"], eff["theta"]))
    h = float(entropy_bits(row))
    rows = [{"y": y, "probability": float(p)} for y, p in enumerate(row)]
    return emit(eff, cfg, ("y", "probability"), rows, (f"entropy_bits = {h:.16e}",), {"entropy_bits": h}), 0


def cmd_capacity(eff, cfg):
    snr_db = np.array(eff["snr_db"])
    caps = capacity_from_snr(db_to_linear(snr_db), eff["bits"])
    rows = [{"snr_db": float(s), "capacity_bits": float(c)} for s, c in zip(snr_db, caps)]
    return emit(eff, cfg, ("snr_db", "capacity_bits"), rows), 0


def _family_column(family):
    return family.replace(":", "")


def cmd_figure1(eff, cfg):
    q = PhaseQuantizer(eff["bits"])
    families = tuple(f.strip() for f in eff["families"].split(",") if f.strip())
    if not families:
        raise UsageError("no input families given")
    long_rows = rate_sweep(q, families, eff["snr_db"], workers=eff["workers"])
    wide = {}
    for r in long_rows:
        row = wide.setdefault(r["snr_db"], {"snr_db": r["snr_db"]})
        col = _family_column(r["family"])
        row[f"rate_{col}"] = r["rate_bits"]
        if r["family"].startswith("psk:"):
            row[f"theta_{col}"] = r["theta_star"]
    columns = ["snr_db"]
    for fam in families:
        col = _family_column(fam)
        columns.append(f"rate_{col}")
        if fam.startswith("psk:"):
            columns.append(f"theta_{col}")
    rows = [wide[s] for s in sorted(wide)]
    return emit(eff, cfg, columns, rows), 0


def cmd_verify(eff, cfg):
    checks = run_checks(
        bits=eff["bits"],
        snr=float(db_to_linear(eff["snr_db"])),
        inject_wrong_bisector=bool(eff["inject_wrong_bisector"]),
        outage_probe=not eff["skip_outage"],
        n_samples=eff["n_samples"],
        seed=eff["seed"],
    )
    for c in checks:
        print(c.line(), file=sys.stderr)
    rows = [
        {"check": c.name, "passed": c.passed, "measured": c.measured, "threshold": c.threshold, "detail": c.detail}
        for c in checks
    ]
    failed = sum(not c.passed for c in checks)
    summary = f"{len(checks) - failed}/{len(checks)} checks passed"
    print(summary, file=sys.stderr)
    text = emit(eff, cfg, ("check", "passed", "measured", "threshold", "detail"), rows, (summary,), {"summary": summary})
    return text, (1 if failed else 0)


def cmd_outage(eff, cfg):
    bits = eff["bits"]
    policies = [parse_policy(p, bits) for p in eff["policy"]]
    if len(set(eff["policy"])) != len(policies):
        raise UsageError("duplicate --policy values")
    windows = eff["window"]
    rate = eff["rate"]
    cmp = policy_compare(bits, eff["snr_db"], rate, policies, eff["n_samples"], eff["seed"], eff["workers"])
    rows = []
    for r in cmp.rows:
        closed = float("nan")
        if r.policy == str(GenieCapacity()):
            closed = 1.0 if rate >= bits else outage_semianalytic(bits, float(db_to_linear(r.snr_db)), rate)
        rows.append(dict(vars(r), closed_form=closed))
    columns = ("snr_db", "rate_target", "policy", "p_out", "ci_low", "ci_high", "events", "n_samples", "seed", "closed_form")
    fits = {}
    for name, curve in cmp.curves.items():
        fits[name] = []
        for w in windows:
            try:
                fits[name].append(outage_exponent_fit(curve, w).to_dict())
            except InsufficientDataError as exc:
                fits[name].append({"window_db": list(w), "error": str(exc)})
    report = {"config": cfg, "exponents": fits, "crossover_snr_db": cmp.crossover}
    for name, at in cmp.crossover.items():
        if at is not None:
            log.warning("%s beats the fixed %d-PSK reference from %.1f dB", name, 2**bits, at)
    return emit(eff, cfg, columns, rows), 0, to_json(report)


def cmd_oracle(eff, cfg):
    p = float(db_to_linear(eff["snr_db"]))
    q = PhaseQuantizer(eff["bits"])
    grid = InputGrid.polar(p, eff["bits"], eff["n_phases"], eff["n_radii"], eff["max_radius_factor"])
    res = blahut_arimoto(q, grid, p, tol=eff["tol"], max_iter=eff["max_iter"])
    summary = {k: v for k, v in res.to_dict().items() if k not in ("weights", "amplitudes", "phases")}
    if eff["format"] == "json":
        text = to_json({"config": cfg, "result": res.to_dict()})
    else:
        rows = [
            {"amplitude": a, "phase": t, "weight": w}
            for a, t, w in zip(res.amplitudes, res.phases, res.weights)
        ]
        extra = [f"{k} = {json.dumps(v)}" for k, v in sorted(summary.items())]
        text = to_csv(rows, ("amplitude", "phase", "weight"), cfg, extra)
    if not res.converged:
        log.error("Blahut-Arimoto did not converge (rate %.6g, bound %.6g)", res.rate, res.upper_bound)
        return text, 1
    return text, 0


HANDLERS = {
    "transition": cmd_transition,
    "capacity": cmd_capacity,
    "figure1": cmd_figure1,
    "verify": cmd_verify,
    "outage": cmd_outage,
    "oracle": cmd_oracle,
}


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _join_negative_values(argv):
    # let "--snr-db -10:30:1" work without the "=" form argparse otherwise needs
    out = []
    it = iter(argv)
    for tok in it:
        if tok in VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is not None and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


VALUE_FLAGS = ("--snr-db", "--window", "--theta", "--alpha", "--rate")


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        eff = resolve(args.command, args)
        cfg = echoed(args.command, eff)
        result = HANDLERS[args.command](eff, cfg)
    except (UsageError, DomainError) as exc:
        parser.exit(2, f"phasequant {args.command}: error: {exc}\n")
    except PhaseQuantError as exc:
        print(f"phasequant {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FloatingPointError as exc:
        print(f"phasequant {args.command}: numeric failure: {exc}", file=sys.stderr)
        return 1
    text, code = result[0], result[1]
    try:
        _write(eff["out"], text)
        if len(result) > 2:
            side = eff.get("exponent_out") or (eff["out"] + ".exponent.json" if eff["out"] else None)
            if side is None:
                sys.stderr.write(result[2])
            else:
                _write(side, result[2])
    except OSError as exc:
        parser.exit(2, f"phasequant {args.command}: error: cannot write output: {exc}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
