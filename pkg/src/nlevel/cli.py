"""Command-line interface.

Every subcommand builds a :class:`RunConfig`, calls one library operation
and writes a report.  Exit codes: 0 success, 1 usage error, 2 rejected
input or failed check, 3 numerical non-convergence.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import __version__
from .arith import EulerTruncation
from .errors import (DuplicateDiscriminant, MalformedLine, NonAscendingOrdinate, NonConvergence,
                     ValidationError)
from .haar import RngStream, empirical_density, mc_ratio
from .ntdensity import (REMAINDER_CAVEAT, FamilyDensityRequest, ZeroDatabase,
                        empirical_from_zeros, jstar_family, nt_density, one_level_direct,
                        parse_family, scaled_two_level)
from .quadrature import QuadratureSpec, circle_residue
from .rmtdensity import (density_contour, density_onaxis, density_restricted, kernel_density,
                         sides_label)
from .shiftcalc import GroupSpec, jstar, ratio_average
from .testfns import parse_test_function

__all__ = ["RunConfig", "Report", "run", "main", "parse_zero_file", "write_report",
           "read_config", "write_config", "EXIT_OK", "EXIT_USAGE", "EXIT_VALIDATION",
           "EXIT_NONCONVERGENCE"]

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NONCONVERGENCE = 0, 1, 2, 3
GROUPS = {"so": "SO_even", "usp": "USp"}
# results never depend on these, so reports stay byte-identical across them
EXCLUDED_FROM_REPORT = ("threads", "output")


@dataclass
class RunConfig:
    """Flat, serializable description of one run."""

    command: str = ""
    group: str = "so"
    family: str = ""
    N: int = 5
    n: int = 1
    X: int = 1000
    p_max: int = 1000
    test_fn: str = "one"
    route: str = "contour"
    nodes: int = 0
    panels: int = 0
    offset: float = 0.0
    q: int = 0
    alpha: str = ""
    beta: str = ""
    a: float = 1.0
    b: float = 1.0
    seed: int = 0
    samples: int = 10000
    threads: int = 1
    zeros: str = ""
    output: str = ""
    format: str = "json"

    def to_text(self):
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text):
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep or key not in types:
                raise ValidationError(f"config line {lineno}: {line!r}")
            conv = types[key] if types[key] in (int, float) else str
            try:
                kw[key] = conv(val.strip())
            except ValueError:
                raise ValidationError(f"config line {lineno}: bad value {val!r}") from None
        return cls(**kw)


def read_config(path):
    with open(path, encoding="ascii") as fh:
        return RunConfig.from_text(fh.read())


def write_config(cfg, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(cfg.to_text())


@dataclass
class Report:
    """Config echo, result fields, per-term breakdown and provenance."""

    config: dict
    result: dict
    terms: dict
    provenance: dict

    def to_json(self):
        return json.dumps(_plain(asdict(self)), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    return x


def write_report(report, fmt, path=None):
    """Write ``report`` as CSV or JSON to ``path`` (stdout when None).

    CSV rows are the (K, L, M) terms in sorted order followed by a summary
    row with the total in ``value_re``/``value_im``.
    """
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["term_K", "term_L", "term_M", "value_re", "value_im"])
        for sides in sorted(report.terms):
            lab = sides_label(sides)
            v = report.terms[sides]
            re, im = (v if isinstance(v, (list, tuple)) else (complex(v).real, complex(v).imag))
            w.writerow([lab["K"], lab["L"], lab["M"], repr(float(re)), repr(float(im))])
        w.writerow(["summary", "", "", repr(float(report.result.get("value", 0.0))),
                    repr(float(report.result.get("imag", 0.0)))])
        text = buf.getvalue()
    else:
        raise ValidationError(f"unknown format {fmt!r}")
    if path:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def parse_zero_file(path):
    """Read a zero file into a :class:`ZeroDatabase`.

    ASCII lines; ``#`` starts a comment line; ``d=<positive integer>`` opens
    a block; other lines are ascending positive ordinates of the open block.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError:
        raise MalformedLine(0, "file is not ASCII") from None
    blocks = {}
    current = None
    for lineno, line in enumerate(text.split("\n"), 1):
        if line.endswith("\r"):
            raise MalformedLine(lineno, "CR line ending")
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if s.startswith("d="):
            try:
                d = int(s[2:])
            except ValueError:
                raise MalformedLine(lineno, line) from None
            if d <= 0:
                raise MalformedLine(lineno, line)
            if d in blocks:
                raise DuplicateDiscriminant(d)
            blocks[d] = []
            current = d
            continue
        if current is None:
            raise MalformedLine(lineno, line)
        digits = sum(c.isdigit() for c in s.split("e")[0].split("E")[0].lstrip("0."))
        try:
            g = float(s)
        except ValueError:
            raise MalformedLine(lineno, line) from None
        if not math.isfinite(g) or g <= 0 or digits > 17:
            raise MalformedLine(lineno, line)
        if blocks[current] and g <= blocks[current][-1]:
            raise NonAscendingOrdinate(lineno)
        blocks[current].append(g)
    meta = {"source": str(path), "empty": not blocks}
    return ZeroDatabase({d: np.array(v) for d, v in blocks.items()}, meta)


def _shifts(text):
    if not text.strip():
        return []
    try:
        return [complex(t.strip().replace(" ", "")) for t in text.split(",")]
    except ValueError:
        raise ValidationError(f"cannot parse shifts {text!r}") from None


def _quad(cfg, default):
    kw = {}
    if cfg.nodes:
        kw["nodes_per_dim"] = cfg.nodes
    if cfg.panels:
        kw["panels"] = cfg.panels
    if cfg.offset:
        kw["contour_offset"] = cfg.offset
    return replace(default, **kw)


def _group(cfg):
    if cfg.group not in GROUPS:
        raise ValidationError(f"group must be one of {sorted(GROUPS)}")
    return GroupSpec(GROUPS[cfg.group], cfg.N)


def _density_report(res, op, extra=None):
    result = {"value": res.value, "imag": res.imag, "error_estimate": res.error_estimate}
    meta = {k: v for k, v in res.metadata.items() if k != "subset_audit"}
    prov = {"operation": op, "metadata": meta}
    if extra:
        prov.update(extra)
    return result, {k: complex(v) for k, v in res.terms.items()}, prov


def _cmd_rmt_density(cfg):
    g = _group(cfg)
    f = parse_test_function(cfg.test_fn, cfg.n, periodic=True)
    fun = density_contour if cfg.route == "contour" else density_onaxis
    quad = _quad(cfg, QuadratureSpec())
    return _density_report(fun(g, cfg.n, f, quad), f"rmtdensity.density_{cfg.route}")


def _cmd_rmt_mc(cfg):
    g = _group(cfg)
    f = parse_test_function(cfg.test_fn, cfg.n, periodic=True)
    mean, err = empirical_density(g, f, cfg.n, True, cfg.samples, RngStream(cfg.seed),
                                  cfg.threads)
    return ({"value": float(np.real(mean)), "imag": 0.0, "error_estimate": float(err),
             "stderr": float(err)}, {}, {"operation": "haar.empirical_density"})


def _cmd_ratios_check(cfg):
    g = _group(cfg)
    A, B = _shifts(cfg.alpha), _shifts(cfg.beta)
    exact = complex(ratio_average(A, B, g))
    mean, err = mc_ratio(g, A, B, cfg.samples, RngStream(cfg.seed), cfg.threads)
    z = abs(mean - exact) / max(err, 1e-300)
    return ({"value": exact.real, "imag": exact.imag, "error_estimate": 0.0,
             "mc_mean": complex(mean), "mc_stderr": float(err), "z_score": float(z),
             "pass": bool(z < 4)}, {}, {"operation": "shiftcalc.ratio_average vs haar.mc_ratio"})


def _cmd_residue_check(cfg):
    A = _shifts(cfg.alpha)
    if len(A) < 1:
        raise ValidationError("residue-check needs --alpha with at least one shift")
    beta, rest = A[0], A[1:]
    if cfg.family:
        fam = parse_family(cfg.family)
        trunc = EulerTruncation(cfg.p_max)
        B = _shifts(cfg.beta)

        def fun(z):
            return np.array([jstar_family(fam, [x, beta] + rest, B, cfg.X, trunc) for x in z])
        lhs = circle_residue(fun, -beta)
        rhs = (jstar_family(fam, [beta] + rest, B, cfg.X, trunc)
               + jstar_family(fam, [-beta] + rest, B, cfg.X, trunc)
               - jstar_family(fam, rest, B + [beta], cfg.X, trunc))
        op = "ntdensity.jstar_family"
    else:
        g = _group(cfg)

        def fun(z):
            return np.array([jstar([x, beta] + rest, g) for x in z])
        lhs = circle_residue(fun, -beta)
        rhs = jstar([beta] + rest, g) + jstar([-beta] + rest, g) + 2 * g.N * jstar(rest, g)
        op = "shiftcalc.jstar"
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return ({"value": complex(lhs).real, "imag": complex(lhs).imag, "error_estimate": rel,
             "expected": complex(rhs), "relative_error": float(rel), "pass": bool(rel < 1e-6)},
            {}, {"operation": op + " circle residue"})


def _cmd_restricted(cfg):
    g = _group(cfg)
    f = parse_test_function(cfg.test_fn, cfg.n)
    quad = _quad(cfg, QuadratureSpec(panels=64, order=16, contour_offset=0.25))
    res = density_restricted(g, cfg.n, f, cfg.q or None, quad)
    return _density_report(res, "rmtdensity.density_restricted")


def _cmd_kernel(cfg):
    sym = GROUPS.get(cfg.group)
    if sym is None:
        raise ValidationError(f"group must be one of {sorted(GROUPS)}")
    f = parse_test_function(cfg.test_fn, cfg.n)
    return _density_report(kernel_density(sym, cfg.n, f), "rmtdensity.kernel_density")


def _family(cfg):
    if not cfg.family:
        raise ValidationError("this command needs --family")
    return parse_family(cfg.family)


def _cmd_nt_density(cfg):
    fam = _family(cfg)
    f = parse_test_function(cfg.test_fn, cfg.n)
    quad = _quad(cfg, QuadratureSpec(panels=64, order=16, contour_offset=0.2, tol=1e-8))
    req = FamilyDensityRequest(fam, cfg.n, f, cfg.X, EulerTruncation(cfg.p_max), quad)
    return _density_report(nt_density(req, cfg.route), "ntdensity.nt_density",
                           {"caveat": REMAINDER_CAVEAT})


def _cmd_nt_onelevel(cfg):
    f = parse_test_function(cfg.test_fn, 1)
    val = one_level_direct(_family(cfg).curve, f, cfg.X, EulerTruncation(cfg.p_max))
    return ({"value": val, "imag": 0.0, "error_estimate": "quadrature tol 1e-8"}, {},
            {"operation": "ntdensity.one_level_direct", "caveat": REMAINDER_CAVEAT})


def _cmd_nt_twolevel(cfg):
    f = parse_test_function(cfg.test_fn, 2)
    rep = scaled_two_level(_family(cfg).curve, f, cfg.X, EulerTruncation(cfg.p_max), a=cfg.a, b=cfg.b)
    rep["imag"] = 0.0
    return rep, {}, {"operation": "ntdensity.scaled_two_level", "caveat": REMAINDER_CAVEAT}


def _cmd_nt_empirical(cfg):
    if not cfg.zeros:
        raise ValidationError("nt-empirical needs --zeros")
    db = parse_zero_file(cfg.zeros)
    f = parse_test_function(cfg.test_fn, cfg.n)
    sel = parse_family(cfg.family) if cfg.family else None
    val = empirical_from_zeros(db, f, cfg.n, sel)
    top = max((float(v[-1]) for v in db.blocks.values() if len(v)), default=0.0)
    return ({"value": val, "imag": 0.0, "error_estimate": "exact sum",
             "truncation_bias": float(f.tail(top)) if top else 0.0}, {},
            {"operation": "ntdensity.empirical_from_zeros", "empty_database": db.metadata["empty"]})


def _cmd_selftest(cfg):
    from .selftest import run_battery
    results = run_battery()
    ok = all(r["pass"] for r in results)
    for r in results:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['name']}: {r['detail']}", file=sys.stderr)
    return ({"value": float(sum(r["pass"] for r in results)), "imag": 0.0,
             "error_estimate": "exact", "checks": len(results), "pass": ok}, {},
            {"operation": "selftest"})


COMMANDS = {
    "rmt-density": _cmd_rmt_density,
    "rmt-mc": _cmd_rmt_mc,
    "ratios-check": _cmd_ratios_check,
    "residue-check": _cmd_residue_check,
    "restricted-density": _cmd_restricted,
    "kernel-density": _cmd_kernel,
    "nt-density": _cmd_nt_density,
    "nt-onelevel": _cmd_nt_onelevel,
    "nt-twolevel-scaled": _cmd_nt_twolevel,
    "nt-empirical": _cmd_nt_empirical,
    "selftest": _cmd_selftest,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parser():
    p = _Parser(prog="nlevel", description="n-level densities and ratio averages")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key=value file; flags override it")
        s.add_argument("--group", choices=sorted(GROUPS))
        s.add_argument("--family", help="'dirichlet' or a curve 'A,B,M,omega,...'")
        s.add_argument("--curve", dest="family", help="alias of --family")
        s.add_argument("--dim", dest="N", type=int)
        s.add_argument("--order", dest="n", type=int)
        s.add_argument("--X", "--x-max", dest="X", type=int)
        s.add_argument("--p-max", dest="p_max", type=int)
        s.add_argument("--test-fn", dest="test_fn")
        s.add_argument("--route", choices=["contour", "onaxis"])
        s.add_argument("--nodes", type=int)
        s.add_argument("--panels", type=int)
        s.add_argument("--offset", type=float)
        s.add_argument("--q", type=int)
        s.add_argument("--alpha")
        s.add_argument("--beta")
        s.add_argument("--a", type=float)
        s.add_argument("--b", type=float)
        s.add_argument("--seed", type=int)
        s.add_argument("--samples", type=int)
        s.add_argument("--threads", type=int)
        s.add_argument("--zeros")
        s.add_argument("--output")
        s.add_argument("--format", choices=["csv", "json"])
    return p


def _config(argv):
    ns = _parser().parse_args(argv)
    cfg = read_config(ns.config) if ns.config else RunConfig()
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    cfg.command = ns.command
    if cfg.threads < 1:
        raise ValidationError("--threads must be at least 1")
    return cfg


def run(argv=None):
    """Run one subcommand; returns the exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = _config(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result, terms, prov = COMMANDS[cfg.command](cfg)
    except (ValidationError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NonConvergence as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    prov.update({"tool_version": __version__, "seed": cfg.seed})
    echo = {k: v for k, v in asdict(cfg).items() if k not in EXCLUDED_FROM_REPORT}
    report = Report(echo, result, terms, prov)
    write_report(report, cfg.format, cfg.output or None)
    if result.get("pass") is False:
        return EXIT_VALIDATION
    return EXIT_OK


def main():
    sys.exit(run())
