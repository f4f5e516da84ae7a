"""Command line front end: ``isoplex solve|verify|topo|bench``.

Exit codes: 0 success, 1 unreadable or malformed input, 2 refinement
budget exhausted, 3 certificate rejected.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import statistics
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .criterion import TildeP
from .driver import SolveParams, solve
from .minnorm import DEFAULT_TOL
from .poly import HomogeneousPoly, PolyParseError, PolySystem, multi_indices, parse_polys, variables
from .topo import analyse, export_off, extract, projective_quotient
from .verify import (
    CertificateFormatError,
    certificate_polys,
    certificate_text_for,
    check_certificate,
    decomposition_of,
    parse_certificate,
)

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_REJECT = 0, 1, 2, 3

CAVEAT_M1 = "isotopy (single equation: the certified condition implies the approximation is isotopic to the variety)"
CAVEAT_M = (
    "strongly full rank only (m > 1: the certified condition is the hypothesis of the codimension-m "
    "extension, which is conjectural; isotopy is not proved)"
)


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    certificate: str | None = None
    out: str = "."
    fmt: str = "text"
    params: SolveParams = field(default_factory=SolveParams)
    verify: bool = True


# ---------------------------------------------------------------------------
# helpers


def _setup_logging():
    level = os.environ.get("ISOPLEX_LOG")
    if level:
        logging.basicConfig(
            level=getattr(logging, level.upper(), logging.DEBUG),
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
            stream=sys.stderr,
        )


def _read_text(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_system(path) -> PolySystem:
    return parse_polys(_read_text(path))


def _emit(report: dict, fmt: str, path: str | None = None):
    if fmt == "json":
        text = json.dumps(report, sort_keys=False) + "\n"
    else:
        lines = []
        for k, v in report.items():
            if isinstance(v, (list, tuple)):
                v = " ".join(str(x) for x in v) if not v or not isinstance(v[0], (list, tuple)) else "; ".join(
                    " ".join(map(str, x)) for x in v
                )
            lines.append(f"{k}: {v}")
        text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _topology(dec, tilde, out_dir=None):
    cc = extract(dec, tilde)
    pq = projective_quotient(cc)
    proj = analyse(pq)
    sph = analyse(cc)
    files = []
    if out_dir is not None and (cc.top in (1, 2) or not cc.cells):
        files = export_off(cc, os.path.join(out_dir, "variety.off"))
    return proj, sph, files


def _guarantee(m: int) -> str:
    return CAVEAT_M1 if m == 1 else CAVEAT_M


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg: RunConfig) -> int:
    try:
        ps = _load_system(cfg.input)
    except PolyParseError as exc:
        print(f"{cfg.input}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    os.makedirs(cfg.out, exist_ok=True)
    outcome = solve(ps, cfg.params)
    st = outcome.stats
    report = {
        "status": outcome.status.value,
        "nvars": ps.nvars,
        "m": ps.m,
        "degrees": list(ps.degrees),
        "time": round(st.wall_time, 6),
        "simplices": outcome.simplices,
        "max_splits": st.max_depth,
        "refinements": st.refinements,
        "faces_tested": st.faces_tested,
    }
    if not outcome.certified:
        f = outcome.failed
        if f is not None:
            report["failed_face"] = list(f.face)
            report["failed_depth"] = f.depth
        _emit(report, cfg.fmt, os.path.join(cfg.out, "report.txt"))
        return EXIT_BUDGET
    text = certificate_text_for(outcome)
    with open(os.path.join(cfg.out, "certificate.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    if cfg.verify:
        t0 = time.perf_counter()
        verdict = check_certificate(ps, text)
        report["q_time"] = round(time.perf_counter() - t0, 6)
        report["verified"] = "accept" if verdict else "reject"
        if not verdict:
            report["reject"] = str(verdict)
            _emit(report, cfg.fmt, os.path.join(cfg.out, "report.txt"))
            return EXIT_REJECT
    else:
        report["q_time"] = None
        report["verified"] = "UNVERIFIED"
    proj, sph, files = _topology(outcome.decomposition, outcome.tilde, cfg.out)
    report.update(
        components=proj.components,
        betti=list(proj.betti),
        component_betti=[list(b) for b in proj.component_betti],
        euler=proj.euler,
        sphere_components=sph.components,
        sphere_betti=list(sph.betti),
        guarantee=_guarantee(ps.m),
        mesh=[os.path.basename(f) for f in files],
    )
    _emit(report, cfg.fmt, os.path.join(cfg.out, "report.txt"))
    return EXIT_OK


def _load_certificate(cfg: RunConfig):
    text = _read_text(cfg.certificate)
    cert = parse_certificate(text)
    ps = _load_system(cfg.input) if cfg.input else certificate_polys(cert)
    return cert, ps


def cmd_verify(cfg: RunConfig) -> int:
    try:
        cert, ps = _load_certificate(cfg)
    except PolyParseError as exc:
        print(f"{cfg.input}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, CertificateFormatError) as exc:
        print(f"malformed certificate: {exc}", file=sys.stderr)
        return EXIT_INPUT
    t0 = time.perf_counter()
    verdict = check_certificate(ps, cert)
    report = {"verified": "accept" if verdict else "reject", "q_time": round(time.perf_counter() - t0, 6)}
    if verdict:
        report.update(faces=verdict.faces, leaves=verdict.leaves, guarantee=_guarantee(ps.m))
        _emit(report, cfg.fmt)
        return EXIT_OK
    report.update(
        face=list(verdict.face) if verdict.face is not None else None, path=verdict.path, reason=verdict.reason
    )
    _emit(report, cfg.fmt)
    return EXIT_REJECT


def cmd_topo(cfg: RunConfig) -> int:
    try:
        cert, ps = _load_certificate(cfg)
    except PolyParseError as exc:
        print(f"{cfg.input}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, CertificateFormatError) as exc:
        print(f"malformed certificate: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = {}
    if cfg.verify:
        verdict = check_certificate(ps, cert)
        report["verified"] = "accept" if verdict else "reject"
        if not verdict:
            report["reject"] = str(verdict)
            _emit(report, cfg.fmt)
            return EXIT_REJECT
    else:
        report["verified"] = "UNVERIFIED"
    try:
        dec = decomposition_of(cert)
    except ValueError as exc:
        print(f"malformed certificate: {exc}", file=sys.stderr)
        return EXIT_INPUT
    tilde = TildeP(dict(cert.tilde), cert.m)
    os.makedirs(cfg.out, exist_ok=True)
    proj, sph, files = _topology(dec, tilde, cfg.out)
    report.update(
        components=proj.components,
        betti=list(proj.betti),
        component_betti=[list(b) for b in proj.component_betti],
        euler=proj.euler,
        sphere_components=sph.components,
        sphere_betti=list(sph.betti),
        guarantee=_guarantee(ps.m),
        mesh=[os.path.basename(f) for f in files],
    )
    _emit(report, cfg.fmt)
    return EXIT_OK


# ---------------------------------------------------------------------------
# benchmark


def bombieri_random(dim: int, degree: int, rng: np.random.Generator) -> HomogeneousPoly:
    """Random form in ``dim + 1`` variables, coefficient of x^a ~ N(0,1) sqrt(d!/a!).

    Coefficients are rounded to the dyadic grid 2^-20 so the input is exact.
    """
    nvars = dim + 1
    terms = {}
    for a in multi_indices(nvars, degree):
        w = math.sqrt(math.factorial(degree) / math.prod(math.factorial(k) for k in a))
        c = Fraction(round(float(rng.standard_normal()) * w * 2**20), 2**20)
        if c:
            terms[a] = c
    return HomogeneousPoly(nvars, terms, degree=degree)


def p_eps(eps) -> HomogeneousPoly:
    x, y, t = variables(3)
    return (x**2 + y**2 - t**2) ** 2 + Fraction(eps) * x * y * (x - y) * (x + y)


def circles(alpha) -> HomogeneousPoly:
    x, y, t = variables(3)
    a = Fraction(alpha)
    return (x**2 + y**2 - (1 - a) ** 2 * t**2) * (x**2 + y**2 - (1 + a) ** 2 * t**2)


FAMILIES = {
    "peps": [("peps eps=" + e, lambda e=e: PolySystem([p_eps(Fraction(e))])) for e in ("1/2", "1/20", "1/200")],
    "circles": [
        ("circles 2a=" + a, lambda a=a: PolySystem([circles(Fraction(a) / 2)])) for a in ("1", "1/10")
    ],
}


def bench_case(name: str, ps: PolySystem, params: SolveParams, verify: bool = True) -> dict:
    row = {"case": name, "dim": ps.nvars - 1, "degrees": list(ps.degrees)}
    try:
        outcome = solve(ps, params)
        row.update(
            status=outcome.status.value,
            time=outcome.stats.wall_time,
            simplices=outcome.simplices,
            max_splits=outcome.stats.max_depth,
        )
        if outcome.certified:
            q = None
            if verify:
                t0 = time.perf_counter()
                ok = check_certificate(ps, certificate_text_for(outcome))
                q = time.perf_counter() - t0
                row["verified"] = "accept" if ok else "reject"
            row["q_time"] = q
            proj, _, _ = _topology(outcome.decomposition, outcome.tilde)
            row["components"] = proj.components
            row["betti"] = list(proj.betti)
    except Exception as exc:  # reported inline, the run continues
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
    return row


def aggregate(rows) -> dict:
    times = [r["time"] for r in rows if r.get("status") == "certified"]
    out = {"samples": len(times), "failures": len(rows) - len(times)}
    if times:
        out.update(
            mean=statistics.fmean(times),
            stdev=statistics.pstdev(times) if len(times) > 1 else 0.0,
            max=max(times),
        )
    return out


def _bench_cases(args, rng):
    if args.family:
        return [(name, make()) for name, make in FAMILIES[args.family]]
    if args.manifest:
        cases = []
        base = os.path.dirname(os.path.abspath(args.manifest))
        for line in _read_text(args.manifest).splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                path = line if os.path.isabs(line) else os.path.join(base, line)
                cases.append((line, _load_system(path)))
        return cases
    dim_s, _, degs_s = args.random.partition(":")
    dim = int(dim_s)
    degs = [int(d) for d in degs_s.split(",") if d]
    if dim < 1 or not degs or len(degs) > dim or min(degs) < 1:
        raise ValueError("random spec is DIM:D1[,D2...] with 1 <= #degrees <= DIM")
    cases = []
    for k in range(args.samples):
        ps = PolySystem([bombieri_random(dim, d, rng) for d in degs])
        cases.append((f"random {dim},({','.join(map(str, degs))}) #{k}", ps))
    return cases


def cmd_bench(args, params: SolveParams, fmt: str, verify: bool) -> int:
    rng = np.random.default_rng(params.seed)
    try:
        cases = _bench_cases(args, rng)
    except PolyParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rows = []
    for name, ps in cases:
        row = bench_case(name, ps, params, verify)
        rows.append(row)
        if fmt == "json":
            print(json.dumps(row))
        else:
            if row.get("status") == "error":
                print(f"{name}: error {row['error']}")
                continue
            q = row.get("q_time")
            print(
                f"{name}: {row['status']} time {row['time']:.4f}s"
                f" q-time {'-' if q is None else f'{q:.4f}s'}"
                f" simplices {row['simplices']} max-splits {row['max_splits']}"
                + (f" components {row['components']}" if "components" in row else "")
            )
    agg = aggregate(rows)
    if fmt == "json":
        print(json.dumps({"aggregate": agg}))
    elif agg["samples"]:
        label = args.random.replace(":", ", (") + ")" if args.random and not args.family and not args.manifest else "all"
        print(f"{label} => {agg['mean']:.4f}s [{agg['stdev']:.4f}s] < {agg['max']:.4f}s ({agg['samples']} samples)")
    else:
        print(f"no certified cases ({agg['failures']} failures)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-splits", type=_positive_int, default=32, help="bisection depth cap per face")
    common.add_argument("--max-refinements", type=_positive_int, default=10_000, help="global refinement budget")
    common.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL, help="relative min-norm tolerance")
    common.add_argument("--threads", type=_positive_int, default=1, help="parallel face tests")
    common.add_argument("--seed", type=int, default=0, help="random seed (bench generator, validation sampling)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("text", "json"), default="text", help="report format (json = json lines)")
    common.add_argument("--no-verify", action="store_true", help="skip the exact check; report is marked UNVERIFIED")

    parser = argparse.ArgumentParser(prog="isoplex", description="Certified PL approximation of real projective varieties.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="certify and write certificate, mesh and report")
    p.add_argument("input", help="polynomial file, one homogeneous polynomial per line")

    p = sub.add_parser("verify", parents=[common], help="replay a certificate in exact arithmetic")
    p.add_argument("certificate")
    p.add_argument("input", nargs="?", help="polynomial file (default: polynomials in the certificate header)")

    p = sub.add_parser("topo", parents=[common], help="components, Betti numbers and mesh of a certificate")
    p.add_argument("certificate")
    p.add_argument("input", nargs="?", help="polynomial file (default: polynomials in the certificate header)")

    p = sub.add_parser("bench", parents=[common], help="timing table")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--family", choices=sorted(FAMILIES), help="built-in family sweep")
    src.add_argument("--manifest", help="file listing polynomial files, one per line")
    src.add_argument("--random", metavar="DIM:D1[,D2..]", help="Bombieri-random systems in P^DIM")
    p.add_argument("--samples", type=_positive_int, default=10, help="random samples")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed < 0:
        parser.error("--seed must be non-negative")
    params = SolveParams(
        max_splits=args.max_splits,
        max_refinements=args.max_refinements,
        tol=args.tol,
        seed=args.seed,
        threads=args.threads,
    )
    if args.command == "bench":
        return cmd_bench(args, params, args.format, not args.no_verify)
    cfg = RunConfig(
        command=args.command,
        input=getattr(args, "input", None),
        certificate=getattr(args, "certificate", None),
        out=args.out,
        fmt=args.format,
        params=params,
        verify=not args.no_verify,
    )
    return {"solve": cmd_solve, "verify": cmd_verify, "topo": cmd_topo}[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
