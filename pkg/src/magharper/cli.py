"""Command-line front end.

Every subcommand reads an optional JSON config (validated against the
bundled schema), writes one CSV or JSON artifact into ``--out`` and prints a
one-line summary.  Exit codes: 0 ok, 1 domain error, 2 resource cap,
3 numeric failure.  Results are cached under ``$MAGHARPER_CACHE`` (default
``~/.cache/magharper``) keyed by a hash of the relevant config sections and
the package version.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import AlgebraElement, build_named_operator
from .algebraic import identify, refine_eigenvalue
from .cocycle import verify
from .config import build_group, build_multiplier, decode_element, load_config
from .cyclotomic import Cyclotomic
from .errors import DomainError, MagHarperError, NumericError, ResourceCapError
from .groups import LamplighterModel, folner_set
from .oracle import walk_moment
from .spectra import (DEFAULT_CAP_DIM, butterfly_sweep, detect_gaps, exact_moment, ids_rows,
                      lamplighter_blocks, operator_matrix, quotient_multiplicity, spectral_density,
                      spectral_inclusion, truncate, truncated_moment)

CACHE_ENV = "MAGHARPER_CACHE"
EXIT_CODES = {DomainError: 1, ResourceCapError: 2, NumericError: 3}

DEFAULTS = {
    "group": {"family": "lattice", "dim": 2},
    "operator": {"name": "harper", "d": 1},
    "verify": {"samples": 1000, "radius": 4},
    "spectra": {"levels": [5, 10, 20], "level": 10, "q_max": 5, "k": 4, "epsilon": 1e-12,
                "widen": True, "grid": {"min": -5.0, "max": 5.0, "points": 201},
                "cycles": [2, 3, 4, 5, 6, 7, 8, 9], "lambdas": [0, 2, -2], "mode": "exact"},
    "identify": {"precision": 256, "max_degree": 8, "max_height": 10**6, "lambdas": []},
}


def fmt(x) -> str:
    return format(float(x), ".17g")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage mistakes are domain errors, not resource failures (argparse uses 2)
        self.print_usage(sys.stderr)
        raise DomainError(f"cli.execute: {message}")


@contextlib.contextmanager
def stage(op: str):
    """Prefix errors with the module operation that raised them."""
    try:
        yield
    except MagHarperError as exc:
        if not getattr(exc, "op", None):
            exc.op = op
        raise


class Context:
    def __init__(self, args):
        cfg = load_config(args.config) if args.config else {}
        self.raw = cfg
        self.cfg = {k: cfg.get(k, DEFAULTS.get(k)) for k in set(DEFAULTS) | set(cfg)}
        # parameter sections fill in missing keys; group/multiplier are taken whole
        for k in ("operator", "verify", "spectra", "identify"):
            if k in cfg:
                self.cfg[k] = dict(DEFAULTS[k], **cfg[k])
        self.args = args
        self.seed = args.seed if args.seed is not None else cfg.get("seed")
        out = args.out or (cfg.get("output") or {}).get("dir") or "."
        self.out = Path(out)
        self.jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
        self.cap_dim = args.cap_dim or self.spectra.get("cap_dim", DEFAULT_CAP_DIM)

    @property
    def spectra(self) -> dict:
        return self.cfg["spectra"]

    def model(self):
        with stage("group_model.build"):
            return build_group(self.cfg["group"])

    def sigma(self, model):
        with stage("cocycle.build"):
            return build_multiplier(self.cfg.get("multiplier"), model)

    def operator(self, model=None, sigma=None) -> AlgebraElement:
        model = model or self.model()
        sigma = sigma or self.sigma(model)
        op = self.cfg["operator"]
        with stage("twisted_algebra.build_named_operator"):
            if op.get("name", "harper") == "custom":
                d = op.get("d", 1)
                coeffs = {}
                for entry in op.get("support", []):
                    g = decode_element(model, entry["element"])
                    if len(entry["matrix"]) != d * d:
                        raise DomainError(f"matrix for {entry['element']} needs {d * d} entries")
                    coeffs[g] = np.array([complex(a, b) for a, b in entry["matrix"]]).reshape(d, d)
                return build_named_operator("custom", model, sigma, d, coeffs)
            return build_named_operator(op.get("name", "harper"), model, sigma, op.get("d", 1))

    def grid(self) -> np.ndarray:
        g = self.spectra["grid"]
        return np.linspace(g["min"], g["max"], g["points"])

    def cache_key(self, command: str, sections: dict) -> str:
        blob = json.dumps({"command": command, "sections": sections, "version": __version__},
                          sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def cache_dir(self) -> Path | None:
        if self.args.no_cache:
            return None
        root = os.environ.get(CACHE_ENV) or os.path.join(os.path.expanduser("~"), ".cache", "magharper")
        return Path(root)

    def cached(self, command: str, sections: dict, produce):
        """Return ``(text, summary)``; ``produce`` runs only on a cache miss."""
        root = self.cache_dir()
        key = self.cache_key(command, sections)
        path = root / f"{key}.json" if root else None
        if path is not None and path.exists():
            try:
                hit = json.loads(path.read_text())
                if hit.get("version") == __version__:
                    return hit["text"], hit["summary"]
            except (OSError, ValueError, KeyError):
                pass
        text, summary = produce()
        if path is not None:
            try:
                root.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp")
                tmp.write_text(json.dumps({"version": __version__, "text": text, "summary": summary}))
                tmp.replace(path)
            except OSError:
                pass
        return text, summary

    def write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return path


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


_COS = re.compile(r"^(-?[0-9]*)cos\(([0-9]+)/([0-9]+)\)$")


def parse_lambda(value):
    """Numbers, ``"p/q"`` or ``"Ncos(p/q)"`` meaning ``N cos(p pi / q)`` (exact)."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return value
    m = _COS.match(value)
    if m:
        scale = m.group(1)
        scale = -1 if scale == "-" else int(scale) if scale else 1
        p, q = int(m.group(2)), int(m.group(3))
        if q == 0:
            raise DomainError("zero denominator in lambda")
        # N cos(p pi/q) = (N/2)(z + z^-1) with z = exp(2 pi i p / 2q)
        z = Cyclotomic.root_of_unity(Fraction(p, 2 * q))
        val = (z + z.conjugate()) * Fraction(scale, 2)
        return val.as_rational() if val.is_rational() else val
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"cannot parse lambda {value!r}") from None


def _lambda_label(value) -> str:
    return value if isinstance(value, str) else fmt(value)


# ---------------------------------------------------------------- subcommands

def cmd_check_cocycle(ctx: Context):
    if ctx.seed is None:
        raise DomainError("cli.check-cocycle: a seed is required (config 'seed' or --seed)")
    sections = {k: ctx.cfg.get(k) for k in ("group", "multiplier", "verify")}
    sections["seed"] = ctx.seed

    def produce():
        model = ctx.model()
        sigma = ctx.sigma(model)
        v = ctx.cfg["verify"]
        with stage("cocycle.verify"):
            rep = verify(sigma, model, v.get("samples", 1000), ctx.seed, v.get("radius", 4))
        doc = {"multiplier": repr(sigma), "group": repr(model), "triples": rep.triples,
               "exhaustive": rep.exhaustive,
               "max_cocycle_residual": rep.max_cocycle_residual,
               "max_normalization_residual": rep.max_normalization_residual,
               "max_inverse_symmetry_residual": rep.max_inverse_symmetry_residual,
               "ok": rep.ok()}
        summary = (f"check-cocycle: {rep.triples} triples, cocycle residual {rep.max_cocycle_residual:.3g}, "
                   f"normalization residual {rep.max_normalization_residual:.3g}")
        return json.dumps(doc, indent=1, sort_keys=True) + "\n", summary

    text, summary = ctx.cached("check-cocycle", sections, produce)
    ctx.write("cocycle.json", text)
    print(summary)
    if not json.loads(text)["ok"]:
        raise DomainError("cocycle.verify: the multiplier fails the cocycle axioms")


def cmd_moments(ctx: Context):
    k = ctx.args.k if ctx.args.k is not None else ctx.spectra["k"]
    sections = {s: ctx.cfg.get(s) for s in ("group", "multiplier", "operator")}
    sections.update(k=k, levels=ctx.spectra["levels"], cap=ctx.cap_dim)

    def produce():
        model = ctx.model()
        A = ctx.operator(model)
        rows = []
        with stage("spectra.exact_moment"):
            exact = complex(exact_moment(A, k))
        rows.append((k, "exact", "", fmt(exact.real), fmt(exact.imag)))
        if k <= 8 and len(A) ** k <= 5 * 10**6:
            with stage("oracle.walk_moment"):
                w = walk_moment(A, k)
            rows.append((k, "walk_oracle", "", fmt(w.real), fmt(w.imag)))
        if model.amenable and not model.finite:
            for m in ctx.spectra["levels"]:
                with stage("spectra.truncate"):
                    T = truncate(A, folner_set(model, m), ctx.cap_dim)
                rows.append((k, "truncated", m, fmt(truncated_moment(T, k)), fmt(0.0)))
        return _csv(["k", "source", "level", "re", "im"], rows), f"tau(A^{k}) = {fmt(exact.real)}"

    text, summary = ctx.cached("moments", sections, produce)
    ctx.write("moments.csv", text)
    print(summary)


def _densities(ctx: Context):
    model = ctx.model()
    A = ctx.operator(model)
    levels = sorted(ctx.spectra["levels"])

    def one(m):
        with stage("spectra.truncate"):
            T = truncate(A, folner_set(model, m, kappa=max(A.propagation, 1)), ctx.cap_dim)
        with stage("spectra.spectral_density"):
            return spectral_density(T)

    if ctx.jobs > 1 and len(levels) > 1:
        with ThreadPoolExecutor(max_workers=ctx.jobs) as pool:
            return list(pool.map(one, levels))
    return [one(m) for m in levels]


def cmd_ids(ctx: Context):
    sections = {s: ctx.cfg.get(s) for s in ("group", "multiplier", "operator")}
    sections.update(levels=ctx.spectra["levels"], grid=ctx.spectra["grid"], cap=ctx.cap_dim)

    def produce():
        dens = _densities(ctx)
        rows = [(lv, fmt(l), fmt(f), fmt(dj)) for lv, l, f, dj in ids_rows(dens, ctx.grid())]
        mass = max(abs(d.total_mass - d.d) for d in dens)
        return _csv(["level", "lambda", "F", "D"], rows), \
            f"ids: {len(dens)} levels x {len(ctx.grid())} points, max mass defect {mass:.3g}"

    text, summary = ctx.cached("ids", sections, produce)
    ctx.write("ids.csv", text)
    print(summary)


def cmd_gaps(ctx: Context):
    sections = {s: ctx.cfg.get(s) for s in ("group", "multiplier", "operator")}
    sections.update(levels=ctx.spectra["levels"], grid=ctx.spectra["grid"], cap=ctx.cap_dim,
                    epsilon=ctx.spectra["epsilon"], widen=ctx.spectra["widen"])

    def produce():
        dens = _densities(ctx)
        with stage("spectra.detect_gaps"):
            gaps = detect_gaps(dens, ctx.grid(), ctx.spectra["epsilon"], ctx.spectra["widen"])
        rows = []
        for gap in gaps:
            for lv, mass in zip(gap.levels, gap.masses):
                rows.append((fmt(gap.lambda1), fmt(gap.lambda2), lv, fmt(mass)))
        return _csv(["lambda1", "lambda2", "level", "mass"], rows), f"gaps: {len(gaps)} flagged cells"

    text, summary = ctx.cached("gaps", sections, produce)
    ctx.write("gaps.csv", text)
    print(summary)


def cmd_butterfly(ctx: Context):
    q_max = ctx.args.qmax if ctx.args.qmax is not None else ctx.spectra["q_max"]
    level = ctx.spectra["level"]
    sections = {"group": ctx.cfg["group"], "d": ctx.cfg["operator"].get("d", 1),
                "q_max": q_max, "level": level, "cap": ctx.cap_dim}

    def produce():
        model = ctx.model()
        with stage("spectra.butterfly_sweep"):
            table = butterfly_sweep(model, ctx.cfg["operator"].get("d", 1), q_max, level, ctx.jobs, ctx.cap_dim)
        rows = [(q, p, i, fmt(e)) for q, p, eig in table for i, e in enumerate(eig)]
        return _csv(["q", "p", "eig_index", "eigenvalue"], rows), \
            f"butterfly: {len(table)} fluxes, {len(rows)} eigenvalues"

    text, summary = ctx.cached("butterfly", sections, produce)
    ctx.write("butterfly.csv", text)
    print(summary)


def cmd_lamplighter_dims(ctx: Context):
    sp = ctx.spectra
    sections = {"cycles": sp["cycles"], "lambdas": sp["lambdas"], "mode": sp["mode"],
                "operator": ctx.cfg["operator"], "cap": ctx.cap_dim}

    def produce():
        rows = []
        for n in sp["cycles"]:
            model = LamplighterModel(cycle=n)
            A = ctx.operator(model, build_multiplier(None, model)) if ctx.cfg["operator"].get("name") == "custom" \
                else build_named_operator("lamplighter_rw", model)
            for raw in sp["lambdas"]:
                lam = parse_lambda(raw)
                with stage("spectra.quotient_multiplicity"):
                    res = quotient_multiplicity(A, None, lam, sp["mode"], cap_dim=ctx.cap_dim)
                rows.append((n, _lambda_label(raw), res.multiplicity, res.dimension,
                             f"{res.normalized.numerator}/{res.normalized.denominator}",
                             fmt(float(res.normalized))))
        return _csv(["n", "lambda", "multiplicity", "dimension", "normalized", "normalized_float"], rows), \
            f"lamplighter-dims: {len(rows)} multiplicities ({sp['mode']})"

    text, summary = ctx.cached("lamplighter-dims", sections, produce)
    ctx.write("lamplighter_dims.csv", text)
    print(summary)


def cmd_lift_compare(ctx: Context):
    sections = {s: ctx.cfg.get(s) for s in ("group", "multiplier", "operator")}
    sections["cap"] = ctx.cap_dim

    def produce():
        model = ctx.model()
        if not model.finite:
            raise DomainError("cli.lift-compare: the group must be a finite quotient (set moduli/cycle)")
        A = ctx.operator(model)
        with stage("spectra.spectral_inclusion"):
            dist = spectral_inclusion(A, ctx.cap_dim)
        r = A.sigma.order
        doc = {"r": r, "twisted_dim": A.d * model.order(), "lifted_dim": A.d * model.order() * r,
               "max_distance": dist, "ok": dist <= 1e-8}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n", \
            f"lift-compare: r={r}, max eigenvalue distance {dist:.3g}"

    text, summary = ctx.cached("lift-compare", sections, produce)
    ctx.write("lift_compare.json", text)
    print(summary)
    if not json.loads(text)["ok"]:
        raise NumericError("spectra.spectral_inclusion: eigenvalues of the twisted operator missing from the lift")


def _minpoly_matrices(ctx: Context, A: AlgebraElement):
    model = A.model
    if isinstance(model, LamplighterModel) and model.finite:
        return [np.array(B, dtype=complex) for B in lamplighter_blocks(A)]
    if model.finite:
        return [operator_matrix(A, ctx.cap_dim).matrix]
    return [truncate(A, folner_set(model, ctx.spectra["level"]), ctx.cap_dim).matrix]


def cmd_minpoly(ctx: Context):
    ident = ctx.cfg["identify"]
    precision = ctx.args.precision or ident["precision"]
    lambdas = ctx.args.lam if ctx.args.lam else ident["lambdas"]
    if not lambdas:
        raise DomainError("cli.minpoly: no eigenvalues requested (identify.lambdas or --lambda)")
    sections = {s: ctx.cfg.get(s) for s in ("group", "multiplier", "operator")}
    sections.update(identify=ident, precision=precision, lambdas=lambdas, level=ctx.spectra["level"],
                    cap=ctx.cap_dim)

    def produce():
        A = ctx.operator()
        mats = _minpoly_matrices(ctx, A)
        reports = []
        for lam0 in lambdas:
            # refine on the smallest matrix that has an eigenvalue near lam0
            best = None
            for M in mats:
                eig = np.linalg.eigvalsh(M)
                dist = float(np.min(np.abs(eig - lam0)))
                if dist <= 1e-4 and (best is None or M.shape[0] < best.shape[0]):
                    best = M
            if best is None:
                raise NumericError(f"algebraic_id.refine_eigenvalue: no eigenvalue within 1e-4 of {lam0}")
            with stage("algebraic_id.refine_eigenvalue"):
                x = refine_eigenvalue(best, lam0, precision)
            with stage("algebraic_id.minimal_polynomial"):
                reports.append(identify(x, ident["max_degree"], ident["max_height"]))
        found = sum(r["status"] != "not_found" for r in reports)
        return json.dumps(reports, indent=1) + "\n", f"minpoly: {found}/{len(reports)} relations found"

    text, summary = ctx.cached("minpoly", sections, produce)
    ctx.write("minpoly.json", text)
    print(summary)


COMMANDS = {
    "check-cocycle": cmd_check_cocycle,
    "moments": cmd_moments,
    "ids": cmd_ids,
    "gaps": cmd_gaps,
    "butterfly": cmd_butterfly,
    "lamplighter-dims": cmd_lamplighter_dims,
    "lift-compare": cmd_lift_compare,
    "minpoly": cmd_minpoly,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="output directory (default: config output.dir or .)")
    common.add_argument("--seed", type=int, help="random seed for sampled checks")
    common.add_argument("--jobs", type=int, help="worker threads (default: CPU count)")
    common.add_argument("--precision", type=int, help="bits for eigenvalue refinement")
    common.add_argument("--cap-dim", type=int, dest="cap_dim", help="largest dense matrix dimension")
    common.add_argument("--no-cache", action="store_true", help="neither read nor write the cache")
    parser = _Parser(prog="magharper", description="Twisted group algebra spectra experiments")
    parser.add_argument("--version", action="version", version=f"magharper {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "moments":
            p.add_argument("--k", type=int, help="moment order")
        if name == "butterfly":
            p.add_argument("--qmax", type=int, help="largest flux denominator")
        if name == "minpoly":
            p.add_argument("--lambda", dest="lam", type=float, action="append",
                           help="approximate eigenvalue (repeatable)")
    return parser


def execute(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.jobs is not None and args.jobs < 1:
            raise DomainError("cli.execute: --jobs must be positive")
        ctx = Context(args)
        COMMANDS[args.command](ctx)
        return 0
    except MagHarperError as exc:
        code = next((c for t, c in EXIT_CODES.items() if isinstance(exc, t)), 1)
        op = getattr(exc, "op", None)
        msg = str(exc)
        if op and not msg.startswith(op):
            msg = f"{op}: {msg}"
        print(f"error: {msg}", file=sys.stderr)
        return code


def main():
    sys.exit(execute())


if __name__ == "__main__":
    main()
