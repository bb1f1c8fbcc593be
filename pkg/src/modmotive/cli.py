"""Command-line front end: ``python -m modmotive <command> ...``.

Every command prints one JSON report with ``"schema": 1``.  Exit codes:
0 success, 1 verification failure, 2 usage or validation error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import random
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import mpmath
from filelock import FileLock

from . import hecke as hk
from . import periods as pr
from .modular_group import GroupPresentation, PresentationError, presentation
from .truncated_algebra import (
    AlgebraModel,
    ResourceCapError,
    build_model,
    is_grouplike,
    t_th_root,
)

log = logging.getLogger("modmotive")

SCHEMA = 1
CACHE_ENV = "MODMOTIVE_CACHE"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    level: int | None = None
    N: int = 1
    primes: tuple = ()
    cache_dir: str | None = None
    tol: float = 1e-6
    bits: int = pr.DEFAULT_BITS
    output: str = "json"
    timestamp: bool = True
    monomial_cap: int = 2_000_000
    seed: int = 0

    def validate(self, need_level: bool = True):
        if need_level:
            if self.level is None or self.level < 3:
                raise UsageError(f"level must be >= 3 (got {self.level})")
            if self.N < 1:
                raise UsageError("truncation N must be >= 1")
            for p in self.primes:
                if not hk.is_prime(p):
                    raise UsageError(f"{p} is not prime")
                if self.level % p == 0:
                    raise UsageError(f"prime {p} divides the level {self.level}")
        if self.output != "json":
            raise UsageError(f"unsupported output format {self.output!r}")

    def public(self) -> dict:
        d = asdict(self)
        d.pop("cache_dir")  # location does not change results
        d.pop("timestamp")
        d["primes"] = list(self.primes)
        return d


# --------------------------------------------------------------------------
# disk cache


class Cache:
    """Artifacts keyed by level (and truncation / operator), each stamped with the
    presentation hash.  Entries whose hash or schema disagree are discarded."""

    def __init__(self, root: str | None):
        root = root or os.environ.get(CACHE_ENV) or str(Path.home() / ".cache" / "modmotive")
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.lock = FileLock(str(self.root / ".lock"))

    def _read(self, name: str):
        path = self.root / name
        if not path.exists():
            return None
        try:
            return path.read_text()
        except OSError:
            return None

    def _write(self, name: str, text: str):
        with self.lock:
            tmp = self.root / (name + ".tmp")
            tmp.write_text(text)
            tmp.replace(self.root / name)

    def presentation(self, n: int) -> GroupPresentation:
        name = f"presentation-{n}.json"
        fresh = presentation(n)
        text = self._read(name)
        if text is not None:
            try:
                cached = GroupPresentation.from_json(text)
                if cached.hash() == fresh.hash():
                    log.debug("presentation %d served from cache", n)
                    return fresh
            except (ValueError, KeyError, TypeError):
                pass
            log.warning("stale presentation cache for level %d rejected", n)
        self._write(name, fresh.to_json())
        return fresh

    def model(self, n: int, N: int, cap: int) -> AlgebraModel:
        pres = self.presentation(n)
        name = f"algebra-{n}-{N}.json"
        text = self._read(name)
        if text is not None:
            try:
                model = AlgebraModel.from_json(text, pres)
                log.debug("algebra model (%d, %d) served from cache", n, N)
                return model
            except (ValueError, KeyError, TypeError):
                log.warning("stale algebra cache for (%d, %d) rejected", n, N)
        model = build_model(pres, N, monomial_cap=cap)
        self._write(name, model.to_json())
        return model

    def hecke(self, n: int, N: int, kind: hk.HeckeKind, cap: int) -> hk.HeckeMatrix:
        pres = self.presentation(n)
        name = f"hecke-{n}-{N}-{kind.tag}-{kind.p}.json"
        text = self._read(name)
        if text is not None:
            try:
                h = hk.HeckeMatrix.from_json(text)
                if h.presentation_hash == pres.hash() and h.N == N and h.kind == kind:
                    log.debug("%s served from cache", kind)
                    return h
            except (ValueError, KeyError, TypeError):
                pass
            log.warning("stale Hecke cache %s rejected", name)
        h = hk.hecke_operator(n, N, kind, model=self.model(n, N, cap))
        self._write(name, h.to_json())
        return h


# --------------------------------------------------------------------------
# reports


def _q(x) -> str:
    return str(Fraction(int(x.numerator), int(x.denominator)))


def _report(command: str, cfg: RunConfig, result: dict, ok: bool = True) -> dict:
    doc = {
        "schema": SCHEMA,
        "command": command,
        "status": "pass" if ok else "fail",
        "config": cfg.public(),
        "result": result,
    }
    if cfg.timestamp:
        doc["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return doc


def cmd_group(cfg: RunConfig, cache: Cache) -> tuple[dict, int]:
    pres = cache.presentation(cfg.level)
    result = {
        "level": pres.level,
        "index": pres.index,
        "cusps": pres.cusp_count,
        "genus": pres.genus,
        "free_rank": pres.free_rank,
        "presentation_hash": pres.hash(),
        "generators": [list(g.as_tuple()) for g in pres.generators],
        "cusp_representatives": [[c.class_id, c.representative.p, c.representative.q] for c in pres.cusps],
    }
    return _report("group", cfg, result), EXIT_OK


def cmd_algebra(cfg: RunConfig, cache: Cache) -> tuple[dict, int]:
    n = cfg.level
    model = cache.model(n, cfg.N, cfg.monomial_cap)
    summands = len(hk.summand_indices(n))
    result = {
        "level": n,
        "N": cfg.N,
        "graded_dims": list(model.graded_dims),
        "dim_A": model.dim,
        "summands": summands,
        "dim_V": summands * model.dim,
        "dim_I_part": summands * (model.dim - 1),
        "presentation_hash": model.presentation.hash(),
    }
    return _report("algebra", cfg, result), EXIT_OK


def cmd_hecke(cfg: RunConfig, cache: Cache, kind: hk.HeckeKind, out: str | None) -> tuple[dict, int]:
    n, N = cfg.level, cfg.N
    if n % kind.p == 0:
        raise UsageError(f"prime {kind.p} divides the level {n}")
    model = cache.model(n, N, cfg.monomial_cap)
    h = cache.hecke(n, N, kind, cfg.monomial_cap)
    if out:
        Path(out).write_text(h.to_json())
    masses = sorted(hk.augmentation_masses(h, model))
    filt = hk.filtration_preserved(h, model)
    result = {
        "level": n,
        "N": N,
        "operator": str(kind),
        "cosets": len(hk.coset_reps(n, kind.matrix)),
        "dim_V": h.total().rows,
        "augmentation_masses": [_q(m) for m in masses],
        "filtration_preserved": filt,
        "presentation_hash": h.presentation_hash,
    }
    if N >= 1 and model.graded_dims[1] > 0 and filt:
        sp = hk.grade_spectrum(n, N, kind, 1)
        result["grade1_charpoly_factors"] = [[repr(f), m] for f, m in pr_factor(sp.charpoly)]
        result["grade1_nilpotent"] = all(abs(r) == 0 for r in sp.roots)
        result["grade1_root_moduli"] = sorted({round(m, 10) for m, _ in sp.moduli})
    if kind.tag == "Tpp":
        perm = {}
        for src, lst in sorted(h.blocks.items()):
            perm[f"{src.k},{src.cusp}"] = [f"{t.k},{t.cusp}" for t, _ in lst]
        result["permutation"] = perm
        result["order"] = hk.matrix_order(h.total())
        result["expected_order"] = hk.multiplicative_order(kind.p**2, n)
    ok = filt
    return _report("hecke", cfg, result, ok), EXIT_OK if ok else EXIT_FAIL


def pr_factor(cp):
    from .exact_arith import factor_q

    return factor_q(cp) if cp.degree >= 1 else []


def _family(cfg: RunConfig, cache: Cache):
    ops = []
    for p in cfg.primes:
        for tag in ("Tp", "Tpp"):
            kind = hk.HeckeKind(tag, p)
            ops.append((str(kind), cache.hecke(cfg.level, cfg.N, kind, cfg.monomial_cap)))
    return ops


def verify_commutativity(cfg: RunConfig, cache: Cache) -> tuple[dict, bool]:
    ops = _family(cfg, cache)
    failures = []
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            a, b = ops[i][1].total(), ops[j][1].total()
            c = (a @ b) - (b @ a)
            if not c.is_zero():
                where = next((r, k) for r in range(c.rows) for k in range(c.cols) if c[r, k])
                failures.append({"pair": [ops[i][0], ops[j][0]], "entry": list(where),
                                 "value": _q(c[where[0], where[1]])})
    return {"operators": [o[0] for o in ops], "failures": failures}, not failures


def verify_dichotomy(cfg: RunConfig, cache: Cache) -> tuple[dict, bool]:
    # prime set enlarges automatically while components share all eigen-factors
    primes = list(cfg.primes) or [5, 7, 11]
    extra = [q for q in range(2, 200) if hk.is_prime(q) and cfg.level % q and q not in primes]
    while True:
        rep = hk.hecke_components(cfg.level, cfg.N, primes)
        if not rep.warnings or not extra:
            break
        primes.append(extra.pop(0))
    comps = []
    dumps = []
    for e in rep.entries:
        comps.append({"dim": e.component.dim, "grades": e.grades, "dichotomy": e.dichotomy,
                      "factors": {k: repr(v) for k, v in e.factors.items()}})
        if not e.dichotomy:
            dumps.append([[_q(x) for x in e.component.basis.column(j)] for j in range(e.component.dim)])
    ok = all(c["dichotomy"] for c in comps)
    return {"primes": primes, "ideal_dim": rep.dim, "components": comps,
            "warnings": rep.warnings, "counterexamples": dumps}, ok


def verify_roots(cfg: RunConfig, cache: Cache, cases: int = 30) -> tuple[dict, bool]:
    model = cache.model(cfg.level, cfg.N, cfg.monomial_cap)
    rng = random.Random(cfg.seed)
    failures = []
    for case in range(cases):
        g = model.one()
        for _ in range(rng.randint(1, 4)):
            s = rng.randrange(model.num_symbols)
            g = g * model.phi_generator(s, rng.choice((1, -1)))
        t = rng.choice((2, 3, 5))
        g_t = g**t
        r = t_th_root(g_t, t)
        good = is_grouplike(r) and r**t == g_t and r == g
        if not good:
            failures.append({"case": case, "t": t})
    return {"cases": cases, "failures": failures}, not failures


def verify_stabilizer(cfg: RunConfig, cache: Cache, cases: int = 20) -> tuple[dict, bool]:
    """Invariance of the direct local formula under gamma' -> gamma' pi."""
    from .modular_group import GroupWord, cusp_classes

    model = cache.model(cfg.level, cfg.N, cfg.monomial_cap)
    pres = model.presentation
    rng = random.Random(cfg.seed)
    failures = []
    for p in cfg.primes or (5,):
        kind = hk.HeckeKind("Tp", p)
        for case in range(cases):
            cls = rng.choice(cusp_classes(cfg.level))
            lm = rng.choice(hk.local_maps(model, kind, cls))
            w = GroupWord((rng.randrange(pres.free_rank), rng.choice((1, -1))) for _ in range(rng.randint(1, 4)))
            if not hk.stabilizer_invariance(lm, w.evaluate(pres.generators)):
                failures.append({"operator": str(kind), "cusp": cls.class_id, "word": [list(x) for x in w]})
    return {"cases": cases * max(1, len(cfg.primes)), "failures": failures}, not failures


SUITES = {
    "commutativity": verify_commutativity,
    "dichotomy": verify_dichotomy,
    "roots": verify_roots,
    "stabilizer": verify_stabilizer,
}


def cmd_verify(cfg: RunConfig, cache: Cache, suite: str) -> tuple[dict, int]:
    result, ok = SUITES[suite](cfg, cache)
    result["suite"] = suite
    return _report("verify", cfg, result, ok), EXIT_OK if ok else EXIT_FAIL


# --- periods ---


def _value(text: str) -> pr.NumericValue:
    """'re[,im[,err]]' with mpmath-parsable numbers."""
    parts = [x.strip() for x in text.split(",")]
    if not 1 <= len(parts) <= 3:
        raise UsageError(f"bad numeric value {text!r}")
    re_ = mpmath.mpf(parts[0])
    im_ = mpmath.mpf(parts[1]) if len(parts) > 1 else 0
    err = mpmath.mpf(parts[2]) if len(parts) > 2 else 0
    return pr.NumericValue(re_, im_, err)


def cmd_periods(cfg: RunConfig, args) -> tuple[dict, int]:
    sub = args.periods_cmd
    with mpmath.workprec(cfg.bits):
        if sub == "shuffle":
            f, g = (pr.QExpansion.read(x) for x in args.forms)
            path = pr.PathSpec(complex(args.tau))
            I1 = pr.iterated_integral([f], path, cfg.bits)
            I2 = pr.iterated_integral([g], path, cfg.bits)
            I12 = pr.iterated_integral([f, g], path, cfg.bits)
            I21 = pr.iterated_integral([g, f], path, cfg.bits)
            lhs = I12 + I21
            rhs = I1 * I2
            residual = lhs.distance(rhs)
            bound = lhs.error + rhs.error
            ok = residual <= bound and bound <= cfg.tol
            result = {
                "tau": args.tau,
                "integrals": {"f": I1.to_json(), "g": I2.to_json(), "fg": I12.to_json(), "gf": I21.to_json()},
                "residual": mpmath.nstr(residual, 6),
                "combined_error": mpmath.nstr(bound, 6),
            }
        elif sub == "mlv":
            forms = [pr.QExpansion.read(x) for x in args.form]
            if len(forms) == 1:
                forms = forms * args.m
            if len(forms) != args.m:
                raise UsageError("give one form, or exactly m forms")
            ys = [float(y) for y in args.ys.split(",")] if args.ys else pr.DEFAULT_YS
            v = pr.multiple_L(forms, Fraction(args.cusp), ys=ys, bits=cfg.bits)
            ok = True
            result = {"m": args.m, "cusp": args.cusp, "value": v.to_json(),
                      "heights": v.diagnostics.get("ys"), "dropped_heights": v.diagnostics.get("dropped_heights"),
                      "truncation": v.diagnostics.get("truncation")}
        elif sub == "relate":
            if args.planted:
                coeffs = [int(c) for c in args.planted.split(",")]
                rng = random.Random(cfg.seed)
                cands = [pr.NumericValue.of(mpmath.mpf(rng.random()) + mpmath.sqrt(k + 2) + 1j * mpmath.log(k + 2), 0)
                         for k in range(len(coeffs))]
                target = sum((c * v for c, v in zip(coeffs, cands)), pr.NumericValue(0))
            else:
                if not args.target or not args.candidates:
                    raise UsageError("relate needs --planted or --target and --candidates")
                target = _value(args.target)
                cands = [_value(c) for c in args.candidates]
            rel = None
            try:
                rel = pr.relation_detect(target, cands, args.bound, cfg.bits)
                result = {"relation": list(rel) if rel else None,
                          "status": "candidate" if rel else "none found"}
            except pr.InsufficientPrecisionError as exc:
                result = {"relation": None, "status": "none found", "reason": str(exc)}
            ok = True
            if args.planted:
                want = tuple([1] + [-c for c in coeffs])
                result["planted"] = list(want)
                ok = rel is not None and tuple(rel) == want
        elif sub == "explore":
            forms = [pr.QExpansion.read(x) for x in args.forms]
            result = pr.explore_products(forms, Fraction(args.cusp), args.max_den, args.bound, bits=cfg.bits)
            ok = result["status"] in ("candidate", "none found")
        else:
            raise UsageError(f"unknown periods command {sub!r}")
    return _report(f"periods {sub}", cfg, result, ok), EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# argument parsing


def _primes(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad prime list {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modmotive", description=__doc__.splitlines()[0])
    ap.add_argument("--cache-dir", help=f"cache directory (default ${CACHE_ENV} or ~/.cache/modmotive)")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    ap.add_argument("--output", default="json", help="report format (json)")
    ap.add_argument("--monomial-cap", type=int, default=2_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def level_args(p, need_N=True):
        p.add_argument("--level", "-n", type=int, required=True)
        if need_N:
            p.add_argument("-N", type=int, default=1)

    p = sub.add_parser("group", help="presentation invariants of Gamma(n)")
    level_args(p, need_N=False)

    p = sub.add_parser("algebra", help="graded dimensions of the truncated algebra")
    level_args(p)

    p = sub.add_parser("hecke", help="one Hecke operator as an exact block matrix")
    level_args(p)
    p.add_argument("--prime", "-p", type=int, required=True)
    p.add_argument("--kind", choices=("Tp", "Tpp"), default="Tp")
    p.add_argument("--out", help="write the HeckeMatrix JSON here")

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=sorted(SUITES))
    level_args(p)
    p.add_argument("--primes", type=_primes, default=None)

    p = sub.add_parser("periods", help="numerical periods of q-expansions")
    p.add_argument("--bits", type=int, default=pr.DEFAULT_BITS)
    p.add_argument("--tol", type=float, default=1e-6)
    psub = p.add_subparsers(dest="periods_cmd", required=True)
    q = psub.add_parser("shuffle")
    q.add_argument("--forms", nargs=2, required=True)
    q.add_argument("--tau", default="1j")
    q = psub.add_parser("mlv")
    q.add_argument("--form", nargs="+", required=True)
    q.add_argument("--m", type=int, default=1)
    q.add_argument("--cusp", default="0")
    q.add_argument("--ys", help="comma-separated decreasing heights")
    q = psub.add_parser("relate")
    q.add_argument("--planted", help="comma-separated integers for a self-test")
    q.add_argument("--target")
    q.add_argument("--candidates", nargs="*")
    q.add_argument("--bound", type=int, default=100)
    q = psub.add_parser("explore")
    q.add_argument("--forms", nargs="+", required=True)
    q.add_argument("--cusp", default="1/6")
    q.add_argument("--max-den", type=int, default=12)
    q.add_argument("--bound", type=int, default=20)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    cfg = RunConfig(
        level=getattr(args, "level", None),
        N=getattr(args, "N", 1),
        primes=getattr(args, "primes", None) or (),
        cache_dir=args.cache_dir,
        tol=getattr(args, "tol", 1e-6),
        bits=getattr(args, "bits", pr.DEFAULT_BITS),
        output=args.output,
        timestamp=not args.no_timestamp,
        monomial_cap=args.monomial_cap,
        seed=args.seed,
    )
    try:
        if args.command == "periods":
            cfg.validate(need_level=False)
            doc, code = cmd_periods(cfg, args)
        else:
            if args.command == "verify" and args.suite == "commutativity" and not cfg.primes:
                cfg.primes = (5, 7)
            cfg.validate()
            cache = Cache(cfg.cache_dir)
            if args.command == "group":
                doc, code = cmd_group(cfg, cache)
            elif args.command == "algebra":
                doc, code = cmd_algebra(cfg, cache)
            elif args.command == "hecke":
                doc, code = cmd_hecke(cfg, cache, hk.HeckeKind(args.kind, args.prime), args.out)
            else:
                doc, code = cmd_verify(cfg, cache, args.suite)
    except (UsageError, PresentationError, pr.PeriodError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except hk.HeckeConsistencyError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(json.dumps(doc, indent=2, sort_keys=True))
    return code
