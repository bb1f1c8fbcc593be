"""Hecke operators on V = sum over (zeta, cusp) of A_N, via noncommutative modular symbols.

Summands are indexed by (k, cusp class) with k a unit mod n standing for
zeta^k; an operator of determinant d sends k to d*k.  The local map attached to
the coset representative gamma_j (base point a_j = gamma_j(a_0)) sends the group
image of gamma' to

    exp( (1/t) log phi( w^-1 g gamma^t g^-1 w ) ),   gamma = gamma_j gamma' gamma_j^-1,

where t is the least exponent with gamma^t in Gamma(n, g) and w is the
cusp_reduce witness of g(a_j).  On the whole algebra the local map is the
unital algebra homomorphism fixed by its values on the generators that survive
in the surface presentation; the direct formula on any other group element is
kept available (``LocalMap.group_image``) so the two can be compared.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd

import mpmath
from gmpy2 import mpq

from .exact_arith import (
    NonCommutingError,
    PrimaryComponent,
    QMatrix,
    QPolynomial,
    charpoly,
    factor_q,
    primary_decomposition,
    rref,
)
from .modular_group import (
    IDENTITY,
    CuspClass,
    CuspPoint,
    GL2Matrix,
    act,
    cusp_classes,
    cusp_reduce,
    in_gamma_n,
    presentation,
    word_problem,
)
from .truncated_algebra import (
    AlgebraElement,
    AlgebraModel,
    build_model,
    exp,
    log,
    phi,
    surface_reduction,
)

log_ = logging.getLogger(__name__)

__all__ = [
    "SummandIndex",
    "HeckeKind",
    "HeckeMatrix",
    "ComponentReport",
    "HeckeConsistencyError",
    "in_gamma_ng",
    "coset_reps",
    "exponent_t",
    "LocalMap",
    "local_maps",
    "hecke_local",
    "hecke_operator",
    "hecke_components",
    "verify_dichotomy",
    "augmentation_masses",
    "matrix_order",
    "stabilizer_invariance",
    "filtration_preserved",
    "dichotomy_check",
    "grade_spectrum",
    "units",
]


class HeckeConsistencyError(RuntimeError):
    pass


def is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(p**0.5) + 1))


def units(n: int) -> list[int]:
    return [k for k in range(1, n) if gcd(k, n) == 1]


@dataclass(frozen=True, order=True)
class SummandIndex:
    k: int
    cusp: int  # class id

    def __str__(self) -> str:
        return f"(k={self.k}, cusp={self.cusp})"


@dataclass(frozen=True)
class HeckeKind:
    tag: str  # "Tp" or "Tpp"
    p: int

    def __post_init__(self):
        if self.tag not in ("Tp", "Tpp"):
            raise ValueError(f"unknown Hecke kind {self.tag!r}")
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    @property
    def matrix(self) -> GL2Matrix:
        p = self.p
        return GL2Matrix(1, 0, 0, p) if self.tag == "Tp" else GL2Matrix(p, 0, 0, p)

    @property
    def det(self) -> int:
        return self.matrix.det

    def __str__(self) -> str:
        return f"T({self.p})" if self.tag == "Tp" else f"T({self.p},{self.p})"


def _conjugate(gamma: GL2Matrix, g: GL2Matrix) -> GL2Matrix | None:
    """g gamma g^-1 if integral, else None."""
    x = g * gamma * g.adjugate()
    d = g.det
    if any(e % d for e in x.as_tuple()):
        return None
    return GL2Matrix(*(e // d for e in x.as_tuple()))


def in_gamma_ng(gamma: GL2Matrix, n: int, g: GL2Matrix) -> bool:
    if not in_gamma_n(gamma, n):
        return False
    y = _conjugate(gamma, g)
    return y is not None and in_gamma_n(y, n)


def exponent_t(gamma: GL2Matrix, n: int, g: GL2Matrix, cap: int = 10_000) -> int:
    """Least t >= 1 with gamma^t in Gamma(n, g); powers are taken modulo det(g)*n."""
    if not in_gamma_n(gamma, n):
        raise ValueError("exponent_t needs gamma in Gamma(n)")
    d = g.det
    mod = d * n
    x = GL2Matrix(*gamma.mod(mod))
    base = x
    ga = g.adjugate()
    for t in range(1, cap + 1):
        y = g * x * ga
        if y.mod(mod) == (d % mod, 0, 0, d % mod):
            return t
        x = GL2Matrix(*(x * base).mod(mod))
    raise RuntimeError(f"exponent search exceeded cap {cap}")


@lru_cache(maxsize=None)
def coset_reps(n: int, g: GL2Matrix) -> tuple[GL2Matrix, ...]:
    """Right coset representatives of Gamma(n, g) in Gamma(n), breadth-first."""
    pres = presentation(n)
    gens = []
    for h in pres.generators:
        gens.extend([h, h.inverse()])
    reps = [IDENTITY]

    def find(x):
        for i, y in enumerate(reps):
            if in_gamma_ng(x * y.inverse(), n, g):
                return i
        return None

    head = 0
    while head < len(reps):
        for h in gens:
            x = reps[head] * h
            if find(x) is None:
                reps.append(x)
        head += 1
    for y in reps:
        for h in gens:
            if find(y * h) is None:
                raise HeckeConsistencyError("coset enumeration is not closed")
    return tuple(reps)


class LocalMap:
    """E(g, a_j) on the algebra based at one cusp class."""

    def __init__(self, model: AlgebraModel, kind: HeckeKind, source: CuspClass, gamma_j: GL2Matrix,
                 base: CuspPoint | None = None, base_witness: GL2Matrix | None = None):
        self.model = model
        self.kind = kind
        self.g = kind.matrix
        self.n = model.level
        self.source = source
        self.gamma_j = gamma_j
        # base point a_0 of the source class and witness w0 with w0(rep) = a_0
        self.a0 = source.representative if base is None else base
        self.w0 = IDENTITY if base_witness is None else base_witness
        self.aj = act(gamma_j, self.a0)
        self.target, self.target_witness = cusp_reduce(act(self.g, self.aj), self.n)
        self._gen_images: dict = {}
        self._matrix = None

    def group_data(self, gamma_prime: GL2Matrix):
        """(t, delta') for gamma' in Gamma(n) acting on loops at the canonical base point."""
        # loop at rep <-> loop at a_0 via w0, then moved to a_j via gamma_j
        gam = self.gamma_j * self.w0 * gamma_prime * self.w0.inverse() * self.gamma_j.inverse()
        t = exponent_t(gam, self.n, self.g)
        delta = _conjugate(gam**t, self.g)
        w = self.target_witness
        return t, w.inverse() * delta * w

    def group_image(self, gamma_prime: GL2Matrix) -> AlgebraElement:
        t, d = self.group_data(gamma_prime)
        x = phi(word_problem(d, self.model.presentation), self.model)
        return x if t == 1 else exp(log(x).scale(mpq(1, t)))

    def generator_image(self, s: int) -> AlgebraElement:
        got = self._gen_images.get(s)
        if got is None:
            h = self.model.presentation.generators[self.symbol_generators[s]]
            got = self.group_image(h)
            self._gen_images[s] = got
        return got

    @property
    def symbol_generators(self) -> list[int]:
        return _symbol_generators(self.model)

    def matrix(self) -> QMatrix:
        if self._matrix is None:
            model = self.model
            one = model.one()
            xs = [self.generator_image(s) - one for s in range(model.num_symbols)]
            cols = []
            cache = {(): one}
            for mono in model.basis:
                img = cache.get(mono)
                if img is None:
                    img = cache[mono[:-1]] * xs[mono[-1]]
                    cache[mono] = img
                cols.append(img.coeffs)
            self._matrix = QMatrix.from_columns(cols)
        return self._matrix

    def apply(self, x: AlgebraElement) -> AlgebraElement:
        return self.model.element(self.matrix().apply(x.coeffs))

    def relator_defect(self) -> list[AlgebraElement]:
        """Images of the ideal generators (w - 1); all zero iff the map is well defined."""
        out = []
        for w in self.model.ideal_words:
            img = self.model.one()
            for s, e in w:
                y = self.generator_image(s)
                img = img * (y if e == 1 else y.inverse())
            out.append(img - self.model.one())
        return out


def _symbol_generators(model: AlgebraModel) -> list[int]:
    if model.alphabet == "full":
        return list(range(model.num_symbols))
    kept, _, _ = surface_reduction(model.presentation)
    return kept


def local_maps(model: AlgebraModel, kind: HeckeKind, source: CuspClass) -> list[LocalMap]:
    n = model.level
    if n % kind.p == 0:
        raise ValueError(f"p = {kind.p} divides the level {n}")
    return [LocalMap(model, kind, source, gj) for gj in coset_reps(n, kind.matrix)]


def hecke_local(kind: HeckeKind, j: int, x: AlgebraElement, source: SummandIndex):
    """Apply E(g, a_j) to x in summand ``source``; returns (target index, image)."""
    model = x.model
    cls = cusp_classes(model.level)[source.cusp]
    lm = local_maps(model, kind, cls)[j]
    target = SummandIndex((kind.det * source.k) % model.level, lm.target.class_id)
    return target, lm.apply(x)


@dataclass
class HeckeMatrix:
    level: int
    N: int
    kind: HeckeKind
    dim_block: int
    indices: list  # ordered SummandIndex list
    blocks: dict  # source SummandIndex -> list of (target SummandIndex, QMatrix)
    presentation_hash: str = ""
    _total: QMatrix | None = field(default=None, repr=False)

    def position(self, idx: SummandIndex) -> int:
        return self.indices.index(idx)

    def total(self) -> QMatrix:
        if self._total is None:
            D = self.dim_block
            size = D * len(self.indices)
            rows = [[mpq(0)] * size for _ in range(size)]
            pos = {idx: i for i, idx in enumerate(self.indices)}
            for src, lst in self.blocks.items():
                c0 = pos[src] * D
                for tgt, blk in lst:
                    r0 = pos[tgt] * D
                    for i in range(D):
                        row = rows[r0 + i]
                        br = blk.row(i)
                        for j in range(D):
                            if br[j]:
                                row[c0 + j] += br[j]
            self._total = QMatrix(rows)
        return self._total

    def to_json(self) -> str:
        doc = {
            "schema": 1,
            "level": self.level,
            "N": self.N,
            "kind": {"tag": self.kind.tag, "p": self.kind.p},
            "presentation_hash": self.presentation_hash,
            "dim_block": self.dim_block,
            "indices": [[i.k, i.cusp] for i in self.indices],
            "blocks": [
                [
                    [s.k, s.cusp],
                    [
                        [[t.k, t.cusp], [[str(x) for x in blk.row(i)] for i in range(blk.rows)]]
                        for t, blk in lst
                    ],
                ]
                for s, lst in sorted(self.blocks.items())
            ],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "HeckeMatrix":
        doc = json.loads(text)
        blocks = {}
        for s, lst in doc["blocks"]:
            blocks[SummandIndex(*s)] = [(SummandIndex(*t), QMatrix([[mpq(x) for x in r] for r in rows], doc["dim_block"]))
                                        for t, rows in lst]
        return cls(
            level=doc["level"],
            N=doc["N"],
            kind=HeckeKind(doc["kind"]["tag"], doc["kind"]["p"]),
            dim_block=doc["dim_block"],
            indices=[SummandIndex(*i) for i in doc["indices"]],
            blocks=blocks,
            presentation_hash=doc["presentation_hash"],
        )


@lru_cache(maxsize=None)
def _model(n: int, N: int) -> AlgebraModel:
    return build_model(presentation(n), N)


def summand_indices(n: int) -> list[SummandIndex]:
    return [SummandIndex(k, c.class_id) for k in units(n) for c in cusp_classes(n)]


def hecke_operator(n: int, N: int, kind: HeckeKind, model: AlgebraModel | None = None,
                   check_relations: bool = True) -> HeckeMatrix:
    """E(T(g)) as an exact block matrix: the sum over cosets of the local maps."""
    if n % kind.p == 0:
        raise ValueError(f"p = {kind.p} divides the level {n}")
    model = model or _model(n, N)
    per_cusp = {}
    for cls in cusp_classes(n):
        lst = []
        for lm in local_maps(model, kind, cls):
            if check_relations and any(not e.is_zero() for e in lm.relator_defect()):
                raise HeckeConsistencyError(
                    f"{kind} local map at cusp {cls.class_id} does not respect the surface relator"
                )
            lst.append((lm.target.class_id, lm.matrix()))
        per_cusp[cls.class_id] = lst
    d = kind.det
    blocks = {}
    for idx in summand_indices(n):
        tk = (d * idx.k) % n
        merged: dict = {}
        for tc, m in per_cusp[idx.cusp]:
            t = SummandIndex(tk, tc)
            merged[t] = merged[t] + m if t in merged else m
        blocks[idx] = sorted(merged.items())
    return HeckeMatrix(n, N, kind, model.dim, summand_indices(n), blocks, model.presentation.hash())


def augmentation_masses(h: HeckeMatrix, model: AlgebraModel) -> set:
    """Total augmentation of the image of the unit of each source summand."""
    D = model.dim
    tot = h.total()
    masses = set()
    for s in range(len(h.indices)):
        col = s * D  # basis element 0 is the unit
        masses.add(sum((tot[i, col] for i in range(0, tot.rows, D)), mpq(0)))
    return masses


def matrix_order(m: QMatrix, cap: int = 1000) -> int | None:
    """Least k >= 1 with m^k = I, or None if none up to ``cap``."""
    ident = QMatrix.identity(m.rows)
    x = m
    for k in range(1, cap + 1):
        if x == ident:
            return k
        x = x @ m
    return None


def multiplicative_order(a: int, n: int) -> int:
    a %= n
    x, k = a, 1
    while x != 1 % n:
        x = x * a % n
        k += 1
    return k


def stabilizer_invariance(lm: LocalMap, gamma_prime: GL2Matrix) -> bool:
    """Does the direct formula give the same value on gamma' and gamma' pi, pi the
    parabolic generator of Gamma(n) fixing the source base point?"""
    pi = _base_parabolic(lm)
    return lm.group_image(gamma_prime) == lm.group_image(gamma_prime * pi)


def _base_parabolic(lm: LocalMap) -> GL2Matrix:
    # loops are based at the class representative (see LocalMap.group_data)
    A = lm.source.representative.matrix()
    n = lm.n
    return A * GL2Matrix(1, n, 0, 1) * A.inverse()


# --- analysis on the augmentation-ideal part of V ---


def ideal_positions(model: AlgebraModel, n_summands: int, min_grade: int = 1) -> list[int]:
    D = model.dim
    return [s * D + i for s in range(n_summands) for i in range(D) if model.degree(i) >= min_grade]


def restrict_to_ideal(h: HeckeMatrix, model: AlgebraModel) -> QMatrix:
    pos = ideal_positions(model, len(h.indices))
    tot = h.total()
    low = [i for i in range(tot.rows) if i not in set(pos)]
    # I must be invariant: rows outside I vanish on I-columns
    for i in low:
        if any(tot[i, j] for j in pos):
            raise HeckeConsistencyError("augmentation ideal is not invariant")
    return tot.submatrix(pos, pos)


def filtration_preserved(h: HeckeMatrix, model: AlgebraModel) -> bool:
    """E(I^m) within I^m for all m, in normal-form grade coordinates."""
    tot = h.total()
    D = model.dim
    deg = [model.degree(i % D) for i in range(tot.rows)]
    for j in range(tot.cols):
        for i in range(tot.rows):
            if deg[i] < deg[j] and tot[i, j]:
                return False
    return True


@dataclass
class ComponentEntry:
    component: PrimaryComponent
    factors: dict  # operator label -> QPolynomial
    grades: list  # grades met by the component
    dichotomy: bool


@dataclass
class ComponentReport:
    level: int
    N: int
    labels: list
    dim: int
    entries: list
    warnings: list

    def summary(self) -> list[dict]:
        return [
            {
                "dim": e.component.dim,
                "factors": {k: repr(v) for k, v in e.factors.items()},
                "nilpotency": list(e.component.nilpotency),
                "grades": e.grades,
                "dichotomy": e.dichotomy,
            }
            for e in self.entries
        ]


def hecke_family(n: int, N: int, primes) -> tuple[list, list]:
    labels, mats = [], []
    for p in primes:
        for tag in ("Tp", "Tpp"):
            kind = HeckeKind(tag, p)
            labels.append(str(kind))
            mats.append(hecke_operator(n, N, kind))
    return labels, mats


def _grades_of(basis: QMatrix, grade_of_row: list, N: int) -> list[int]:
    met = set()
    for i in range(basis.rows):
        if any(basis.row(i)):
            met.add(grade_of_row[i])
    return sorted(met)


def dichotomy_check(basis: QMatrix, grade_of_row: list, N: int) -> bool:
    """W meets every I^m (2 <= m <= N) in either 0 or all of W."""
    k = basis.cols
    for m in range(2, N + 1):
        low = [i for i in range(basis.rows) if grade_of_row[i] < m]
        r = rref(basis.submatrix(low, range(k)))[0] if low else 0
        if r not in (0, k):
            return False
    return True


def filtration_dichotomy(basis: QMatrix, filtration: list) -> bool:
    """Dichotomy against an arbitrary decreasing filtration given by subspace bases."""
    k = basis.cols
    for sub in filtration:
        stacked = sub.hstack(basis)
        dim_sum = rref(stacked.transpose())[0]
        dim_int = sub.cols + k - dim_sum
        if dim_int not in (0, k):
            return False
    return True


def hecke_components(n: int, N: int, primes) -> ComponentReport:
    for p in primes:
        if n % p == 0:
            raise ValueError(f"prime {p} divides the level {n}")
    model = _model(n, N)
    labels, mats = hecke_family(n, N, primes)
    fam = [restrict_to_ideal(h, model) for h in mats]
    try:
        comps = primary_decomposition(fam)
    except NonCommutingError as exc:
        i, j = exc.pair
        raise HeckeConsistencyError(f"{labels[i]} and {labels[j]} do not commute on I") from exc
    n_sum = len(summand_indices(n))
    pos = ideal_positions(model, n_sum)
    grade_of_row = [model.degree(p % model.dim) for p in pos]
    entries = []
    for c in comps:
        entries.append(
            ComponentEntry(
                component=c,
                factors=dict(zip(labels, c.factors)),
                grades=_grades_of(c.basis, grade_of_row, N),
                dichotomy=dichotomy_check(c.basis, grade_of_row, N),
            )
        )
    warnings = []
    seen: dict = {}
    for i, c in enumerate(comps):
        key = tuple(c.factors)
        if key in seen:
            warnings.append(
                f"components {seen[key]} and {i} share all eigen-factors; add primes to separate them"
            )
        else:
            seen[key] = i
    return ComponentReport(n, N, labels, len(pos), entries, warnings)


@dataclass
class DichotomyReport:
    passed: bool
    components: list  # (dim, grades, ok)
    warnings: list


def verify_dichotomy(n: int, N: int, primes) -> DichotomyReport:
    if N < 2:
        return DichotomyReport(True, [], [])
    rep = hecke_components(n, N, primes)
    comps = [(e.component.dim, e.grades, e.dichotomy) for e in rep.entries]
    return DichotomyReport(all(ok for _, _, ok in comps), comps, rep.warnings)


@dataclass
class GradeSpectrum:
    charpoly: QPolynomial
    moduli: list  # (modulus, error bound) per root
    roots: list


def grade_spectrum(n: int, N: int, kind: HeckeKind, m: int, digits: int = 40) -> GradeSpectrum:
    """Characteristic polynomial of E(T) induced on I^m/I^{m+1}, with root moduli."""
    if not 0 <= m <= N:
        raise ValueError("grade out of range")
    model = _model(n, N)
    h = hecke_operator(n, N, kind, model=model)
    if not filtration_preserved(h, model):
        raise HeckeConsistencyError(f"{kind} does not preserve the I-adic filtration")
    tot = h.total()
    D = model.dim
    pos = [i for i in range(tot.rows) if model.degree(i % D) == m]
    block = tot.submatrix(pos, pos)
    cp = charpoly(block)
    roots = []
    moduli = []
    if cp.degree >= 1:
        for f, mult in factor_q(cp):
            if f.degree == 0:
                continue
            with mpmath.workdps(digits):
                coeffs = [mpmath.mpf(int(c.numerator)) / int(c.denominator) for c in reversed(f.coeffs)]
                rs = mpmath.polyroots(coeffs, maxsteps=200, extraprec=4 * digits) if f.degree > 1 else [-coeffs[1] / coeffs[0]]
                dcoeffs = [c * (f.degree - i) for i, c in enumerate(coeffs[:-1])]
                for r in rs:
                    # some root lies within deg * |f(r) / f'(r)| of r
                    resid = abs(mpmath.polyval(coeffs, r))
                    slope = abs(mpmath.polyval(dcoeffs, r)) if dcoeffs else mpmath.mpf(1)
                    err = float(f.degree * resid / slope) if slope else float("inf")
                    err = max(err, float(mpmath.mpf(10) ** (5 - digits)))
                    for _ in range(mult):
                        roots.append(complex(r))
                        moduli.append((float(abs(r)), err))
    return GradeSpectrum(cp, moduli, roots)
