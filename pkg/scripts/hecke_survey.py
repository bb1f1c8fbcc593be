"""Survey of the Hecke action on the truncated algebra.

For each (level, depth, prime) in the grid: grade-wise characteristic
polynomials of E(T(p)), the order of E(T(p,p)), the primary components of I
and their filtration grades, and how often the closed-form local map survives
gamma -> gamma * pi on random symbols.  Writes one JSON document.

    python scripts/hecke_survey.py --levels 6 --depth 3 --primes 5 7 11
"""

import argparse
import json
import logging
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from modmotive.exact_arith import factor_q
from modmotive.hecke import (
    HeckeConsistencyError,
    HeckeKind,
    _model,
    grade_spectrum,
    hecke_components,
    hecke_operator,
    local_maps,
    matrix_order,
    multiplicative_order,
    stabilizer_invariance,
)
from modmotive.modular_group import GroupWord, cusp_classes, presentation

log = logging.getLogger("hecke_survey")


@dataclass
class SurveyConfig:
    levels: list = field(default_factory=lambda: [6])
    depth: int = 2
    primes: list = field(default_factory=lambda: [5, 7, 11])
    stabilizer_samples: int = 50
    seed: int = 0
    out: str = "results/hecke_survey.json"


def stabilizer_rate(n, N, p, samples, rng):
    model = _model(n, N)
    pres = presentation(n)
    kind = HeckeKind("Tp", p)
    hits = 0
    for _ in range(samples):
        lm = rng.choice(local_maps(model, kind, rng.choice(cusp_classes(n))))
        g = GroupWord((rng.randrange(pres.free_rank), rng.choice((1, -1))) for _ in range(4)).evaluate(pres.generators)
        hits += stabilizer_invariance(lm, g)
    return hits / samples


def survey_level(cfg: SurveyConfig, n: int, rng) -> dict:
    primes = [p for p in cfg.primes if n % p]
    pres = presentation(n)
    out = {"level": n, "genus": pres.genus, "cusps": pres.cusp_count, "primes": primes, "operators": {}}
    N = cfg.depth
    for p in primes:
        entry = {}
        try:
            for m in range(1, N + 1):
                s = grade_spectrum(n, N, HeckeKind("Tp", p), m)
                entry[f"grade{m}"] = {"factors": [[repr(f), e] for f, e in factor_q(s.charpoly)],
                                      "moduli": sorted({round(float(x), 10) for x, _ in s.moduli})}
            entry["Tpp_order"] = matrix_order(hecke_operator(n, N, HeckeKind("Tpp", p)).total())
            entry["Tpp_expected"] = multiplicative_order(p * p, n)
        except HeckeConsistencyError as e:
            entry["error"] = str(e)
        if pres.genus:
            entry["closed_form_stabilizer_rate"] = stabilizer_rate(n, min(N, 2), p, cfg.stabilizer_samples, rng)
        out["operators"][p] = entry
        log.info("n=%d p=%d done", n, p)
    if pres.genus and N >= 2:
        try:
            rep = hecke_components(n, N, primes)
            out["components"] = [{"dim": e.component.dim, "grades": e.grades, "dichotomy": e.dichotomy}
                                 for e in rep.entries]
            out["component_warnings"] = rep.warnings
        except HeckeConsistencyError as e:
            out["components_error"] = str(e)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[6])
    ap.add_argument("--depth", type=int, default=2)
    ap.add_argument("--primes", type=int, nargs="+", default=[5, 7, 11])
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/hecke_survey.json")
    a = ap.parse_args()
    cfg = SurveyConfig(a.levels, a.depth, a.primes, a.samples, a.seed, a.out)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    rng = random.Random(cfg.seed)
    t0 = time.time()
    doc = {"config": asdict(cfg), "levels": [survey_level(cfg, n, rng) for n in cfg.levels]}
    doc["seconds"] = round(time.time() - t0, 1)
    Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.out).write_text(json.dumps(doc, indent=2, sort_keys=True))
    print(json.dumps(doc, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
