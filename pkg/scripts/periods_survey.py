"""Periods of the level-6 newform of y^2 = x^3 + 1.

Single L-values over the cusp orbit of i*oo with bounded denominator, the
depth-two multiple L-value at cusp 0 against the shuffle prediction
L(f,0)^2 / 2, and a bounded relation search.  Writes one JSON document.

    python scripts/periods_survey.py --max-den 12
"""

import argparse
import json
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import mpmath

from modmotive.periods import QExpansion, L_sum, explore_products, multiple_L, orbit_cusps

DATA = Path(__file__).resolve().parent.parent / "tests" / "data" / "level6_x3p1.qexp"


@dataclass
class PeriodsConfig:
    form: str = str(DATA)
    max_den: int = 12
    bound: int = 20
    out: str = "results/periods_survey.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--form", default=str(DATA))
    ap.add_argument("--max-den", type=int, default=12)
    ap.add_argument("--bound", type=int, default=20)
    ap.add_argument("--out", default="results/periods_survey.json")
    a = ap.parse_args()
    cfg = PeriodsConfig(a.form, a.max_den, a.bound, a.out)
    mpmath.mp.prec = 128
    f = QExpansion.read(cfg.form)
    t0 = time.time()
    singles = {}
    for c in [Fraction(0)] + orbit_cusps(f.level, cfg.max_den):
        v = L_sum(f, c)
        singles[str(c)] = v.to_json()
    double = multiple_L([f, f], Fraction(0))
    single0 = L_sum(f, Fraction(0))
    shuffle_gap = double.distance(single0 * single0 * mpmath.mpf(0.5))
    search = explore_products([f, f], Fraction(1, 6), cfg.max_den, bound=cfg.bound)
    doc = {"config": asdict(cfg), "single": singles, "double_at_0": double.to_json(),
           "shuffle_gap_at_0": mpmath.nstr(shuffle_gap, 5), "relation_search": search,
           "seconds": round(time.time() - t0, 1)}
    Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.out).write_text(json.dumps(doc, indent=2, sort_keys=True, default=str))
    print(json.dumps(doc, indent=2, sort_keys=True, default=str))


if __name__ == "__main__":
    main()
