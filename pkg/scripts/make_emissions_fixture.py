"""Regenerate the bundled synthetic emissions fixture.

The 1990 and 1991 rows for oil, cement, gas and flaring are the published
Our World in Data values for Azerbaijan; every other cell is synthetic.
The output is NOT a substitute for a real data snapshot.
"""

import sys

import numpy as np

YEARS = np.arange(1990, 2024)
PUBLISHED = {
    "oil": (22_399_392, 22_534_228),
    "cement": (477_970, 466_890),
    "gas": (28_082_780, 26_573_342),
    "flaring": (191_063, 177_742),
}


def path(knots_x, knots_y):
    return np.interp(YEARS, knots_x, knots_y)


def main(out=sys.stdout):
    rng = np.random.default_rng(2024)
    t = YEARS
    base = {
        "oil": path([1990, 1997, 2007, 2014, 2023], [22.4e6, 12.0e6, 14.5e6, 11.0e6, 12.5e6]),
        "coal": path([1990, 1995, 2005, 2015, 2023], [4.0e4, 2.0e3, 1.5e4, 1.0e3, 6.0e3]),
        "cement": path([1990, 1996, 2004, 2023], [478e3, 160e3, 420e3, 1.32e6]),
        "gas": path([1990, 1999, 2008, 2023], [28.1e6, 17.0e6, 19.5e6, 26.0e6]),
        "flaring": path([1990, 2000, 2010, 2023], [191e3, 300e3, 260e3, 210e3]),
    }
    noise = {"oil": 0.03, "coal": 0.9, "cement": 0.015, "gas": 0.03, "flaring": 0.45}
    cols = {}
    for name, b in base.items():
        v = b * np.exp(rng.normal(0.0, noise[name], t.size))
        cols[name] = np.maximum(np.round(v), 0).astype(int)
        if name in PUBLISHED:
            cols[name][:2] = PUBLISHED[name]
    print("# Azerbaijan annual CO2 emissions by source, tonnes CO2/year.", file=out)
    print("# SYNTHETIC FIXTURE (vintage: generated 2026-10, numpy seed 2024) except the", file=out)
    print("# 1990-1991 oil/cement/gas/flaring cells, which are published Our World in Data values.", file=out)
    print("# Regenerate with scripts/make_emissions_fixture.py.", file=out)
    names = ["oil", "coal", "cement", "gas", "flaring"]
    print("Year," + ",".join(f"Annual CO₂ emissions from {n}" for n in names), file=out)
    for i, y in enumerate(YEARS):
        print(f"{y}," + ",".join(str(cols[n][i]) for n in names), file=out)


if __name__ == "__main__":
    main()
