"""Regenerate src/epistoch/data/sars_synthetic.csv.

Synthetic, SARS-like daily counts: a takeoff whose cumulative log-slope
decays over the first month, plus Poisson noise.  The seed is fixed so
the file is reproducible.  These are NOT real surveillance data.
"""
import datetime as dt
from pathlib import Path

import numpy as np

SEED = 20030402
DAYS = 60
START = dt.date(2003, 4, 2)
WINDOWS = [(10, 20), (10, 25), (15, 25)]


def expected_cumulative(t):
    # log-cumulative growth rate decays from 0.55/day with a 7-day time scale
    rate0, decay = 0.55, 7.0
    return 30.0 * np.exp(rate0 * decay * (1.0 - np.exp(-t / decay)))


def main() -> None:
    rng = np.random.default_rng(SEED)
    t = np.arange(DAYS + 1, dtype=float)
    expected = expected_cumulative(t)
    # day 0 carries the cases already present at the start of reporting
    incidence = np.concatenate([[expected[0]], np.diff(expected)])[:DAYS]
    cases = rng.poisson(incidence)
    cum = np.cumsum(cases)
    est = [(np.log(cum[b]) - np.log(cum[a])) / (b - a) for a, b in WINDOWS]
    print("window estimates", np.round(est, 4), "mean", round(float(np.mean(est)), 4))
    out = Path(__file__).resolve().parents[1] / "src" / "epistoch" / "data" / "sars_synthetic.csv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("date,cases\n")
        for i, c in enumerate(cases):
            fh.write(f"{(START + dt.timedelta(days=i)).isoformat()},{int(c)}\n")
    print("wrote", out)


if __name__ == "__main__":
    main()
