"""Acceptance criteria, each checked at its stated tolerance.

Every criterion prints one ``CRITERION n: PASS|FAIL`` line (run with ``-s``
to see them live; they are also collected in the terminal summary). Known
misses are reported as expected failures together with the measured values,
never by loosening a tolerance.
"""

import math
import subprocess
import sys
import time
from functools import cache
from pathlib import Path

import pytest
from conftest import ACCEPTANCE_LINES as LINES

from dpm.bench import build_records, fitted_rate
from dpm.timestepper import SolverConfig, run

GRIDS = (100, 200, 400)
TESTS = Path(__file__).parent
PROPERTY_FILES = sorted(p.name for p in TESTS.glob("test_*.py") if p.name != "test_acceptance.py")

REF = {
    ("tp1a", 2): (1.7105e-5, 4.1980e-6, 1.0135e-6),
    ("tp3a", 2): (1.7721e-5, 4.3619e-6, 1.0526e-6),
    ("tp2a", 2): (3.6380e-5, 8.8360e-6, 2.1331e-6),
    ("tp2a", 4): (7.7484e-9, 4.5617e-10, 2.6398e-11),
    ("tp2b", 2): (7.1899e-2, 1.7868e-2, 4.4952e-3),
    ("tp2c", 2): (1.1178e-1, 1.8941e-2, 4.0950e-3),
    ("tp2c", 4): (1.1392e-3, 5.9291e-5, 3.2716e-6),
}

# Sub-checks that miss their tolerance for reasons recorded in the decisions
# ledger. Anything else failing is a plain test failure.
KNOWN_MISSES = {
    "tp2a DPM4 pair rates 4 +- 0.4",
    "tp2c DPM2 within x2",
}


@cache
def table(problem: str, order: int, geometry: str = "explicit"):
    results = [run(SolverConfig(problem, order, n, geometry=geometry)) for n in GRIDS]
    return results, build_records(results)


def errors(problem, order, geometry="explicit"):
    return [r.error for r in table(problem, order, geometry)[1]]


def pair_rates(problem, order, geometry="explicit"):
    return [r.rate for r in table(problem, order, geometry)[1][1:]]


def within_factor(got, ref, factor):
    return all(ref / factor <= g <= ref * factor for g, ref in zip(got, ref))


def same_3_digits(a, b):
    return abs(a - b) <= 0.5 * 10 ** (math.floor(math.log10(abs(b))) - 2)


class Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.checks: list[tuple[str, bool, str]] = []

    def check(self, name, ok, detail):
        self.checks.append((name, bool(ok), detail))

    def finish(self):
        failed = [c for c in self.checks if not c[1]]
        status = "PASS" if not failed else "FAIL"
        detail = "; ".join(f"{n} [{'ok' if ok else 'MISS'}] {d}" for n, ok, d in self.checks)
        line = f"CRITERION {self.number}: {status} {self.title} :: {detail}"
        print("\n" + line)
        LINES.append(line)
        unexpected = [c for c in failed if c[0] not in KNOWN_MISSES]
        assert not unexpected, f"unexpected misses: {unexpected}"
        if failed:
            pytest.xfail("known miss, see decisions ledger: " + ", ".join(c[0] for c in failed))


def fmt(values):
    return "(" + ", ".join(f"{v:.4e}" for v in values) + ")"


def rates_text(values):
    return "(" + ", ".join(f"{v:.2f}" for v in values) + ")"


def single_domain_checks(c, pid):
    e2, e4 = errors(pid, 2), errors(pid, 4)
    c.check(f"{pid} DPM2 within x2", within_factor(e2, REF[(pid, 2)], 2), fmt(e2))
    fit = fitted_rate(table(pid, 2)[1])
    c.check(f"{pid} DPM2 fitted rate 2 +- 0.3", abs(fit - 2) <= 0.3, f"{fit:.2f}")
    r4 = pair_rates(pid, 4)
    c.check(f"{pid} DPM4 rate >= 4", min(r4) >= 4.0, f"{fmt(e4)} rates {rates_text(r4)}")


def test_criterion_1_tp1a():
    c = Criterion(1, "TP-1A")
    single_domain_checks(c, "tp1a")
    secs = table("tp1a", 2)[0][-1].seconds
    c.check("400^2 DPM2 run <= 10 min", secs <= 600, f"{secs:.0f} s")
    c.finish()


def test_criterion_2_tp3a():
    c = Criterion(2, "TP-3A")
    single_domain_checks(c, "tp3a")
    for order in (2, 4):
        a, b = errors("tp3a", order), errors("tp1a", order)
        rel = [abs(x - y) / y for x, y in zip(a, b)]
        c.check(f"DPM{order} within 20% of TP-1A", max(rel) <= 0.2, "rel " + rates_text(rel))
    c.finish()


def test_criterion_3_tp2a():
    c = Criterion(3, "TP-2A")
    e2, e4 = errors("tp2a", 2), errors("tp2a", 4)
    c.check("tp2a DPM2 within x2", within_factor(e2, REF[("tp2a", 2)], 2), fmt(e2))
    c.check("tp2a DPM4 within x3", within_factor(e4, REF[("tp2a", 4)], 3), fmt(e4))
    r2, r4 = pair_rates("tp2a", 2), pair_rates("tp2a", 4)
    c.check("tp2a DPM2 pair rates 2 +- 0.3", all(abs(r - 2) <= 0.3 for r in r2), rates_text(r2))
    c.check("tp2a DPM4 pair rates 4 +- 0.4", all(abs(r - 4) <= 0.4 for r in r4), rates_text(r4))
    c.finish()


def test_criterion_4_tp2b():
    c = Criterion(4, "TP-2B")
    e2 = errors("tp2b", 2)
    c.check("tp2b DPM2 within x2", within_factor(e2, REF[("tp2b", 2)], 2), fmt(e2))
    r4 = pair_rates("tp2b", 4)
    c.check("tp2b DPM4 last rate >= 3.5", r4[-1] >= 3.5, f"{fmt(errors('tp2b', 4))} rates {rates_text(r4)}")
    c.finish()


def test_criterion_5_tp2c():
    c = Criterion(5, "TP-2C")
    e2, e4 = errors("tp2c", 2), errors("tp2c", 4)
    c.check("tp2c DPM2 within x2", within_factor(e2, REF[("tp2c", 2)], 2), fmt(e2))
    c.check("tp2c DPM4 within x3", within_factor(e4, REF[("tp2c", 4)], 3), fmt(e4))
    c.finish()


def test_criterion_6_implicit_parity():
    c = Criterion(6, "implicit geometry parity")
    for order in (2, 4):
        ex, im = errors("tp2a", order), errors("tp2a", order, "implicit")
        ok = all(same_3_digits(i, e) for i, e in zip(im, ex))
        c.check(f"tp2a DPM{order}-I 3 digits", ok, f"{fmt(im)} vs {fmt(ex)}")
    for order in (2, 4):
        ex, im = errors("tp2c", order), errors("tp2c", order, "implicit")
        rel = [abs(i - e) / e for i, e in zip(im, ex)]
        c.check(f"tp2c DPM{order}-I within 10%", max(rel) <= 0.1, "rel " + rates_text(rel))
    c.finish()


def test_criterion_7_property_suite():
    c = Criterion(7, "property suite")
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_FILES],
                          cwd=TESTS, capture_output=True, text=True)
    secs = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    c.check("property tests green", proc.returncode == 0, tail)
    c.check("under 2 min", secs < 120, f"{secs:.0f} s")
    c.finish()

