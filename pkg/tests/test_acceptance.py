"""Acceptance criteria, one test per criterion, each printing a verdict line.

Every criterion runs through the same suite functions the CLI uses, with the
default configuration, so the numbers here match `grushin --suite ...`.
"""
import math

import numpy as np

from grushin import cli
from grushin.plancherel import lemma_uniformity


def _cfg(*extra):
    return cli.build_config(list(extra))


def _checks(rep, prefix=""):
    return [r for r in rep.records if r.pass_flag is not None and r.name.startswith(prefix)]


def _summary(checks):
    bad = [r.name for r in checks if not r.pass_flag]
    return "all checks passed" if not bad else "failed: " + ", ".join(bad)


def test_c01_eigenvalue_oracle(verdict):
    rep = cli.suite_eigen(_cfg("--set", "count=200"))
    dev = rep.get("oracle_agreement").value
    lam1 = rep.get("lambda1_in_(1,1.02)").value
    ok = rep.get("oracle_agreement").pass_flag and rep.get("lambda1_in_(1,1.02)").pass_flag
    verdict("criterion 1 eigenvalue oracle", ok,
            f"max |dev| over 50 modes = {dev:.2e} (tol 1e-6), lambda_1 = {lam1:.6f}")
    assert ok


def test_c02_gaps_and_growth(verdict):
    rep = cli.suite_eigen(_cfg("--set", "count=200"))
    gaps = [r for r in rep.records if r.family == "gap" and r.params.get("n", 0) <= 200]
    names = ["growth_ratio_n>=20", "growth_ratio_n=200"]
    ok = bool(gaps) and all(r.pass_flag for r in gaps) and all(rep.get(n).pass_flag for n in names)
    verdict("criterion 2 gaps and growth", ok,
            f"{len(gaps)} gap checks, ratio at n=200 = {rep.get('growth_ratio_n=200').value:.5f}")
    assert ok


def test_c03_normalization(verdict):
    rep = cli.suite_eigen(_cfg("--set", "count=50"))
    names = ["boundary_identities", "gram_identity"]
    ok = all(rep.get(n).pass_flag for n in names)
    detail = ", ".join(f"{n} dev {rep.get(n).value:.1e}" for n in names)
    verdict("criterion 3 normalization identities", ok, detail + " (tol 1e-6)")
    assert ok


def test_c04_power_bounds_uniform_in_xi(verdict):
    rep = cli.suite_fiber(_cfg())
    checks = _checks(rep, "xi_uniform") + _checks(rep, "finite")
    spreads = {r.name: r.value for r in _checks(rep, "xi_uniform")}
    ok = all(r.pass_flag for r in checks)
    verdict("criterion 4 discrete power bounds", ok,
            "spreads " + ", ".join(f"{v:.1e}" for v in spreads.values()) + " (tol 2e-2)")
    assert ok


def test_c05_lemma_uniformity(verdict):
    cfg = _cfg()
    failed = []
    worst = 0.0
    for d1 in (1, 2):
        for eps in (0.1, 0.25, 0.5):
            rep = lemma_uniformity(d1, eps, tol=cli.tol(cfg, "lemma"), budget=cfg["budget"])
            failed += [f"d1={d1},eps={eps}:{r.name}" for r in _checks(rep) if not r.pass_flag]
            worst = max(worst, rep.value("worst_relative_tail"))
    ok = not failed
    verdict("criterion 5 lemma uniformity", ok,
            f"worst relative tail {worst:.1e} (tol 1e-6)" + ("" if ok else "; " + ", ".join(failed)))
    assert ok


def test_c06_weighted_plancherel_stability(verdict):
    rep = cli.suite_plancherel(_cfg())
    checks = _checks(rep)
    ok = bool(checks) and all(r.pass_flag for r in checks)
    verdict("criterion 6 weighted Plancherel stability", ok, _summary(checks))
    assert ok


def test_c07_heat_kernel(verdict):
    rep = cli.suite_heat(_cfg())
    checks = _checks(rep)
    ok = bool(checks) and all(r.pass_flag for r in checks)
    semi = rep.get("semigroup").value
    verdict("criterion 7 heat kernel", ok, f"semigroup rel {semi:.1e}; " + _summary(checks))
    assert ok


def test_c08_bochner_riesz_profile(verdict):
    rep = cli.suite_riesz(_cfg())
    ratio = rep.get("kappa=1.uniform").value
    growth = rep.value("kappa=0.growth_last_over_first")
    ok = rep.get("kappa=1.uniform").pass_flag and all(r.pass_flag for r in _checks(rep, "kappa=1."))
    verdict("criterion 8 Bochner-Riesz uniformity", ok,
            f"kappa=1 max/min {ratio:.3f} (tol 1.5); kappa=0 growth {growth:.2f} (recorded)")
    assert ok
    assert math.isfinite(growth)


def test_c09_imaginary_power_slope(verdict):
    rep = cli.suite_sharpness(_cfg())
    slopes = {s: rep.value(f"s={s}.slope") for s in (1.0, 2.0)}
    ok = all(rep.get(f"s={s}.slope_near_s").pass_flag for s in slopes)
    verdict("criterion 9 imaginary power growth", ok,
            ", ".join(f"s={s:g} slope {v:.4f}" for s, v in slopes.items()) + " (tol 5%)")
    assert ok


def test_c10_geometry(verdict):
    rep = cli.suite_geometry(_cfg())
    checks = _checks(rep)
    ok = bool(checks) and all(r.pass_flag for r in checks)
    verdict("criterion 10 geometry", ok, f"{len(checks)} checks; " + _summary(checks))
    assert ok
