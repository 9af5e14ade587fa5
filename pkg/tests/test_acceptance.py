"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test prints a single PASS line when its assertions hold, so a verbose
run reads as a checklist. Seeded inputs are fixed; nothing is tuned at
runtime.
"""

import math

import numpy as np

from conftest import diag_separable_full_rank, diag_separable_with_kernel, product_state, pure_state
from scatentropy.criteria import Guarantee, check_commutation, check_special_form, classify
from scatentropy.harness import demon_search, run_scenario
from scatentropy.linalg import kron
from scatentropy.oracle import exact_delta_entropy
from scatentropy.perturb import (
    first_order_entropy,
    full_rank_second_order,
    log_coefficient,
    log_coefficient_forms,
    trace_identity_check,
)
from scatentropy.qstate import BipartiteState, a_spectral_data
from scatentropy.scenarios import builtin, builtin_library
from scatentropy.smatrix import random_hermitian


def _ok(tag, detail):
    print(f"{tag}: PASS ({detail})")


# A1: pure-state log law: fitted b equals the both-subsystem-changing
# transition probability within 2%; no linear term.
def test_a1_pure_state_log_law():
    report = run_scenario(builtin("pure-product-2x2"))
    fit = report.fit
    predicted_b = 1.0  # single element t = 1: sum |T|^2 over both-changing transitions
    assert abs(fit.a) <= 1e-8
    assert abs(fit.b - predicted_b) <= 0.02 * predicted_b
    assert abs(report.prediction.log_coeff - predicted_b) <= 1e-12
    _ok("A1", f"a={fit.a:.2e}, b={fit.b:.6f} vs {predicted_b}")


# A2: two-two-level full rank: fitted c matches the printed closed form
# within 2% on the (x, y) grid, and the sign flips across y = x.
def test_a2_two_two_level_full_rank():
    worst = 0.0
    signs = {}
    for x in (0.75, 0.6):
        for y, tag in ((0.0, "000"), (0.5, "050"), (1.0, "100")):
            report = run_scenario(builtin(f"fullrank-x{int(x * 100):03d}-y{tag}"))
            closed = math.log(x / (1.0 - x)) * (x * (1.0 - y) - (1.0 - x) * y)
            rel = abs(report.fit.c - closed) / abs(closed)
            worst = max(worst, rel)
            signs[(x, y)] = math.copysign(1.0, report.fit.c)
            assert rel <= 0.02, (x, y, rel)
    for x in (0.75, 0.6):
        assert signs[(x, 0.0)] > 0 and signs[(x, 1.0)] < 0  # flip across y = x
        assert signs[(x, 0.5)] > 0  # y = 0.5 < x on both grid points
    _ok("A2", f"worst rel err {worst:.4f} over 6 grid points, sign flips across y=x")


# A3: thermal onset: ground-state B cools A (c < 0); inverted B heats A.
def test_a3_thermal_onset():
    ground = run_scenario(builtin("thermal-ground"))
    inverted = run_scenario(builtin("thermal-inverted"))
    assert ground.fit.c < 0.0
    assert inverted.fit.c > 0.0
    assert abs(ground.thermal_coeff - ground.prediction.order2_coeff) <= 1e-10
    _ok("A3", f"ground c={ground.fit.c:.4f} < 0, inverted c={inverted.fit.c:.4f} > 0")


# A4: guarantee: 1000 seeded kernel scenarios never lose entropy at
# lam = 1e-3, and the log coefficient is nonnegative (positive under a
# StrictIncrease verdict).
def test_a4_guarantee_over_1000_scenarios():
    worst_ds = math.inf
    worst_b = math.inf
    strict = 0
    for seed in range(1000):
        state = diag_separable_with_kernel(seed)
        t1 = random_hermitian(state.dim, 100_000 + seed)
        ds = exact_delta_entropy(state, t1, 1e-3)
        assert ds >= -1e-10, seed
        b = log_coefficient(state, t1)
        assert b >= -1e-12, seed
        verdict = classify(state, t1)
        if verdict.overall is Guarantee.STRICT_INCREASE:
            strict += 1
            assert b > 0.0, seed
        worst_ds = min(worst_ds, ds)
        worst_b = min(worst_b, b)
    _ok("A4", f"min dS={worst_ds:.3e}, min b={worst_b:.3e}, {strict}/1000 StrictIncrease")


# A5: first-order vanishing on criterion-2 states; nonzero and fit-matched
# on the counterexample.
def test_a5_first_order_vanishing_and_counterexample():
    states = [
        pure_state({(0, 0): 1.0}, 2, 2),
        diag_separable_with_kernel(7),
        product_state([0.3, 0.7], [0.2, 0.8]),
        product_state([0.5, 0.3, 0.2], [1.0]),
        BipartiteState(rho=np.eye(6, dtype=complex) / 6.0, d_a=3, d_b=2),
    ]
    worst = 0.0
    for state in states:
        adata = a_spectral_data(state)
        for k in range(200):
            t1 = random_hermitian(state.dim, 200_000 + k)
            worst = max(worst, abs(first_order_entropy(state, t1, adata)))
    assert worst <= 1e-10

    report = run_scenario(builtin("bell-counterexample"))
    a_pred = report.prediction.order1_coeff
    assert abs(a_pred) > 1e-3
    rel = abs(a_pred - report.fit.a) / abs(report.fit.a)
    assert rel <= 0.01
    _ok("A5", f"max |a| = {worst:.2e} over 5 states x 200 T1; counterexample rel err {rel:.2e}")


# A6: form equivalence: the two kernel-sum forms agree to 1e-10 on every
# kernel-branch scenario; the two criterion-2 tests agree on 500 seeds.
def test_a6_form_equivalence():
    worst_gap = 0.0
    checked = 0
    for seed in range(200):
        state = diag_separable_with_kernel(seed)
        t1 = random_hermitian(state.dim, 300_000 + seed)
        square, direct = log_coefficient_forms(state, t1)
        worst_gap = max(worst_gap, abs(square - direct))
        checked += 1
    for name in ("pure-product-2x2", "unitary-on-a"):
        cfg = builtin(name)
        from scatentropy.scenarios import build_state, build_t1

        state = build_state(cfg)
        square, direct = log_coefficient_forms(state, build_t1(cfg))
        worst_gap = max(worst_gap, abs(square - direct))
        checked += 1
    assert worst_gap <= 1e-10

    from conftest import random_density

    agree = 0
    for seed in range(500):
        rng = np.random.default_rng(seed)
        family = seed % 4
        if family == 0:
            state = diag_separable_with_kernel(seed)
        elif family == 1:
            state = diag_separable_full_rank(seed)
        elif family == 2:
            d_a, d_b = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            state = BipartiteState(
                rho=kron(
                    np.diag(rng.dirichlet(np.ones(d_a))).astype(complex),
                    random_density(rng, d_b),
                ),
                d_a=d_a,
                d_b=d_b,
            )
        else:
            d_a = int(rng.integers(2, 4))
            state = BipartiteState(rho=random_density(rng, 2 * d_a), d_a=d_a, d_b=2)
        adata = a_spectral_data(state)
        ok, _ = check_commutation(state, adata)
        assert ok == check_special_form(state), seed
        agree += 1
    _ok("A6", f"form gap {worst_gap:.2e} over {checked} kernel scenarios; {agree}/500 verdicts agree")


# A7: trace identity on 500 seeded full-rank scenarios.
def test_a7_trace_identity():
    worst = 0.0
    for seed in range(500):
        state = diag_separable_full_rank(seed)
        t1 = random_hermitian(state.dim, 400_000 + seed)
        worst = max(worst, trace_identity_check(state, t1))
    assert worst <= 1e-9
    _ok("A7", f"max defect {worst:.2e} over 500 scenarios")


# A8: null cases: T1 = H_A x 1_B changes nothing; a super-selection
# protected kernel has zero log coefficient.
def test_a8_null_cases():
    state = pure_state({(0, 0): 1.0}, 2, 2)
    h_a = random_hermitian(2, 88)
    t1 = kron(h_a, np.eye(2, dtype=complex))
    ds = exact_delta_entropy(state, t1, 1e-2)
    assert abs(ds) <= 5e-12
    assert abs(first_order_entropy(state, t1)) <= 1e-12
    assert abs(log_coefficient(state, t1)) <= 1e-12
    full = product_state([0.7, 0.3], [0.6, 0.4])
    assert abs(full_rank_second_order(full, kron(h_a, np.eye(2, dtype=complex)))) <= 1e-12

    from scatentropy.scenarios import build_state, t_sampler

    cfg = builtin("superselection-protected")
    protected_state = build_state(cfg)
    sampler = t_sampler(cfg, 77)
    for k in range(5):
        assert abs(log_coefficient(protected_state, sampler(k))) <= 1e-12
    _ok("A8", f"unit-on-B dS={ds:.2e}; protected kernel b = 0")


# A9: oracle sanity on every exact evolution driven by the sweep suite.
def test_a9_oracle_sanity():
    worst_trace = worst_spec = worst_entropy = 0.0
    swept = 0
    for cfg in builtin_library():
        if cfg.mode != "sweep":
            continue
        report = run_scenario(cfg)
        sanity = report.oracle_sanity
        worst_trace = max(worst_trace, sanity.trace_defect)
        worst_spec = max(worst_spec, sanity.spectrum_defect)
        worst_entropy = max(worst_entropy, sanity.full_entropy_defect)
        swept += 1
    assert worst_trace <= 1e-12
    assert worst_spec <= 1e-9
    assert worst_entropy <= 1e-9
    _ok(
        "A9",
        f"{swept} sweeps: trace {worst_trace:.2e}, spectrum {worst_spec:.2e}, "
        f"entropy {worst_entropy:.2e}",
    )


# A10: demon: finds a decrease on the counterexample and full-rank
# scenarios within 500 samples, never on StrictIncrease scenarios.
def test_a10_demon():
    bell = demon_search(builtin("bell-counterexample"), budget=500, seed=10)
    assert bell.best_delta_s < -1e-8
    fullrank = demon_search(builtin("fullrank-x075-y000"), budget=500, seed=10)
    assert fullrank.best_delta_s < -1e-8

    floors = []
    for name in ("guarantee-diag-3x3", "pure-product-2x2"):
        result = demon_search(builtin(name), budget=500, seed=10)
        assert result.best_delta_s >= -1e-10, name
        floors.append(result.best_delta_s)
    _ok(
        "A10",
        f"bell {bell.best_delta_s:.2e}, fullrank {fullrank.best_delta_s:.2e}, "
        f"guarantee floors {min(floors):.2e}",
    )
