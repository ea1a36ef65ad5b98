"""End-to-end acceptance runs at full size.

Each test runs one experiment driver with its stated sizes and tolerance and
records a one-line verdict, printed in the terminal summary.
"""


from ustsle import experiments as ex

LINES: dict[int, str] = {}

BUDGET_SECONDS = {1: 120, 2: 300, 3: 120, 4: 1800, 5: 60, 6: 300, 7: 900, 8: 120, 9: 600, 10: 3600}


def record(number: int, result: ex.CheckResult) -> None:
    within = result.seconds < BUDGET_SECONDS[number]
    verdict = "PASS" if result.passed and within else "FAIL"
    budget = "" if within else f", over the {BUDGET_SECONDS[number]}s budget"
    LINES[number] = f"criterion {number:2d} {verdict} {result.name}: {result.summary} ({result.seconds:.1f}s{budget})"
    print(LINES[number])
    assert result.passed, result.summary
    assert within, f"took {result.seconds:.0f}s"


def test_criterion_01_exact_pairing():
    res = ex.exact_pairing_check(seed=7)
    n_instances = len({(r["N"], r["instance"]) for r in res.rows})
    n_holdout = len({(r["N"], r["instance"]) for r in res.rows if r["role"] == "holdout"})
    assert n_instances >= 6 and n_holdout >= 2
    record(1, res)


def test_criterion_02_branch_martingales():
    res = ex.branch_martingale_suite(max_t=3)
    assert {r["martingale"] for r in res.rows} == {"M1", "Malpha", "MN", "tildeMN", "tildeMalpha"}
    assert sum(r["stopped_states"] for r in res.rows) > 0
    record(2, res)


def test_criterion_03_boundary_visits():
    res = ex.boundary_visit_suite()
    assert {len(r["visits"]) for r in res.rows} >= {1, 2}
    record(3, res)


def test_criterion_04_pairing_convergence():
    res = ex.pairing_convergence(sizes=(8, 16, 32, 64), samples=100_000, seed=0, tolerance=0.02)
    record(4, res)


def test_criterion_05_pde_residuals():
    res = ex.pde_scan(Ns=(1, 2, 3), count=100, seed=0)
    assert {(r["N"], r["j"]) for r in res.rows} == {(N, j) for N in (1, 2, 3) for j in range(1, 2 * N + 1)}
    record(5, res)


def test_criterion_06_sde_identities():
    res = ex.sde_identities(n_paths=1000, dt=1e-4, t_end=0.05, seed=0)
    record(6, res)


def test_criterion_07_sle_martingale():
    res = ex.sle_martingale(n_paths=10_000, Ns=(1, 2), zs=(2j, 1 + 2j), omega=1j, radius=0.1, seed=0)
    record(7, res)


def test_criterion_08_loewner_numerics():
    res = ex.loewner_numerics(levels=(250, 500, 1000, 2000, 4000))
    record(8, res)


def test_criterion_09_kernel_suite():
    res = ex.kernel_suite(grid=32, walks=100_000, seed=0, sizes=(8, 16, 32, 64))
    record(9, res)


def test_criterion_10_driving_shadow():
    res = ex.driving_shadow(samples=10_000, n=64, setups=("N1", "N2"), seed=0)
    assert len({r["t"] for r in res.rows}) == 5
    record(10, res)
