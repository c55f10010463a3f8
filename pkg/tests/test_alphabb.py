import math
import random

import mpmath
import numpy as np
import pytest

from pcx.alphabb import (
    AlphaProfile,
    RelaxedObjective,
    compute_alpha,
    gershgorin_lambda_min,
    lipschitz_bound,
    relax_eval,
    relax_grad,
    width_threshold,
)
from pcx.errors import PreconditionError
from pcx.expr import IntervalMatrix, Objective, parse
from pcx.interval import Box, Interval, bisect
from pcx.problem import load_problem


def obj(text, m):
    return Objective(parse(text, m), m, text)


def iv(lo, hi):
    return Interval(lo, hi)


def test_gershgorin_scalar():
    assert gershgorin_lambda_min(IntervalMatrix(((iv(-6, 6),),))) == -6


def test_gershgorin_hand_computed():
    H = IntervalMatrix(((iv(2, 3), iv(-1, 1)), (iv(-1, 1), iv(4, 5))))
    assert gershgorin_lambda_min(H) == 1


def test_gershgorin_diagonal():
    H = IntervalMatrix(((iv(2, 2), iv(0, 0)), (iv(0, 0), iv(2, 2))))
    assert gershgorin_lambda_min(H) == 2


def test_gershgorin_bounds_sampled_eigenvalues():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = rng.integers(1, 5)
        lo = rng.normal(size=(n, n))
        lo = (lo + lo.T) / 2
        rad = np.abs(rng.normal(size=(n, n)))
        rad = (rad + rad.T) / 2
        H = IntervalMatrix(tuple(tuple(iv(lo[i, j] - rad[i, j], lo[i, j] + rad[i, j]) for j in range(n)) for i in range(n)))
        bound = gershgorin_lambda_min(H)
        for _ in range(20):
            A = lo + rad * rng.uniform(-1, 1, size=(n, n))
            A = np.triu(A) + np.triu(A, 1).T
            assert np.linalg.eigvalsh(A)[0] >= bound - 1e-12


def test_alpha_of_negative_cubic():
    assert compute_alpha(obj("-x1^3", 1), Box.from_bounds([-1], [1])) == 6


def test_alpha_of_convex_function_is_zero():
    assert compute_alpha(obj("x1^2", 1), Box.from_bounds([-5], [3])) == 0


def test_alpha_shrinks_on_sub_boxes():
    problem = load_problem("ex51")
    f2 = problem.objectives[1]
    parent = problem.box
    alpha = compute_alpha(f2, parent)
    for _ in range(6):
        children = bisect(parent)
        child_alphas = [compute_alpha(f2, c) for c in children]
        assert max(child_alphas) <= alpha
        parent = children[int(np.argmax(child_alphas))]
        alpha = max(child_alphas)


def test_alpha_profile_margin():
    problem = load_problem("ex53")
    prof = AlphaProfile.on_root(problem.objectives, problem.box)
    assert prof.alpha_tilde == max(prof.alphas) + 0.01


def test_relax_eval_cubic():
    r = RelaxedObjective(obj("-x1^3", 1), Box.from_bounds([-1], [1]), 6.0)
    assert relax_eval(r, [0.0]) == -3.0
    assert relax_eval(r, [-1.0]) == 1.0
    with pytest.raises(PreconditionError):
        relax_eval(r, [1.5])


def test_relax_with_zero_alpha_is_base():
    f = obj("x1*sin(x2)", 2)
    r = RelaxedObjective(f, Box.from_bounds([0, 0], [2, 3]), 0.0)
    for x in ([0.5, 1.0], [2.0, 3.0]):
        assert relax_eval(r, x) == f(x)
        assert relax_grad(r, x) == pytest.approx(f.gradient(x))


def test_relax_grad_cubic():
    r = RelaxedObjective(obj("-x1^3", 1), Box.from_bounds([-1], [1]), 6.0)
    assert relax_grad(r, [0.0]) == pytest.approx([0.0])


def test_relax_grad_finite_differences():
    rng = random.Random(9)
    problem = load_problem("ex53")
    box = Box.from_bounds([0.3, 0.2], [0.4, 0.3])
    for f in problem.objectives:
        r = RelaxedObjective.build(f, box)
        for _ in range(50):
            x = [rng.uniform(d.lo + 1e-3, d.hi - 1e-3) for d in box]
            g = relax_grad(r, x)
            for i in range(2):
                h = 1e-6
                xp, xm = list(x), list(x)
                xp[i] += h
                xm[i] -= h
                fd = (r(xp) - r(xm)) / (2 * h)
                assert g[i] == pytest.approx(fd, rel=1e-6, abs=1e-7)


def test_underestimation_and_error_floor():
    rng = random.Random(10)
    problem = load_problem("ex53")
    for t in range(200):
        lo = [rng.uniform(0.1, 0.9), rng.uniform(0, 0.9)]
        box = Box.from_bounds(lo, [lo[0] + rng.uniform(0.001, 0.1), lo[1] + rng.uniform(0.001, 0.1)])
        for f in problem.objectives:
            r = RelaxedObjective.build(f, box)
            floor = -sum((w / 2) ** 2 for w in box.widths)
            assert r.error_term(box.midpoint) == pytest.approx(floor, rel=1e-12)
            for _ in range(10):
                x = [rng.uniform(d.lo, d.hi) for d in box]
                assert r(x) <= f(x) + 1e-12
                assert r.error_term(x) >= floor - 1e-15


def test_relaxation_is_convex_on_its_box():
    rng = np.random.default_rng(11)
    problem = load_problem("ex52")
    box = Box.from_bounds([-0.5, 0.0, 0.2], [0.0, 0.5, 0.4])
    for f in problem.objectives:
        r = RelaxedObjective.build(f, box)
        for _ in range(100):
            x = rng.uniform(box.lo, box.hi)
            eig = np.linalg.eigvalsh(f.hessian(x) + r.alpha * np.eye(3))
            assert eig[0] >= -1e-9


def test_lipschitz_bound_values():
    assert lipschitz_bound(obj("x1", 2), Box.from_bounds([0, 0], [1, 1])) == pytest.approx(math.sqrt(2))
    assert lipschitz_bound(obj("3", 2), Box.from_bounds([0, 0], [1, 1])) == 1e-12
    assert lipschitz_bound(obj("3*x1", 1), Box.from_bounds([0], [1])) == pytest.approx(3)


def _threshold_oracle(Ls, a, eps):
    # literal transcription of the min over objectives, in 50-digit arithmetic
    with mpmath.workdps(50):
        a, eps = mpmath.mpf(a), mpmath.mpf(eps)
        return float(min(-4 * L / a + mpmath.sqrt(2 * eps / a + 16 * mpmath.mpf(L) ** 2 / a**2) for L in Ls))


def test_width_threshold_values():
    assert width_threshold([1.0], 2.0, 0.02) == pytest.approx(_threshold_oracle([1.0], 2.0, 0.02), rel=1e-12)
    assert width_threshold([1.0], 2.0, 0.02) == pytest.approx(0.0049937656, rel=1e-8)
    assert width_threshold([1.0, 10.0], 2.0, 0.02) == pytest.approx(_threshold_oracle([1.0, 10.0], 2.0, 0.02), rel=1e-12)
    assert width_threshold([1.0, 10.0], 2.0, 0.02) == pytest.approx(0.00049999375, rel=1e-8)


def test_width_threshold_matches_literal_formula():
    rng = random.Random(12)
    for _ in range(200):
        Ls = [10 ** rng.uniform(-3, 3) for _ in range(rng.randint(1, 4))]
        a, eps = 10 ** rng.uniform(-2, 4), 10 ** rng.uniform(-3, 0)
        assert width_threshold(Ls, a, eps) == pytest.approx(_threshold_oracle(Ls, a, eps), rel=1e-12)


def test_width_threshold_monotone_in_eps():
    values = [width_threshold([1.0, 3.0], 5.0, e) for e in np.linspace(0.001, 1, 50)]
    assert all(b > a > 0 for a, b in zip(values, values[1:]))


def test_width_threshold_root_property():
    # the threshold w solves alpha/2 w^2 + 4 L w = eps for the binding objective
    w = width_threshold([2.5], 7.0, 0.02)
    assert 7.0 / 2 * w * w + 4 * 2.5 * w == pytest.approx(0.02, rel=1e-12)
