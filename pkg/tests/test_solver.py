import numpy as np
import pytest

from conftest import smooth_field
from nehari.affine import AffineFunctional, SphereQuadrature
from nehari.errors import ConfigurationError
from nehari.functionals import ConcaveConvex, Kirchhoff, PQGeneral, Semilinear, eval_phi_lambda
from nehari.mesh import Grid
from nehari.nonlinearity import PurePower
from nehari.solver import (SolverOptions, deflated_search, ground_state, minimax_estimate,
                           minimax_sequence, residual_norm, sweep_c)

G = Grid(1, 128)
SEMI = Semilinear(G, PurePower(4.0))


@pytest.fixture(scope="module")
def ground():
    return ground_state(SEMI, 1.0)


def test_ground_state_certificate(ground):
    assert ground.converged
    assert ground.residual <= 1e-6
    assert abs(ground.energy_gap) <= 1e-8
    assert eval_phi_lambda(SEMI, ground.u, ground.lam) == pytest.approx(1.0, abs=1e-8)
    assert residual_norm(SEMI, ground.u, ground.lam) == pytest.approx(ground.residual)
    assert ground.summary()["lambda"] == ground.lam


def test_trace_nonincreasing(ground):
    values = [v for v, _ in ground.trace]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_symmetry_and_sign(ground):
    u = ground.u
    scale = np.max(np.abs(u))
    assert np.max(np.abs(u - u[::-1])) <= 1e-6 * scale
    u = u if u.sum() >= 0 else -u
    assert u.min() >= -1e-8 * scale


def test_even_symmetry(ground):
    from nehari.mesh import laplacian_eigenbasis

    phi = laplacian_eigenbasis(G, 1)[0][1]
    neg = ground_state(SEMI, 1.0, u0=-phi)
    assert neg.lam == pytest.approx(ground.lam, rel=1e-10)
    assert np.allclose(neg.u, -ground.u, atol=1e-8 * np.abs(ground.u).max())


def test_retraction_feasibility(rng):
    norms = []
    u0 = smooth_field(G, rng, noise=0.01)
    ground_state(SEMI, 1.0, u0=u0, callback=lambda k, u, v: norms.append(SEMI.norm(u)))
    assert len(norms) > 1
    assert np.allclose(norms, 1.0, rtol=0, atol=1e-12)


def test_random_start_reaches_same_level(ground, rng):
    res = ground_state(SEMI, 1.0, u0=np.abs(smooth_field(G, rng, noise=0.05)))
    assert res.converged
    assert res.lam == pytest.approx(ground.lam, rel=1e-8)


def test_non_convergence_reported():
    res = ground_state(SEMI, 1.0, SolverOptions(max_iter=1), u0=smooth_field(G, np.random.default_rng(3)))
    assert not res.converged
    assert res.iterations == 1


def test_other_models_converge():
    g = Grid(1, 64)
    for model, c in ((ConcaveConvex(g, PurePower(4.0), 1.5), 0.05),
                     (PQGeneral(g, 2.0, 2.0, 3.0), 1.0)):
        res = ground_state(model, c)
        assert res.converged, model.kind
        assert abs(res.energy_gap) <= 1e-8


def test_kirchhoff_negative_level():
    g = Grid(1, 64)
    m = Kirchhoff(g, 2.0, -1.0, PurePower(4.0))
    res = ground_state(m)
    assert res.converged and res.lam is None
    assert res.level < 0
    assert "nonnegative-level" not in res.flags


def test_affine_ground_state():
    g = Grid(2, 11)
    A = AffineFunctional(g, PurePower(4.0), quad=SphereQuadrature(32))
    res = ground_state(A)
    assert res.converged
    assert res.level > 0
    w = res.u
    assert A.energy(w) ** 2 == pytest.approx(float(A.nonlin.f(w) @ w) * g.cell_volume, rel=1e-8)


def test_minimax(ground):
    seq = minimax_sequence(SEMI, 1.0, 4)
    vals = [e.value for e in seq]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] - vals[0] >= 1e-6
    assert vals[0] >= ground.lam - 1e-10
    single = minimax_estimate(SEMI, 1.0, 2)
    assert single.value == pytest.approx(vals[1], rel=1e-12)
    with pytest.raises(ConfigurationError):
        minimax_sequence(SEMI, 1.0, 0)


def test_sweep():
    rows = sweep_c(SEMI, [0.5, 1.0, 2.0])
    lams = [r["lambda_1c"] for r in rows]
    assert [r["c"] for r in rows] == [0.5, 1.0, 2.0]
    assert all(r["converged"] for r in rows)
    assert lams[0] - lams[1] > 1e-8 and lams[1] - lams[2] > 1e-8
    assert sweep_c(SEMI, []) == []
    again = sweep_c(SEMI, [1.0, 1.0])
    assert again[0]["lambda_1c"] == pytest.approx(again[1]["lambda_1c"], rel=1e-10)


def test_sweep_records_errors():
    rows = sweep_c(SEMI, [1.0, -1.0])
    assert rows[0]["error"] is None
    assert rows[1]["error"] and not rows[1]["converged"]


def test_deflated_search(ground):
    one, flags = deflated_search(SEMI, 1.0, 1)
    assert len(one) == 1 and not flags
    assert one[0].lam == pytest.approx(ground.lam, rel=1e-10)
    sols, flags = deflated_search(SEMI, 1.0, 2)
    assert len(sols) == 2
    second = sols[1].u
    inner_signs = np.sign(second[np.abs(second) > 1e-8 * np.abs(second).max()])
    assert np.sum(inner_signs[1:] != inner_signs[:-1]) == 1
    assert abs(sols[0].lam - sols[1].lam) > 1e-6


def test_deflated_search_short_list_flagged():
    g = Grid(1, 5)
    sols, flags = deflated_search(Semilinear(g, PurePower(4.0)), 1.0, 5, max_starts=2)
    assert len(sols) <= 2
    assert "fewer-solutions-than-requested" in flags


def test_residual_positive_at_random_field(rng):
    assert residual_norm(SEMI, smooth_field(G, rng), 3.0) > 0


def test_options_validation():
    with pytest.raises(ConfigurationError):
        SolverOptions(residual_tol=0)
    with pytest.raises(ConfigurationError):
        SolverOptions(shrink=1.0)
    with pytest.raises(ConfigurationError):
        ground_state(SEMI, None)
