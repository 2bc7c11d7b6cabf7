import numpy as np
import pytest

from services.waves.core.exceptions import FieldError, NonConvergence
from services.waves.numerics import layer_solve
from services.waves.numerics.birkhoff_rott import adjoint_double_layer, double_layer
from services.waves.numerics.fields import derive_fields
from services.waves.numerics.layer_solve import (
    LayerSide,
    SecondKindProblem,
    apply_second_kind,
    dense_operator,
    recover_gamma,
    solve_second_kind,
)
from services.waves.numerics.spectral import SpectralField

from oracles import neumann_solve


def rhs_for(state):
    return SpectralField.of(state.grid, lambda a: np.cos(a) + 0.3 * np.sin(3 * a))


@pytest.mark.parametrize("side", [LayerSide.ADJOINT, LayerSide.DIRECT])
@pytest.mark.parametrize("sign", [1, -1])
def test_solution_matches_neumann_series(wavy, wavy_ws, side, sign):
    b = rhs_for(wavy)
    x, diag = solve_second_kind(SecondKindProblem(sign=sign, side=side, rhs=b), wavy_ws)
    layer = adjoint_double_layer if side == LayerSide.ADJOINT else double_layer
    reference = neumann_solve(lambda f: layer(f, wavy_ws), b, sign)
    assert (x - reference).max_abs() <= 1e-10
    assert diag.residual <= 1e-12


def test_round_trip_residual(wavy, wavy_ws):
    p = SecondKindProblem(sign=1, side=LayerSide.ADJOINT, rhs=rhs_for(wavy))
    x, _ = solve_second_kind(p, wavy_ws)
    back = apply_second_kind(p, x, wavy_ws) - p.rhs
    assert np.linalg.norm(back.samples) <= 1e-11 * np.linalg.norm(p.rhs.samples)


def test_dense_operator_matches_matrix_free(wavy, wavy_ws):
    p = SecondKindProblem(sign=-1, side=LayerSide.DIRECT, rhs=rhs_for(wavy))
    x = SpectralField.of(wavy.grid, lambda a: np.exp(np.cos(2 * a)))
    dense = dense_operator(p, wavy_ws) @ x.samples
    assert np.max(np.abs(dense - apply_second_kind(p, x, wavy_ws).samples)) <= 1e-10


def test_zero_rhs_short_circuits(wavy, wavy_ws):
    zero = SpectralField.constant(wavy.grid, 0.0)
    x, diag = solve_second_kind(SecondKindProblem(sign=1, side=LayerSide.ADJOINT, rhs=zero), wavy_ws)
    assert diag.iterations == 0
    assert diag.residual == 0.0
    assert x.max_abs() == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"sign": 2},
        {"tolerance": 1e-3},
        {"tolerance": 0.0},
        {"max_iterations": 5},
    ],
)
def test_problem_validation(grid64, kwargs):
    values = {"sign": 1, "side": LayerSide.ADJOINT, "rhs": SpectralField.constant(grid64, 1.0)}
    values.update(kwargs)
    with pytest.raises(FieldError):
        SecondKindProblem(**values)


def test_problem_rejects_complex_rhs(grid64):
    with pytest.raises(FieldError):
        SecondKindProblem(sign=1, side=LayerSide.ADJOINT, rhs=SpectralField.of(grid64, lambda a: np.exp(1j * a)))


def test_stalled_solver_raises(monkeypatch, wavy, wavy_ws):
    def stalled(operator, b, **kwargs):
        return np.zeros_like(b), 1

    monkeypatch.setattr(layer_solve, "gmres", stalled)
    with pytest.raises(NonConvergence) as info:
        solve_second_kind(SecondKindProblem(sign=1, side=LayerSide.ADJOINT, rhs=rhs_for(wavy)), wavy_ws)
    assert info.value.residual == pytest.approx(1.0)


def test_solver_sees_writable_vectors(monkeypatch, wavy, wavy_ws):
    real_gmres = layer_solve.gmres
    seen = []

    def checking(operator, b, **kwargs):
        seen.append(b.flags.writeable)
        seen.append(operator.matvec(np.ones_like(b)).flags.writeable)
        return real_gmres(operator, b, **kwargs)

    monkeypatch.setattr(layer_solve, "gmres", checking)
    b = SpectralField.of(wavy.grid, np.cos)
    x, diag = solve_second_kind(SecondKindProblem(sign=1, side=LayerSide.ADJOINT, rhs=b), wavy_ws)
    assert seen == [True, True]
    assert diag.residual <= 1e-12
    assert (x + adjoint_double_layer(x, wavy_ws) - b).max_abs() <= 1e-11


def test_condition_estimate_on_request(wavy, wavy_ws):
    p = SecondKindProblem(sign=1, side=LayerSide.ADJOINT, rhs=rhs_for(wavy))
    _, plain = solve_second_kind(p, wavy_ws)
    _, with_condition = solve_second_kind(p, wavy_ws, estimate_condition=True)
    assert plain.condition_estimate is None
    assert 1.0 <= with_condition.condition_estimate < 10.0


def test_recover_gamma_round_trip(wavy, wavy_ws):
    derived = derive_fields(wavy, wavy_ws, with_errors=False)
    gamma = recover_gamma(wavy, wavy_ws, derived.delta, derived.T)
    assert (gamma - wavy.gamma).max_abs() <= 1e-10
