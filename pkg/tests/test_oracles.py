"""Family oracles: verdict soundness, closed forms, and generators."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from robustkit.oracles import (
    RobustLpInstance,
    RobustQpInstance,
    RobustSdpInstance,
    default_budget,
    generate_infeasible_lp,
    generate_instance,
    generate_lp,
    generate_qp,
    generate_sdp,
    lp_feasibility_oracle,
    lp_reward_vector,
    psd_frobenius_projection,
    qcqp_feasibility_oracle,
    qp_noise_lift,
    quad_form_coefficients,
    recompute_certificate,
    sdp_feasibility_oracle,
    sdp_noise_gradient,
)
from robustkit.robust_core import Feasible, Infeasible, OracleBudgetError


def _lp(rows, offsets, mixing):
    return RobustLpInstance(np.asarray(rows, float), np.asarray(offsets, float), np.asarray(mixing, float))


def _zero_noise(m, k):
    return np.zeros((m, k))


# ---------------------------------------------------------------------------
# Linear family


def test_lp_oracle_center_already_feasible():
    instance = _lp([[1.0, 0.0]], [1.0], np.zeros((2, 1)))
    verdict = lp_feasibility_oracle(instance, _zero_noise(1, 1), epsilon=0.1)
    assert isinstance(verdict, Feasible)
    assert_allclose(verdict.point, [0.0, 0.0], atol=0)
    assert verdict.inner_iterations == 0


def test_lp_oracle_contradiction_certificate():
    # x1 <= -0.5 and -x1 <= -0.5 cannot hold together; uniform weights
    # cancel the normals and leave bound 0.5.
    instance = _lp([[1.0, 0.0], [-1.0, 0.0]], [-0.5, -0.5], np.zeros((2, 1)))
    verdict = lp_feasibility_oracle(instance, _zero_noise(2, 1), epsilon=0.1)
    assert isinstance(verdict, Infeasible)
    assert_allclose(verdict.certificate.weights, [0.5, 0.5], atol=1e-12)
    assert_allclose(verdict.certificate.bound, 0.5, atol=1e-12)
    assert_allclose(recompute_certificate(instance, verdict.certificate), 0.5, atol=1e-12)


def test_lp_oracle_steep_constraint():
    instance = _lp([[2.0, 0.0]], [1.0], np.zeros((2, 1)))
    verdict = lp_feasibility_oracle(instance, _zero_noise(1, 1), epsilon=0.1)
    assert isinstance(verdict, Feasible)
    assert instance.constraint_value(0, verdict.point, np.zeros(1)) <= 0.1
    assert np.linalg.norm(verdict.point) <= 1.0 + 1e-12


def test_lp_oracle_descends_to_feasibility():
    # The center violates x1 + 0.5 <= 0, so the oracle must actually move.
    instance = _lp([[1.0, 0.0]], [-0.5], np.zeros((2, 1)))
    verdict = lp_feasibility_oracle(instance, _zero_noise(1, 1), epsilon=0.05)
    assert isinstance(verdict, Feasible)
    assert verdict.inner_iterations > 0
    assert instance.constraint_value(0, verdict.point, np.zeros(1)) <= 0.05


def test_lp_oracle_respects_noise_assignment():
    # Noise u = (1,) shifts the row by the mixing column.
    instance = _lp([[1.0, 0.0]], [1.0], [[1.0], [0.0]])
    noise = np.array([[1.0]])
    x = np.array([0.4, 0.0])
    assert_allclose(instance.constraint_value(0, x, noise[0]), 2.0 * 0.4 - 1.0, atol=1e-15)
    verdict = lp_feasibility_oracle(instance, noise, epsilon=0.1)
    assert isinstance(verdict, Feasible)
    shifted = instance.rows[0] + instance.mixing @ noise[0]
    assert float(shifted @ verdict.point) - 1.0 <= 0.1


def test_lp_oracle_budget_exhaustion():
    # A thin off-center slab: feasible, but the subgradient path cannot
    # land in it within 10 iterations and no dual certificate exists.
    rows = np.zeros((2, 4))
    rows[0, 0] = 1.0
    rows[1, 0] = -1.0
    instance = _lp(rows, [0.505, -0.495], 0.01 * np.ones((4, 2)))
    with pytest.raises(OracleBudgetError) as excinfo:
        lp_feasibility_oracle(instance, _zero_noise(2, 2), epsilon=0.001, budget=10)
    diag = excinfo.value.diagnostics
    assert diag["iterations"] == 10
    assert diag["best_value"] > 0.001
    assert diag["best_dual"] <= 0.0


def test_lp_oracle_input_validation():
    instance = _lp([[1.0, 0.0]], [1.0], np.zeros((2, 1)))
    with pytest.raises(ValueError):
        lp_feasibility_oracle(instance, np.zeros((2, 1)), epsilon=0.1)
    with pytest.raises(ValueError):
        lp_feasibility_oracle(instance, np.array([[5.0]]), epsilon=0.1)
    with pytest.raises(ValueError):
        lp_feasibility_oracle(instance, _zero_noise(1, 1), epsilon=0.1, budget=0)
    with pytest.raises(ValueError):
        lp_feasibility_oracle(instance, _zero_noise(1, 1), epsilon=0.0)


def test_lp_reward_vector_examples():
    eye = _lp([[1.0, 0.0]], [1.0], np.eye(2))
    assert_allclose(lp_reward_vector(eye, np.array([0.3, 0.4])), [0.3, 0.4], atol=1e-15)
    zero = _lp([[1.0, 0.0]], [1.0], np.zeros((2, 2)))
    assert_allclose(lp_reward_vector(zero, np.array([0.3, 0.4])), [0.0, 0.0], atol=0)
    doubled = _lp([[1.0, 0.0]], [1.0], 2.0 * np.eye(2))
    assert_allclose(lp_reward_vector(doubled, np.array([1.0, 0.0])), [2.0, 0.0], atol=1e-15)


# ---------------------------------------------------------------------------
# Quadratic family


def _single_qp(c, n=2):
    return RobustQpInstance(
        base=np.eye(n)[None, :, :],
        mixing=np.zeros((1, n, n)),
        linear=np.zeros((1, n)),
        offsets=np.array([float(c)]),
    )


def test_qp_oracle_slack_ball_constraint():
    verdict = qcqp_feasibility_oracle(_single_qp(1.0), _zero_noise(1, 1), epsilon=0.1)
    assert isinstance(verdict, Feasible)
    assert verdict.inner_iterations == 0


def test_qp_oracle_unsatisfiable_constraint():
    # ||x||^2 <= -0.1 is empty; at lam = 1 the dual bound is exactly 0.1.
    verdict = qcqp_feasibility_oracle(_single_qp(-0.1), _zero_noise(1, 1), epsilon=0.01)
    assert isinstance(verdict, Infeasible)
    assert_allclose(verdict.certificate.weights, [1.0], atol=0)
    assert_allclose(verdict.certificate.bound, 0.1, atol=1e-9)
    instance = _single_qp(-0.1)
    assert recompute_certificate(instance, verdict.certificate) > 0


def test_qp_oracle_small_ball():
    instance = _single_qp(0.25)
    verdict = qcqp_feasibility_oracle(instance, _zero_noise(1, 1), epsilon=0.1)
    assert isinstance(verdict, Feasible)
    assert instance.constraint_value(0, verdict.point, np.zeros(1)) <= 0.1


def test_qp_oracle_descends_from_bad_start():
    instance = _single_qp(0.25)
    verdict = qcqp_feasibility_oracle(
        instance, _zero_noise(1, 1), epsilon=0.1, start=np.array([1.0, 0.0])
    )
    assert isinstance(verdict, Feasible)
    assert verdict.inner_iterations > 0
    assert float(verdict.point @ verdict.point) <= 0.25 + 0.1 + 1e-9


def test_quad_form_pure_noise():
    instance = RobustQpInstance(
        base=np.zeros((1, 2, 2)),
        mixing=np.eye(2)[None, :, :],
        linear=np.zeros((1, 2)),
        offsets=np.zeros(1),
    )
    q, r, s = quad_form_coefficients(instance, 0, np.array([1.0, 0.0]))
    assert_allclose(q, [[1.0]], atol=1e-15)
    assert_allclose(r, [0.0], atol=0)
    assert s == 0.0


def test_quad_form_matched_base_and_noise():
    instance = RobustQpInstance(
        base=np.eye(2)[None, :, :],
        mixing=np.eye(2)[None, :, :],
        linear=np.zeros((1, 2)),
        offsets=np.zeros(1),
    )
    x = np.array([1.0, 0.0])
    q, r, s = quad_form_coefficients(instance, 0, x)
    assert_allclose(q, [[1.0]], atol=1e-15)
    assert_allclose(r, [1.0], atol=1e-15)
    assert s == 1.0
    # f(x, u) expands to (1 + u)^2 for this construction.
    for u in (-0.5, 0.0, 0.3, 1.0):
        direct = instance.constraint_value(0, x, np.array([u]))
        assert_allclose(direct, (1.0 + u) ** 2, atol=1e-12)
        assert_allclose(direct, u * q[0, 0] * u + 2 * r[0] * u + s, atol=1e-12)


def test_quad_form_zero_decision():
    instance = _single_qp(0.7)
    q, r, s = quad_form_coefficients(instance, 0, np.zeros(2))
    assert_allclose(q, [[0.0]], atol=0)
    assert_allclose(r, [0.0], atol=0)
    assert s == -0.7


def test_quad_form_identity_random_instances():
    # Direct constraint evaluation agrees with the extracted quadratic
    # form everywhere on the noise ball.
    rng = np.random.default_rng(41)
    checked = 0
    for trial in range(40):
        instance = generate_qp(3, 4, 2, sigma=0.5, seed=trial)
        sigma = instance.spectral_scale
        rho = instance.base_scale
        for _ in range(25):
            x = rng.normal(size=3)
            x /= max(1.0, np.linalg.norm(x))
            u = rng.normal(size=2)
            u /= max(1.0, np.linalg.norm(u))
            i = int(rng.integers(instance.num_constraints))
            q, r, s = quad_form_coefficients(instance, i, x)
            direct = instance.constraint_value(i, x, u)
            assert abs(direct - (u @ q @ u + 2.0 * r @ u + s)) <= 1e-9
            assert np.linalg.norm(q, "fro") <= sigma**2 + 1e-9
            assert np.linalg.norm(r) <= sigma * rho + 1e-9
            assert float(np.linalg.eigvalsh(q).min()) >= -1e-12
            checked += 1
    assert checked == 1000


def test_qp_noise_lift_roundtrip():
    lift = qp_noise_lift(2)
    u = np.array([1.0, 2.0])
    assert_allclose(lift.lift(u), [1.0, 2.0, 2.0, 4.0, 1.0, 2.0], atol=0)
    assert lift.dimension == 6
    rows = np.array([[1.0, 2.0], [0.5, -0.5]])
    assert_allclose(lift.lift_block(rows), np.stack([lift.lift(r) for r in rows]), atol=0)


def test_qp_noise_lift_pessimize_dominates():
    rng = np.random.default_rng(47)
    lift = qp_noise_lift(3)
    for _ in range(50):
        w = rng.normal(size=12)
        star = lift.pessimize(w, 1e-9)
        assert np.linalg.norm(star) <= 1.0 + 1e-9
        best = float(w @ lift.lift(star))
        probes = rng.normal(size=(200, 3))
        probes /= np.maximum(np.linalg.norm(probes, axis=1, keepdims=True), 1.0)
        for p in probes:
            assert best + 1e-9 >= float(w @ lift.lift(p))


def test_qp_noise_lift_unit_ball_only():
    with pytest.raises(ValueError):
        qp_noise_lift(2, radius=0.5)


# ---------------------------------------------------------------------------
# Semidefinite family


def _single_sdp(a, b, n):
    return RobustSdpInstance(
        base=np.asarray(a, float)[None, :, :],
        mixing=np.zeros((1, n, n)),
        offsets=np.array([float(b)]),
    )


def test_sdp_oracle_trace_bound_feasible():
    verdict = sdp_feasibility_oracle(_single_sdp(np.eye(2), 2.0, 2), _zero_noise(1, 1), epsilon=0.1)
    assert isinstance(verdict, Feasible)
    assert verdict.inner_iterations == 0


def test_sdp_oracle_impossible_trace_demand():
    # tr(X) >= 2 with ||X||_F <= 1 fails Cauchy-Schwarz; the bound is 2 - sqrt(2).
    verdict = sdp_feasibility_oracle(_single_sdp(-np.eye(2), -2.0, 2), _zero_noise(1, 1), epsilon=0.1)
    assert isinstance(verdict, Infeasible)
    assert_allclose(verdict.certificate.weights, [1.0], atol=0)
    assert_allclose(verdict.certificate.bound, 2.0 - math.sqrt(2.0), atol=1e-12)
    instance = _single_sdp(-np.eye(2), -2.0, 2)
    assert_allclose(
        recompute_certificate(instance, verdict.certificate), 2.0 - math.sqrt(2.0), atol=1e-12
    )


def test_sdp_oracle_huge_offset_feasible_at_zero():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 3))
    verdict = sdp_feasibility_oracle(_single_sdp(a + a.T, 1e6, 3), _zero_noise(1, 1), epsilon=0.1)
    assert isinstance(verdict, Feasible)
    assert_allclose(verdict.point, np.zeros((3, 3)), atol=0)


def test_sdp_oracle_descends_to_trace_demand():
    instance = _single_sdp(-np.eye(2), -0.5, 2)
    verdict = sdp_feasibility_oracle(instance, _zero_noise(1, 1), epsilon=0.05)
    assert isinstance(verdict, Feasible)
    assert verdict.inner_iterations > 0
    x = verdict.point
    assert float(np.linalg.eigvalsh(0.5 * (x + x.T)).min()) >= -1e-9
    assert np.linalg.norm(x, "fro") <= 1.0 + 1e-9
    assert instance.constraint_value(0, x, np.zeros(1)) <= 0.05


def test_sdp_instance_requires_symmetry():
    bad = np.array([[[0.0, 1.0], [0.0, 0.0]]])
    with pytest.raises(ValueError):
        RobustSdpInstance(bad, np.zeros((1, 2, 2)), np.zeros(1))


def test_sdp_noise_gradient_examples():
    eye_mix = RobustSdpInstance(
        base=np.zeros((1, 2, 2)), mixing=np.eye(2)[None, :, :], offsets=np.zeros(1)
    )
    x = np.eye(2) / math.sqrt(2.0)
    assert_allclose(sdp_noise_gradient(eye_mix, x), [math.sqrt(2.0)], atol=1e-15)
    assert_allclose(sdp_noise_gradient(eye_mix, np.zeros((2, 2))), [0.0], atol=0)
    two = RobustSdpInstance(
        base=np.zeros((1, 2, 2)),
        mixing=np.stack([np.eye(2), np.zeros((2, 2))]),
        offsets=np.zeros(1),
    )
    grad = sdp_noise_gradient(two, x)
    assert grad.shape == (2,)
    assert grad[1] == 0.0


def test_psd_projection_properties():
    rng = np.random.default_rng(59)
    for _ in range(30):
        raw = rng.normal(scale=2.0, size=(3, 3))
        proj = psd_frobenius_projection(raw)
        assert float(np.linalg.eigvalsh(proj).min()) >= -1e-9
        assert np.linalg.norm(proj, "fro") <= 1.0 + 1e-12
        # No sampled member of the domain is closer to the symmetric part.
        sym = 0.5 * (raw + raw.T)
        best = np.linalg.norm(sym - proj, "fro")
        for _ in range(34):
            f = rng.normal(size=(3, 3))
            cand = f @ f.T
            cand /= max(1.0, np.linalg.norm(cand, "fro"))
            assert best <= np.linalg.norm(sym - cand, "fro") + 1e-9


# ---------------------------------------------------------------------------
# Soundness across random instances


def test_oracle_soundness_linear():
    rng = np.random.default_rng(71)
    for seed in range(10):
        instance = generate_lp(4, 6, 3, sigma=1.0, seed=seed)
        noise = rng.normal(size=(6, 3))
        noise /= np.maximum(np.linalg.norm(noise, axis=1, keepdims=True), 1.0)
        verdict = lp_feasibility_oracle(instance, noise, epsilon=0.05)
        assert isinstance(verdict, Feasible)
        values = [
            instance.constraint_value(i, verdict.point, noise[i])
            for i in range(instance.num_constraints)
        ]
        assert max(values) <= 0.05 + 1e-12


def test_oracle_soundness_infeasible_linear():
    rng = np.random.default_rng(73)
    for seed in range(10):
        instance = generate_infeasible_lp(4, 5, 3, sigma=1.0, seed=seed)
        for noise in (np.zeros((5, 3)), rng.normal(size=(5, 3)) * 0.3):
            verdict = lp_feasibility_oracle(instance, noise, epsilon=0.05)
            assert isinstance(verdict, Infeasible)
            recomputed = recompute_certificate(instance, verdict.certificate)
            assert recomputed > 0
            assert_allclose(recomputed, verdict.certificate.bound, atol=1e-9)


def test_oracle_soundness_quadratic():
    rng = np.random.default_rng(79)
    for seed in range(5):
        instance = generate_qp(3, 4, 2, sigma=0.25, seed=seed)
        noise = rng.normal(size=(4, 2))
        noise /= np.maximum(np.linalg.norm(noise, axis=1, keepdims=True), 1.0)
        verdict = qcqp_feasibility_oracle(instance, noise, epsilon=0.1)
        assert isinstance(verdict, Feasible)
        values = [
            instance.constraint_value(i, verdict.point, noise[i])
            for i in range(instance.num_constraints)
        ]
        assert max(values) <= 0.1 + 1e-12


def test_oracle_soundness_semidefinite():
    rng = np.random.default_rng(83)
    for seed in range(5):
        instance = generate_sdp(4, 4, 3, sigma=0.75, seed=seed)
        noise = rng.normal(size=(4, 3))
        noise /= np.maximum(np.linalg.norm(noise, axis=1, keepdims=True), 1.0)
        verdict = sdp_feasibility_oracle(instance, noise, epsilon=0.1)
        assert isinstance(verdict, Feasible)
        values = [
            instance.constraint_value(i, verdict.point, noise[i])
            for i in range(instance.num_constraints)
        ]
        assert max(values) <= 0.1 + 1e-12


# ---------------------------------------------------------------------------
# Generators


def test_generate_lp_shapes_and_scale():
    instance = generate_lp(5, 7, 3, sigma=1.0, seed=2)
    assert instance.rows.shape == (7, 5)
    assert instance.offsets.shape == (7,)
    assert instance.mixing.shape == (5, 3)
    assert_allclose(instance.spectral_scale, 1.0, atol=1e-12)
    assert_allclose(np.linalg.norm(instance.rows, axis=1), np.ones(7), atol=1e-12)


def test_generate_lp_deterministic():
    a = generate_lp(4, 5, 2, seed=9)
    b = generate_lp(4, 5, 2, seed=9)
    assert_allclose(a.rows, b.rows, atol=0)
    assert_allclose(a.offsets, b.offsets, atol=0)
    assert not np.allclose(a.rows, generate_lp(4, 5, 2, seed=10).rows)


def test_generate_qp_origin_violates_first_constraint():
    # The construction plants a violation of exactly 0.5 at the origin so
    # solvers cannot pass by returning zero.
    for seed in range(5):
        instance = generate_qp(5, 5, 3, sigma=0.25, seed=seed)
        k = instance.noise_dimension
        assert_allclose(instance.constraint_value(0, np.zeros(5), np.zeros(k)), 0.5, atol=1e-9)
        assert_allclose(instance.offsets[0], -0.5, atol=0)


def test_generate_sdp_shapes_and_symmetry():
    instance = generate_sdp(4, 5, 3, sigma=0.75, seed=1)
    assert instance.base.shape == (5, 4, 4)
    assert instance.mixing.shape == (3, 4, 4)
    assert_allclose(instance.base, np.swapaxes(instance.base, -1, -2), atol=0)
    assert_allclose(instance.mixing, np.swapaxes(instance.mixing, -1, -2), atol=0)
    assert_allclose(instance.spectral_scale, 0.75, atol=1e-12)


def test_generated_instances_feasible_at_zero_noise():
    for seed in range(5):
        lp = generate_lp(4, 6, 3, seed=seed)
        assert isinstance(
            lp_feasibility_oracle(lp, np.zeros((6, 3)), epsilon=0.05), Feasible
        )
        qp = generate_qp(3, 4, 2, seed=seed)
        assert isinstance(
            qcqp_feasibility_oracle(qp, np.zeros((4, 2)), epsilon=0.1), Feasible
        )
        sdp = generate_sdp(4, 4, 3, seed=seed)
        assert isinstance(
            sdp_feasibility_oracle(sdp, np.zeros((4, 3)), epsilon=0.1), Feasible
        )


def test_generate_instance_dispatch():
    assert isinstance(generate_instance("linear", 3, 4, 2, 1.0, 0), RobustLpInstance)
    assert isinstance(generate_instance("quadratic", 3, 4, 2, 0.25, 0), RobustQpInstance)
    assert isinstance(generate_instance("semidefinite", 3, 4, 2, 0.75, 0), RobustSdpInstance)
    assert isinstance(
        generate_instance("linear", 3, 4, 2, 1.0, 0, feasible=False), RobustLpInstance
    )
    with pytest.raises(ValueError):
        generate_instance("quadratic", 3, 4, 2, 0.25, 0, feasible=False)
    with pytest.raises(ValueError):
        generate_instance("cubic", 3, 4, 2, 1.0, 0)


def test_generator_rejects_bad_margin():
    with pytest.raises(ValueError):
        generate_lp(3, 4, 2, margin=0.0)
    with pytest.raises(ValueError):
        generate_qp(3, 4, 2, margin=-0.1)
    with pytest.raises(ValueError):
        generate_sdp(3, 4, 2, margin=0.0)


def test_default_budget():
    assert default_budget(0.1) == 5000
    assert default_budget(1.0) == 50
    assert default_budget(0.15) == 50 * math.ceil(1.0 / 0.15**2)
    with pytest.raises(ValueError):
        default_budget(0.0)
    with pytest.raises(ValueError):
        default_budget(float("nan"))
