import numpy as np
import pytest
from scipy import integrate

from flatcrane.beam_model import (
    AnsatzShape,
    PhysicalParams,
    christoffel_matrix,
    configuration_flat_output,
    coriolis_discrepancy,
    coriolis_lagrange,
    coriolis_printed,
    dynamics_rhs,
    eval_ansatz,
    hold_input,
    is_positive_definite,
    mass_matrix,
    mass_matrix_partials,
    potential_energy,
    rest_state,
)
from flatcrane.errors import DomainError

from helpers import random_input, random_state


def kinetic_energy_first_principles(params, q, v):
    """Driving unit + distributed mast + lifting unit, built without M(q)."""
    q1, q2, q3 = q
    v1, v2, v3 = v
    phi, dphi, _ = eval_ansatz(params, q3)
    T_w = 0.5 * params.m_w * v1**2
    beam = lambda z: (v1 + eval_ansatz(params, z)[0] * v2) ** 2
    T_b = 0.5 * params.rhoA * integrate.quad(beam, 0.0, params.L, epsrel=1e-12)[0]
    horizontal = v1 + phi * v2 + dphi * q2 * v3
    T_h = 0.5 * params.m_h * (horizontal**2 + v3**2)
    return T_w + T_b + T_h


def hessian_in_v(fun, v, h=1.0):
    # exact for quadratic forms up to rounding
    n = len(v)
    H = np.empty((n, n))
    E = np.eye(n) * h
    for i in range(n):
        for j in range(n):
            H[i, j] = (
                fun(v + E[i] + E[j]) - fun(v + E[i] - E[j]) - fun(v - E[i] + E[j]) + fun(v - E[i] - E[j])
            ) / (4 * h * h)
    return H


def lagrange_terms_fd(params, q, v, h=1e-6):
    """C = d/dt dT/dv - dT/dq + dV/dq at zero acceleration, by finite differences of T."""
    T = lambda qq, vv: kinetic_energy_first_principles(params, qq, vv)
    q, v = np.asarray(q, float), np.asarray(v, float)

    def grad_v(qq):
        g = np.empty(3)
        for i in range(3):
            e = np.eye(3)[i]
            g[i] = (T(qq, v + e) - T(qq, v - e)) / 2.0  # exact, T quadratic in v
        return g

    ddt = np.zeros(3)
    dTdq = np.zeros(3)
    dVdq = np.zeros(3)
    for k in range(3):
        e = np.eye(3)[k] * h
        ddt += (grad_v(q + e) - grad_v(q - e)) / (2 * h) * v[k]
        dTdq[k] = (T(q + e, v) - T(q - e, v)) / (2 * h)
        dVdq[k] = (potential_energy(params, q + e) - potential_energy(params, q - e)) / (2 * h)
    return ddt - dTdq + dVdq


class TestAnsatz:
    def test_clamped_base(self, params):
        phi, dphi, ddphi = eval_ansatz(params, 0.0)
        assert phi == 0.0 and dphi == 0.0
        assert ddphi == pytest.approx(3.0 / params.L**2)

    def test_tip_normalized(self, params):
        assert eval_ansatz(params, params.L)[0] == pytest.approx(1.0, abs=1e-15)

    def test_midpoint(self, params):
        assert eval_ansatz(params, params.L / 2)[0] == pytest.approx(0.3125, abs=1e-15)

    @pytest.mark.parametrize("z", [0.3, 2.0, 5.5, 9.1])
    def test_derivatives_match_finite_differences(self, params, z):
        h = 1e-5
        phi, dphi, ddphi = eval_ansatz(params, z)
        f = lambda s: eval_ansatz(params, s)
        assert (f(z + h)[0] - f(z - h)[0]) / (2 * h) == pytest.approx(dphi, rel=1e-6)
        assert (f(z + h)[1] - f(z - h)[1]) / (2 * h) == pytest.approx(ddphi, rel=1e-6)

    @pytest.mark.parametrize("z", [-1e-9, 10.0 + 1e-9])
    def test_domain(self, params, z):
        with pytest.raises(DomainError):
            eval_ansatz(params, z)

    def test_closed_forms_match_quadrature(self, params):
        L = params.L
        cubic = (0.0, 0.0, 3.0 / (2 * L**2), -1.0 / (2 * L**3))
        numeric = PhysicalParams(ansatz=AnsatzShape(cubic))
        assert numeric.m12 == pytest.approx(params.m12, rel=1e-10)
        assert numeric.m22 == pytest.approx(params.m22, rel=1e-10)
        assert numeric.k_el == pytest.approx(params.k_el, rel=1e-10)
        assert params.m11 == params.m_w + params.rhoA * L + params.m_h

    def test_rejects_unnormalized_shape(self):
        with pytest.raises(DomainError):
            PhysicalParams(ansatz=AnsatzShape((0.0, 0.0, 1.0)))

    def test_custom_quartic_shape(self):
        # 2 s^2 - s^4 ... not normalized; use (6 s^2 - 4 s^3 + s^4)/3, the uniform-load shape
        L = 10.0
        shape = AnsatzShape((0.0, 0.0, 2.0 / L**2, -4.0 / (3 * L**3), 1.0 / (3 * L**4)))
        p = PhysicalParams(ansatz=shape)
        assert eval_ansatz(p, L)[0] == pytest.approx(1.0)
        s = np.linspace(0, 1, 20001)
        phi = (6 * s**2 - 4 * s**3 + s**4) / 3
        assert p.m22 == pytest.approx(p.rhoA * L * integrate.trapezoid(phi**2, s), rel=1e-7)

    @pytest.mark.parametrize("field", ["m_w", "m_h", "rhoA", "EI", "L", "T_s"])
    def test_positive_parameters(self, field):
        with pytest.raises(DomainError, match=field):
            PhysicalParams(**{field: -1.0})


class TestMassMatrix:
    def test_straight_beam_decouples_hoist(self, params):
        M = mass_matrix(params, [1.0, 0.0, 4.0])
        assert M[0, 2] == 0.0 and M[1, 2] == 0.0
        assert M[2, 2] == params.m_h

    def test_symmetric_positive_definite(self, params, rng):
        for _ in range(200):
            q = random_state(rng, params)[:3]
            M = mass_matrix(params, q)
            assert np.array_equal(M, M.T)
            assert is_positive_definite(M)
            assert np.linalg.det(M) > 0

    def test_hessian_of_first_principles_kinetic_energy(self, params, rng):
        for _ in range(5):
            q = random_state(rng, params)[:3]
            H = hessian_in_v(lambda v: kinetic_energy_first_principles(params, q, v), np.zeros(3))
            np.testing.assert_allclose(H, mass_matrix(params, q), rtol=1e-9, atol=1e-9)

    def test_partials_match_finite_differences(self, params, rng):
        h = 1e-6
        for _ in range(20):
            q = random_state(rng, params)[:3]
            dM = mass_matrix_partials(params, q)
            for i in range(3):
                e = np.eye(3)[i] * h
                fd = (mass_matrix(params, q + e) - mass_matrix(params, q - e)) / (2 * h)
                np.testing.assert_allclose(dM[i], fd, atol=1e-6)

    def test_domain(self, params):
        with pytest.raises(DomainError):
            mass_matrix(params, [0.0, 0.0, 10.5])


class TestCoriolis:
    def test_printed_at_rest(self, params):
        q = [0.3, 0.1, 4.0]
        np.testing.assert_allclose(
            coriolis_printed(params, q, np.zeros(3)), [0.0, 0.1 * params.k_el, params.m_h * params.g]
        )

    def test_printed_straight_beam(self, params, rng):
        for _ in range(10):
            v = rng.normal(size=3)
            np.testing.assert_array_equal(
                coriolis_printed(params, [2.0, 0.0, 5.0], v), [0.0, 0.0, params.m_h * params.g]
            )

    def test_lagrange_gravity_only(self, params):
        np.testing.assert_allclose(
            coriolis_lagrange(params, [1.0, 0.0, 6.0], np.zeros(3)), [0.0, 0.0, params.m_h * params.g]
        )

    def test_lagrange_elastic_gradient(self, params):
        np.testing.assert_allclose(
            coriolis_lagrange(params, [1.0, 1.0, 6.0], np.zeros(3)),
            [0.0, params.k_el, params.m_h * params.g],
        )

    def test_lagrange_matches_first_principles(self, params, rng):
        for _ in range(5):
            x = random_state(rng, params)
            expected = lagrange_terms_fd(params, x[:3], x[3:])
            np.testing.assert_allclose(coriolis_lagrange(params, x[:3], x[3:]), expected, rtol=1e-5, atol=1e-5)

    def test_skew_symmetry(self, params, rng):
        for _ in range(100):
            x = random_state(rng, params)
            q, v = x[:3], x[3:]
            dM = mass_matrix_partials(params, q)
            Mdot = np.tensordot(v, dM, axes=1)
            C = christoffel_matrix(params, q, v)
            N = Mdot - 2 * C
            np.testing.assert_allclose(N, -N.T, atol=1e-9)
            assert abs(v @ N @ v) <= 1e-9
            # C v reproduces the velocity terms
            grav = coriolis_lagrange(params, q, np.zeros(3))
            np.testing.assert_allclose(C @ v, coriolis_lagrange(params, q, v) - grav, atol=1e-9)

    def test_discrepancy_localized_to_c1(self, params, rng):
        for _ in range(50):
            x = random_state(rng, params)
            report = coriolis_discrepancy(params, x[:3], x[3:])
            np.testing.assert_allclose(report["structural_residual"], 0.0, atol=1e-9)
            # closed form of the typo: 2 m_h v3 (q2 - v2) phi'
            _, dphi, _ = eval_ansatz(params, x[2])
            assert report["c1_difference"] == pytest.approx(2 * params.m_h * x[5] * (x[1] - x[4]) * dphi)


class TestDynamics:
    def test_equilibrium(self, params):
        x = rest_state(1.0, 5.0)
        np.testing.assert_allclose(dynamics_rhs(params, x, hold_input(params)), 0.0, atol=1e-12)

    def test_free_fall(self, params):
        x = rest_state(1.0, 5.0)
        np.testing.assert_allclose(
            dynamics_rhs(params, x, [0.0, 0.0]), [0, 0, 0, 0, 0, -params.g], atol=1e-12
        )

    @pytest.mark.parametrize("variant", ["printed", "lagrange"])
    def test_kinematic_rows(self, params, rng, variant):
        for _ in range(20):
            x = random_state(rng, params)
            f = dynamics_rhs(params, x, random_input(rng, params), variant)
            assert np.array_equal(f[:3], x[3:])

    def test_unknown_variant(self, params):
        with pytest.raises(ValueError):
            dynamics_rhs(params, rest_state(0, 5), [0, 0], variant="exact")

    def test_energy_balance_short_arc(self, params):
        """Power balance dE/dt = v^T G u over 0.05 s of RK4 with 1e-5 s steps."""
        from flatcrane.beam_model import total_energy

        x = np.array([0.0, 0.05, 4.0, 0.5, -0.3, 0.8])
        u = lambda t: np.array([80 * np.sin(3 * t), params.m_h * params.g + 40 * np.cos(2 * t)])

        def f(t, z):
            return np.concatenate([dynamics_rhs(params, z[:6], u(t)), [z[3] * u(t)[0] + z[5] * u(t)[1]]])

        z, h, E0 = np.concatenate([x, [0.0]]), 1e-5, total_energy(params, x)
        for i in range(5000):
            t = i * h
            k1 = f(t, z)
            k2 = f(t + h / 2, z + h / 2 * k1)
            k3 = f(t + h / 2, z + h / 2 * k2)
            k4 = f(t + h, z + h * k3)
            z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        assert abs(total_energy(params, z[:6]) - E0 - z[6]) / max(1.0, abs(E0)) <= 1e-6


class TestConfigurationFlatOutput:
    def test_zero(self, params):
        np.testing.assert_array_equal(configuration_flat_output(params, [0, 0, 3.0, 1, 1, 1]), [0, 0])

    def test_tip(self, params):
        np.testing.assert_allclose(
            configuration_flat_output(params, [1.0, 0.0, params.L, 0, 0, 0]), [1.0, params.m22 - params.m12]
        )

    def test_base(self, params):
        np.testing.assert_allclose(configuration_flat_output(params, [1.0, 1.0, 0.0, 0, 0, 0]), [1.0, params.m22])
