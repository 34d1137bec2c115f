import math

import numpy as np
import pytest

from beamlqr import (
    BeamParams,
    InvalidProfile,
    MissingModes,
    ModalGain,
    ModalWeight,
    SineKernel,
    WeightProfile,
    assemble_feedback_kernel,
    assemble_kernel,
    mode_sign,
    synthesize_modal_weights,
    synthesize_modes,
    tail_report,
)

UNDAMPED = BeamParams(0.0, 1.0, 1.0)


class TestWeightSynthesis:
    def test_identity_base_decay(self):
        weights = synthesize_modal_weights(WeightProfile(q=1.0, r=9.0, N=4))
        assert [n for n, _ in weights] == [1, 2, 3, 4]
        for n, w in weights:
            assert w.q11 == pytest.approx(n**-9.0)
            assert w.q22 == pytest.approx(n**-9.0)
            assert w.q12 == 0.0

    def test_mask_selects_single_mode(self):
        profile = WeightProfile(q=1.0, r=2.0, N=4, mask=frozenset({2}))
        weights = synthesize_modal_weights(profile)
        assert [n for n, _ in weights] == [2]
        rows = synthesize_modes(profile, UNDAMPED)
        for row in rows:
            if row.n == 2:
                assert row.riccati.norm() > 0.0
                assert row.gain.k2 != 0.0
            else:
                assert row.riccati.norm() == 0.0
                assert row.gain.as_array().tolist() == [0.0, 0.0]

    def test_zero_amplitude(self):
        for _, w in synthesize_modal_weights(WeightProfile(q=0.0, r=3.0, N=5)):
            assert w.norm() == 0.0

    def test_decay_bound_respected(self):
        profile = WeightProfile(q=2.5, r=1.5, N=16, base=ModalWeight(1.0, 0.25, 0.5))
        for n, w in synthesize_modal_weights(profile):
            assert w.norm() <= 2.5 / n**1.5 + 1e-15

    def test_invalid_profiles(self):
        with pytest.raises(InvalidProfile):
            WeightProfile(base=ModalWeight(1.0, 2.0, 1.0))  # indefinite
        with pytest.raises(InvalidProfile):
            WeightProfile(base=ModalWeight(3.0, 0.0, 1.0))  # breaks the decay bound
        with pytest.raises(InvalidProfile):
            WeightProfile(q=-1.0)
        with pytest.raises(InvalidProfile):
            WeightProfile(r=0.0)
        with pytest.raises(InvalidProfile):
            WeightProfile(N=0)
        with pytest.raises(InvalidProfile):
            WeightProfile(mask=frozenset({0, 2}))


class TestKernelAssembly:
    def test_single_mode_center_value(self):
        val = assemble_kernel([(1, np.eye(2))], [0.5])
        assert np.allclose(val[0, 0], np.eye(2), atol=1e-15)

    def test_boundary_values_vanish(self):
        rng = np.random.default_rng(0)
        blocks = [(n, rng.normal(size=(2, 2))) for n in range(1, 33)]
        x = np.linspace(0.0, 1.0, 9)
        val = assemble_kernel(blocks, x)
        assert np.max(np.abs(val[0])) <= 1e-12
        assert np.max(np.abs(val[-1])) <= 1e-12
        assert np.max(np.abs(val[:, 0])) <= 1e-12
        assert np.max(np.abs(val[:, -1])) <= 1e-12

    def test_second_derivative_vanishes_at_boundary(self):
        # the bending-moment boundary condition: the x1- and x2- second
        # derivatives of the sampled series are sine series again, so they
        # vanish at the edges of the square
        rows = synthesize_modes(WeightProfile(q=1.0, r=3.0, N=8), UNDAMPED)
        x = np.linspace(0.0, 1.0, 9)
        d2_blocks = [(r.n, -((r.n * math.pi) ** 2) * r.riccati.as_matrix()) for r in rows]
        d2 = assemble_kernel(d2_blocks, x)
        scale = 1.0 + np.max(np.abs(d2))
        for edge in (d2[0], d2[-1], d2[:, 0], d2[:, -1]):
            assert np.max(np.abs(edge)) <= 1e-12 * scale

    def test_symmetry_in_arguments(self):
        rows = synthesize_modes(WeightProfile(q=1.0, r=3.0, N=6), UNDAMPED)
        x = np.linspace(0.0, 1.0, 17)
        val = assemble_kernel([(r.n, r.riccati) for r in rows], x)
        assert np.allclose(val, np.transpose(val, (1, 0, 3, 2)), atol=1e-14)

    def test_linearity(self):
        rng = np.random.default_rng(1)
        x = np.linspace(0.0, 1.0, 21)
        b1 = [(n, rng.normal(size=(2, 2))) for n in range(1, 9)]
        b2 = [(n, rng.normal(size=(2, 2))) for n in range(1, 9)]
        both = [(n, m1 + m2) for (n, m1), (_, m2) in zip(b1, b2)]
        lhs = assemble_kernel(both, x)
        rhs = assemble_kernel(b1, x) + assemble_kernel(b2, x)
        assert np.max(np.abs(lhs - rhs)) <= 1e-13 * (1.0 + np.max(np.abs(lhs)))

    def test_feedback_kernel_zero_gains(self):
        K = assemble_feedback_kernel([(n, ModalGain()) for n in range(1, 5)], np.linspace(0, 1, 11))
        assert np.all(K == 0.0)

    def test_feedback_kernel_single_mode_midpoint(self):
        K = assemble_feedback_kernel([(1, ModalGain(2.0, -3.0))], [0.5])
        assert K[0] == pytest.approx([2.0, -3.0])

    def test_derivative_convention_signs(self):
        # the boundary derivative of sin(n pi x) at x = 1 carries cos(n pi) =
        # (-1)^n: odd modes flip, even modes do not
        x = np.linspace(0.0, 1.0, 33)
        even = [(2, ModalGain(1.0, 0.5))]
        assert np.allclose(
            assemble_feedback_kernel(even, x, "derivative"),
            assemble_feedback_kernel(even, x, "paper"),
        )
        odd = [(3, ModalGain(1.0, 0.5))]
        assert np.allclose(
            assemble_feedback_kernel(odd, x, "derivative"),
            -assemble_feedback_kernel(odd, x, "paper"),
        )
        assert mode_sign(2, "derivative") == 1.0
        assert mode_sign(3, "derivative") == -1.0
        assert mode_sign(5, "paper") == 1.0
        with pytest.raises(ValueError):
            mode_sign(1, "bogus")

    def test_sine_kernel_wrapper(self):
        rows = synthesize_modes(WeightProfile(q=1.0, r=3.0, N=4), UNDAMPED)
        k = SineKernel("value_kernel", [(r.n, r.riccati) for r in rows])
        assert k.order == 4
        x = np.linspace(0.0, 1.0, 5)
        assert k.sample(x).shape == (5, 5, 2, 2)
        g = SineKernel("gain_kernel", [(r.n, r.gain) for r in rows])
        assert g.sample(x).shape == (5, 2)
        with pytest.raises(ValueError):
            SineKernel("nonsense", [])


class TestTailReport:
    def test_missing_modes_rejected(self):
        profile = WeightProfile(q=1.0, r=9.0, N=4)
        rows = synthesize_modes(profile, UNDAMPED)
        with pytest.raises(MissingModes):
            tail_report([(r.n, r.riccati) for r in rows if r.n != 2], profile, UNDAMPED)

    def test_p12_bound_r9(self):
        profile = WeightProfile(q=1.0, r=9.0, N=64)
        rows = synthesize_modes(profile, UNDAMPED)
        rep = tail_report(rows, profile, UNDAMPED)
        assert rep.all_p12_bounds_hold(2)
        sel = rep.modes >= 2
        assert np.all(rep.p12[sel] <= rep.p12_bound[sel])

    def test_p22_decay_exponent_undamped(self):
        profile = WeightProfile(q=1.0, r=9.0, N=64)
        rows = synthesize_modes(profile, UNDAMPED)
        rep = tail_report(rows, profile, UNDAMPED)
        assert abs(rep.p22_decay_exponent - 5.5) <= 0.3
        assert np.isfinite(rep.p22_fit_coeff)
        nf = rep.modes.astype(float)
        sel = rep.modes >= 2
        assert np.all(rep.p22[sel] <= rep.p22_fit_coeff / nf[sel] ** 5.5 * (1 + 1e-12))

    def test_verdicts_follow_thresholds(self):
        low = WeightProfile(q=1.0, r=1.5, N=16)
        rep = tail_report(synthesize_modes(low, UNDAMPED), low, UNDAMPED)
        assert rep.verdicts["gain_converges"] is True
        assert rep.verdicts["p11_converges"] is False
        high = WeightProfile(q=1.0, r=9.0, N=16)
        rep = tail_report(synthesize_modes(high, UNDAMPED), high, UNDAMPED)
        assert rep.verdicts["p11_converges"] is True
        damped = BeamParams(1.0, 1.0, 1.0)
        mid = WeightProfile(q=1.0, r=6.0, N=16)
        rep = tail_report(synthesize_modes(mid, damped), mid, damped)
        assert rep.thresholds["p11"] == 5.0
        assert rep.verdicts["p11_converges"] is True

    def test_damping_monotone_for_low_decay_undamped(self):
        profile = WeightProfile(q=1.0, r=1.5, N=64)
        rep = tail_report(synthesize_modes(profile, UNDAMPED), profile, UNDAMPED)
        assert rep.damping_nondecreasing
        assert abs(rep.damping_growth_exponent - 0.25) <= 0.05

    def test_gain_increment_decay_damped(self):
        # with damping the gain coefficients decay like n^(1-r); the fitted
        # exponent of the sup-norm increments must stay above r - 1 - 0.2
        params = BeamParams(0.5, 1.0, 1.0)
        profile = WeightProfile(q=1.0, r=9.0, N=64)
        rep = tail_report(synthesize_modes(profile, params), profile, params)
        assert rep.gain_decay_exponent >= 9.0 - 1.0 - 0.2

    def test_gain_increment_decay_undamped_low_r(self):
        profile = WeightProfile(q=1.0, r=1.5, N=64)
        rep = tail_report(synthesize_modes(profile, UNDAMPED), profile, UNDAMPED)
        assert rep.gain_decay_exponent >= 1.5 - 1.0 - 0.2

    def test_all_zero_solutions_trivially_pass(self):
        profile = WeightProfile(q=0.0, r=9.0, N=8)
        rows = synthesize_modes(profile, UNDAMPED)
        rep = tail_report(rows, profile, UNDAMPED)
        assert rep.all_p12_bounds_hold(2)
        assert np.all(rep.p12 == 0.0)
