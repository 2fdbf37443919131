"""Closed-form propagation, loss integrals, and validity checks."""

import math

import numpy as np
import pytest

from lambda_beam import (
    LossCorrection,
    ModelError,
    ProfileConfig,
    StokesProfile,
    SystemParams,
    alpha_integrals,
    build_profiles,
    combined_field,
    detuning_correction,
    doppler_validity,
    entrance_combination,
    mixing_angles,
    output_intensity,
    output_matter_wave,
    propagate_polariton,
    propagation_delay,
)

# Frozen independent quadrature values for the as-written loss integrands
# (scipy.integrate.quad on the analytic ramp, relerr < 1e-12), computed for
# n=3.6e8, gamma=100, delta=360, theta_tol=0.01, default ramp geometry.
ALPHA1_ORACLE = 7.187731184820158e-4
ALPHA2_ORACLE = 2.743566863502305e-2


def _pulse(t0=10.0, fwhm=4.0):
    s = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    return lambda t: np.exp(-((np.asarray(t) - t0) ** 2) / (2 * s * s))


def test_combined_field_is_rotated_sum():
    a, b = 0.3 + 0.1j, 0.2 - 0.4j
    got = combined_field(a, b, math.pi / 4)
    assert got == pytest.approx((a + b) / math.sqrt(2.0), rel=1e-14)


def test_constant_profile_polariton_is_pure_delay():
    p = SystemParams()
    z = np.linspace(0.0, 1.0, 257)
    prof = StokesProfile(z=z, om01=np.full_like(z, 40.0),
                         om02=np.full_like(z, 40.0))
    src = _pulse()
    sol = propagate_polariton(src, prof, p)
    tau = propagation_delay(0.0, 0.8, prof, p)
    t = np.linspace(0.0, 30.0, 401)
    assert np.allclose(sol.eps12(0.8, t), src(t - tau), rtol=0, atol=1e-10)
    # matter envelope follows -sqrt(c/v0) tan(theta) * combination
    th = float(mixing_angles(prof, p).theta[0])
    want = -math.sqrt(p.c / p.v0) * math.tan(th) * src(t - tau)
    assert np.allclose(sol.phi3(0.8, t), want, rtol=1e-10, atol=1e-12)
    assert sol.consistency_residual() < 1e-9


def test_transfer_profile_amplitude_follows_cosine_ratio():
    p = SystemParams()
    prof = build_profiles(ProfileConfig(npoints=2049, width=0.3), p)
    ang = mixing_angles(prof, p)
    sol = propagate_polariton(_pulse(), prof, p)
    t = np.linspace(0.0, 40.0, 301)
    for zq in (0.3, 0.6, 0.95):
        tau = propagation_delay(0.0, zq, prof, p)
        scale = math.cos(float(ang.theta_at(zq))) / math.cos(float(ang.theta[0]))
        assert np.allclose(sol.eps12(zq, t), scale * _pulse()(t - tau),
                           rtol=1e-9, atol=1e-12)


def test_reseeded_solution_matches_full_solution():
    p = SystemParams()
    prof = build_profiles(ProfileConfig(npoints=2049, width=0.3), p)
    sol = propagate_polariton(_pulse(), prof, p)
    dz = 0.4
    re = propagate_polariton(lambda t: sol.eps12(dz, t), prof, p, delta_z=dz)
    t = np.linspace(0.0, 40.0, 97)
    for zq in (0.55, 0.8, 1.0):
        assert np.allclose(re.eps12(zq, t), sol.eps12(zq, t),
                           rtol=1e-9, atol=1e-12)


def test_entrance_combination_matched_input_collapses_to_single_probe():
    p = SystemParams()
    prof = build_profiles(ProfileConfig(npoints=1025), p)
    vt0 = mixing_angles(prof, p).vartheta0
    e1 = _pulse()
    e2 = lambda t: math.tan(vt0) * np.asarray(e1(t))
    seed = entrance_combination(e1, e2, prof, p)
    t = np.linspace(0.0, 25.0, 101)
    assert np.allclose(seed(t), np.asarray(e1(t)) / math.cos(vt0),
                       rtol=1e-12, atol=1e-14)


def test_output_matter_wave_matches_propagated_solution():
    p = SystemParams()
    prof = build_profiles(ProfileConfig(npoints=4097, width=0.3,
                                        theta_tol=1e-3), p)
    ang = mixing_angles(prof, p)
    e1, e2 = _pulse(), _pulse(t0=10.0, fwhm=6.0)
    sol = propagate_polariton(entrance_combination(e1, e2, prof, p), prof, p)
    ideal = output_matter_wave(e1, e2, ang.vartheta0, p, sol.tau_L)
    t = np.linspace(0.0, 40.0, 301)
    # ideal limit assumes exact endpoint angles; tolerance set by theta_tol
    assert np.allclose(sol.phi3_out(t), ideal(t), rtol=0,
                       atol=5e-3 * np.max(np.abs(ideal(t))))


def test_output_intensity_matched_composition_saturates_flux():
    p = SystemParams()
    vt = 0.9
    a = 0.37
    b = math.tan(vt) * a
    i3 = output_intensity(a, b, 0.0, vt, p)
    assert p.v0 * i3 == pytest.approx(p.c * (a * a + b * b), rel=1e-12)
    with pytest.raises(ModelError):
        output_intensity(-1.0, 1.0, 0.0, vt, p)


def test_detuning_correction_scales_linearly_for_small_delta():
    base = SystemParams(gamma2=5.0, gamma4=5.0)
    prof = build_profiles(ProfileConfig(npoints=513), base)
    z, e12 = 0.5, 1.0
    om1, om2 = prof.omega01(z), prof.omega02(z)
    W = om1 ** 2 + om2 ** 2
    deltas = np.array([1e-4, 1e-5, 1e-6]) * W
    ratios = []
    for d in deltas:
        p = SystemParams(gamma2=5.0, gamma4=5.0, delta=float(d))
        corr = detuning_correction(e12, z, prof, p)
        lin = d * base.collective_coupling / prof.omega(base, z) * e12
        ratios.append(abs(corr / lin - 1.0))
    ratios = np.array(ratios)
    # departure from the linear law shrinks proportionally with delta
    assert ratios[0] < 1e-3
    assert np.all(ratios[1:] < ratios[:-1] * 0.2)


def test_detuning_correction_rejects_pole_and_unequal_decay():
    p = SystemParams(gamma2=1.0, gamma4=2.0, delta=0.5)
    prof = build_profiles(ProfileConfig(npoints=257), SystemParams())
    with pytest.raises(ModelError):
        detuning_correction(1.0, 0.5, prof, p)
    om1 = prof.omega01(0.5)
    om2 = prof.omega02(0.5)
    W = float(om1 ** 2 + om2 ** 2)
    pole = SystemParams(delta=1.0, Delta=W)  # W - delta*Delta = 0, gamma = 0
    with pytest.raises(ModelError):
        detuning_correction(1.0, 0.5, prof, pole)


def test_alpha_integrals_match_independent_quadrature():
    p = SystemParams(n=3.6e8, gamma2=100.0, gamma4=100.0, delta=360.0)
    prof = build_profiles(ProfileConfig(npoints=32769, theta_tol=0.01), p)
    loss = alpha_integrals(prof, p)
    assert loss.alpha1 == pytest.approx(ALPHA1_ORACLE, rel=1e-8)
    assert loss.alpha2 == pytest.approx(ALPHA2_ORACLE, rel=1e-8)
    assert loss.sigma == pytest.approx(1e-3, rel=1e-12)
    assert loss.eta == pytest.approx(3.6e6, rel=1e-12)
    assert loss.bound_satisfied


def test_alpha_integrals_even_in_detuning_sign():
    pp = SystemParams(n=3.6e8, gamma2=100.0, gamma4=100.0, delta=360.0)
    pm = SystemParams(n=3.6e8, gamma2=100.0, gamma4=100.0, delta=-360.0)
    prof = build_profiles(ProfileConfig(npoints=2049, theta_tol=0.01), pp)
    lp, lm = alpha_integrals(prof, pp), alpha_integrals(prof, pm)
    assert lp.alpha1 == pytest.approx(lm.alpha1, rel=1e-12)
    assert lm.sigma == -lp.sigma
    assert lm.bound == lp.bound


def test_alpha_integrals_reject_unsupported_regimes():
    prof = build_profiles(ProfileConfig(npoints=257), SystemParams())
    with pytest.raises(ModelError):
        alpha_integrals(prof, SystemParams(Delta=1.0, gamma2=1.0, gamma4=1.0))
    with pytest.raises(ModelError):
        alpha_integrals(prof, SystemParams(gamma2=1.0, gamma4=2.0))


def test_lossless_limit_has_no_attenuation():
    p = SystemParams(delta=5.0)  # gamma = 0
    prof = build_profiles(ProfileConfig(npoints=257), p)
    loss = alpha_integrals(prof, p)
    assert loss.alpha1 == 0.0
    assert loss.eta == math.inf
    assert loss.bound_satisfied
    assert loss.attenuation == 1.0


def test_loss_correction_attenuates_intensities():
    loss = LossCorrection(alpha1=0.04, alpha2=0.0, sigma=1e-3, eta=100.0)
    assert loss.attenuation == pytest.approx(math.exp(-0.08), rel=1e-14)
    assert loss.apply(2.0) == pytest.approx(2.0 * math.exp(-0.08), rel=1e-14)
    assert loss.discrepancy_report() is None
    bad = LossCorrection(alpha1=10.0, alpha2=0.0, sigma=1e-3, eta=100.0)
    assert bad.discrepancy_report() is not None


def test_doppler_validity_flags_wavevector_mismatch():
    clean = doppler_validity(SystemParams(), dv=0.01)
    assert clean.passed and clean.ratio == 0.0
    p = SystemParams(kp1=300.0, ks1=100.0)
    tight = doppler_validity(p, dv=0.05)
    assert tight.ratio == pytest.approx(
        0.05 / p.v0 * 200.0 * p.L, rel=1e-12)
    assert not tight.passed
    loose = doppler_validity(p, dv=1e-6)
    assert loose.passed
