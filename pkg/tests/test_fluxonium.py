"""
플럭소니움 서비스 테스트
스펙트럼 대각화, η 표, 고준위 디튜닝 보정, 단열 소거 생성자
"""

import math

import numpy as np
import pytest

from core.exceptions import DomainException, ResolutionException, SingularityException
from schemas import FluxoniumParams, LevelSystem, PulseParams, angular_to_mhz
from services.fluxonium import (
    adiabatic_generator,
    adiabaticity_parameter,
    detuning_lab,
    detuning_prime,
    diagonalize,
    drive_frequency,
    level_system_from_spectrum,
    off_block_residual,
    relative_drive_strength,
    sweep_charging_energy,
    sweep_flux,
)
from services.propagation import four_level_hamiltonian

TWO_PI = 2 * math.pi


@pytest.fixture
def four_levels():
    """α_2, α_3 > 0 인 플럭소니움 유사 4준위 시스템 (rad/ns)"""
    return LevelSystem(
        dimension=4,
        energies=(0.0, 0.6, 25.0, 31.0),
        eta={"01": 1.0, "12": 0.8, "23": 0.5, "03": 0.4},
    )


@pytest.fixture
def corrected_pulse():
    return PulseParams(amplitude=0.1, ppp=0.4, detuning_scale=1.3, duration=40.0)


class TestDiagonalize:
    """스펙트럼 대각화 테스트"""

    @pytest.mark.unit
    def test_harmonic_limit(self):
        """E_J = 0, E_C = E_L = 1 GHz → 등간격, ω_01/2π = √8 GHz"""
        p = FluxoniumParams(charging_energy=1.0, inductive_energy=1.0, josephson_energy=0.0)
        spectrum = diagonalize(p, basis_size=32)
        ghz = spectrum.energies / TWO_PI
        assert ghz[0] == 0.0
        assert ghz[1] == pytest.approx(math.sqrt(8.0), rel=1e-12)
        assert np.diff(ghz) == pytest.approx([math.sqrt(8.0)] * 3, rel=1e-12)

    @pytest.mark.unit
    def test_device_qubit_frequency(self, device_fluxonium):
        spectrum = diagonalize(device_fluxonium)
        assert angular_to_mhz(spectrum.qubit_frequency) == pytest.approx(98.97, rel=0.05)
        assert spectrum.convergence_defect < 1e-6
        assert list(spectrum.energies) == sorted(spectrum.energies)

    @pytest.mark.unit
    def test_double_well_doublet(self):
        p = FluxoniumParams(charging_energy=1.0, inductive_energy=1.0, josephson_energy=5.0)
        energies = diagonalize(p).energies
        assert energies[1] < (energies[2] - energies[1]) / 3

    @pytest.mark.unit
    def test_parity_selection_at_sweet_spot(self, device_fluxonium):
        spectrum = diagonalize(device_fluxonium)
        assert relative_drive_strength(spectrum, 0, 2) < 1e-6
        assert relative_drive_strength(spectrum, 1, 3) < 1e-6

    @pytest.mark.unit
    def test_flux_symmetry(self):
        base = FluxoniumParams(charging_energy=1.0, inductive_energy=1.0, josephson_energy=5.0)
        low, high = sweep_flux(base, [0.3, 0.7])
        assert high.energies[1:] == pytest.approx(low.energies[1:], rel=1e-9)

    @pytest.mark.unit
    def test_unconverged_basis(self, device_fluxonium):
        with pytest.raises(ResolutionException) as exc_info:
            diagonalize(device_fluxonium, basis_size=16, threshold=0.0)
        assert exc_info.value.suggested_basis_size == 32

    @pytest.mark.unit
    def test_invalid_sizes(self, device_fluxonium):
        with pytest.raises(DomainException):
            diagonalize(device_fluxonium, basis_size=12)
        with pytest.raises(DomainException):
            diagonalize(device_fluxonium, n_levels=1)


class TestLevelSystem:
    """η 표와 준위 시스템 테스트"""

    @pytest.mark.unit
    def test_from_device_spectrum(self, device_fluxonium):
        levels = level_system_from_spectrum(diagonalize(device_fluxonium))
        assert levels.dimension == 4
        assert levels.eta["01"] == 1.0
        assert set(levels.eta) == {"01", "12", "23", "03"}
        assert all(value > 0 for value in levels.eta.values())

    @pytest.mark.unit
    def test_too_few_levels(self, device_fluxonium):
        with pytest.raises(DomainException):
            level_system_from_spectrum(diagonalize(device_fluxonium, n_levels=3))

    @pytest.mark.slow
    def test_charging_energy_sweep_is_smooth(self):
        values = [0.8, 0.85, 0.9, 0.95, 1.0]
        spectra = sweep_charging_energy(values, josephson_energy=5.0, inductive_energy=1.0, max_workers=2)
        for name in ("12", "03"):
            eta = [level_system_from_spectrum(s).eta[name] for s in spectra]
            curvature = np.abs(np.diff(eta, 2))
            assert np.all(curvature < 0.1 * np.abs(eta[1:-1]))


class TestDetuningCorrection:
    """고준위 디튜닝 보정 테스트"""

    @pytest.mark.unit
    def test_vanishes_at_gate_edges(self, four_levels, corrected_pulse):
        assert detuning_prime(four_levels, corrected_pulse, 0.0) == 0.0
        assert detuning_prime(four_levels, corrected_pulse, 40.0) == pytest.approx(0.0, abs=1e-20)

    @pytest.mark.unit
    def test_no_coupling_no_correction(self, corrected_pulse):
        levels = LevelSystem(
            dimension=4,
            energies=(0.0, 0.6, 20.0, 31.0),
            eta={"01": 1.0, "12": 0.0, "23": 0.5, "03": 0.0},
        )
        assert detuning_prime(levels, corrected_pulse, 17.0) == 0.0
        assert detuning_lab(levels, corrected_pulse, 17.0) == 0.0

    @pytest.mark.unit
    def test_midpoint_value(self, four_levels):
        p = PulseParams(amplitude=0.1, detuning_scale=0.9, duration=40.0)
        alpha2, alpha3 = four_levels.anharmonicity(2), four_levels.anharmonicity(3)
        expected = 0.9 * 0.5 * 0.1**2 * (0.8**2 / alpha2 - 0.4**2 / alpha3)
        assert detuning_prime(four_levels, p, 20.0) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.unit
    def test_lab_detuning_is_mean_value(self, four_levels, corrected_pulse):
        """d/dt[t·Δ(t)] = Δ′(t)"""
        h = 1e-3
        for t in (5.0, 13.0, 27.0):
            numeric = (
                (t + h) * detuning_lab(four_levels, corrected_pulse, t + h)
                - (t - h) * detuning_lab(four_levels, corrected_pulse, t - h)
            ) / (2 * h)
            assert numeric == pytest.approx(detuning_prime(four_levels, corrected_pulse, t), rel=1e-7)

    @pytest.mark.unit
    def test_lab_detuning_limit_at_zero(self, four_levels, corrected_pulse):
        assert detuning_lab(four_levels, corrected_pulse, 0.0) == detuning_prime(
            four_levels, corrected_pulse, 0.0
        )
        with pytest.raises(DomainException):
            detuning_lab(four_levels, corrected_pulse, 41.0)

    @pytest.mark.unit
    def test_static_drive_frequency_without_scale(self, four_levels):
        p = PulseParams(amplitude=0.1, detuning=0.002, duration=40.0)
        static = four_levels.qubit_frequency - 0.002
        assert drive_frequency(four_levels, p, 11.0) == (static, static)

    @pytest.mark.unit
    def test_drive_frequency_consistency(self, four_levels, corrected_pulse):
        """ω_d′ − ω_d = t·ω̇_d"""
        h = 1e-3
        for t in (7.0, 22.0):
            omega_d, omega_d_prime = drive_frequency(four_levels, corrected_pulse, t)
            rate = (
                drive_frequency(four_levels, corrected_pulse, t + h)[0]
                - drive_frequency(four_levels, corrected_pulse, t - h)[0]
            ) / (2 * h)
            assert omega_d_prime - omega_d == pytest.approx(t * rate, rel=1e-6)

    @pytest.mark.unit
    def test_zero_anharmonicity(self, corrected_pulse):
        levels = LevelSystem(
            dimension=4,
            energies=(0.0, 0.6, 1.2, 5.0),
            eta={"01": 1.0, "12": 0.8, "23": 0.5, "03": 0.4},
        )
        with pytest.raises(SingularityException):
            detuning_prime(levels, corrected_pulse, 3.0)


class TestAdiabaticGenerator:
    """단열 소거 생성자 테스트"""

    @pytest.mark.unit
    def test_zero_at_start(self, four_levels, corrected_pulse):
        assert np.all(adiabatic_generator(four_levels, corrected_pulse, 0.0) == 0)

    @pytest.mark.unit
    def test_anti_hermitian(self, four_levels, corrected_pulse, rng):
        for t in rng.uniform(0, 40.0, 4):
            generator = adiabatic_generator(four_levels, corrected_pulse, float(t))
            assert np.array_equal(generator.conj().T, -generator)

    @pytest.mark.unit
    def test_removes_off_block_coupling(self, four_levels):
        p = PulseParams(amplitude=0.1, ppp=0.4, duration=40.0, phase=0.3)
        for t in (9.0, 20.0, 31.0):
            h_off = float(np.linalg.norm(four_level_hamiltonian(p, four_levels, None, t)[:2, 2:]))
            assert off_block_residual(four_levels, p, t) < 0.1 * h_off

    @pytest.mark.unit
    def test_adiabaticity_parameter(self, four_levels):
        alpha2, alpha3 = four_levels.anharmonicity(2), four_levels.anharmonicity(3)
        expected = max(0.8 * 0.1 / abs(alpha2), 0.4 * 0.1 / abs(alpha3))
        assert adiabaticity_parameter(four_levels, 0.1) == pytest.approx(expected)
