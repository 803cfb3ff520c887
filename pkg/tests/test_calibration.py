"""
보정 서비스 테스트
위상 평균 비용, 최적화, 히트맵, 회로 시뮬레이션, 의사 항등, RB, 오차 예산
"""

import math
from unittest.mock import patch

import numpy as np
import pytest

from core.exceptions import CalibrationException, DomainException
from schemas import LevelSystem, OptimizationResult, ProtocolResult, PulseParams
from services.calibration import (
    CalibrationContext,
    CircuitSimulator,
    FixedGate,
    MeasurementModel,
    PhaseInterpolatedGate,
    QubitModel,
    base_params,
    budget_from_results,
    coherence_limit,
    contour_ppp,
    detuning_grid,
    duration_sweep,
    embed,
    error_budget,
    fit_rb_decay,
    gate_label,
    heatmap_scan,
    ideal_gateset,
    optimize,
    optimize_level_corrections,
    phase_averaged_cost,
    phase_averaged_error,
    phase_points,
    ppp_grid,
    pseudo_identity,
    run_protocol,
    simulate_rb,
)
from services.cliffords import X90, X180, z_gate
from services.fluxonium import fluxonium_level_system
from services.propagation import target_unitary


@pytest.fixture
def rwa_model(qubit_frequency):
    return QubitModel.two_level(qubit_frequency, engine="rwa")


@pytest.fixture
def magnus_model(qubit_frequency):
    return QubitModel.two_level(qubit_frequency, engine="magnus0")


@pytest.fixture
def four_level_model(qubit_frequency):
    levels = LevelSystem(
        dimension=4,
        energies=(0.0, qubit_frequency, 3.0, 5.0),
        eta={"01": 1.0, "12": 0.5, "23": 0.3, "03": 0.2},
    )
    return QubitModel(levels)


@pytest.fixture
def ideal_simulator():
    return CircuitSimulator(ideal_gateset(duration=10.0), phase_step_deg=45.0)


class TestPhaseAveragedCost:
    """위상 평균 비용 테스트"""

    @pytest.mark.unit
    def test_phase_points(self):
        points = phase_points(11)
        assert len(points) == 12
        assert points[0] == 0.0
        assert points[-1] == pytest.approx(11 * math.pi / 12)
        assert phase_points(0) == [0.0]
        with pytest.raises(DomainException):
            phase_points(-1)

    @pytest.mark.unit
    def test_embed(self):
        u = target_unitary(math.pi / 2)
        out = embed(u, 4)
        assert out[:2, :2] == pytest.approx(u)
        assert out[2:, 2:] == pytest.approx(np.eye(2))
        assert embed(u, 2) == pytest.approx(u)

    @pytest.mark.unit
    def test_model_validation(self, qubit_frequency):
        levels = LevelSystem(
            dimension=4,
            energies=(0.0, qubit_frequency, 3.0, 5.0),
            eta={"01": 1.0, "12": 0.5, "23": 0.3, "03": 0.2},
        )
        with pytest.raises(DomainException):
            QubitModel(levels, engine="rwa")
        with pytest.raises(DomainException):
            QubitModel.two_level(qubit_frequency, engine="lsoda")

    @pytest.mark.unit
    def test_rwa_cost_vanishes(self, make_pulse, rwa_model):
        assert phase_averaged_cost(make_pulse(), rwa_model, n=3) < 1e-10

    @pytest.mark.unit
    def test_commensurate_magnus_cost_vanishes(self, make_pulse, magnus_model):
        assert phase_averaged_cost(make_pulse(), magnus_model) < 1e-9

    @pytest.mark.unit
    def test_error_is_normalized_cost(self, make_pulse, magnus_model):
        p = make_pulse(duration=23.0)
        cost = phase_averaged_cost(p, magnus_model, n=5)
        assert cost > 0
        assert phase_averaged_error(p, magnus_model, n=5) == pytest.approx(cost / 6, rel=1e-12)

    @pytest.mark.unit
    def test_parallel_matches_serial(self, make_pulse, magnus_model):
        p = make_pulse(duration=23.0)
        serial = phase_averaged_cost(p, magnus_model, n=5)
        parallel = phase_averaged_cost(p, magnus_model, n=5, max_workers=3)
        assert parallel == pytest.approx(serial, rel=1e-14)


class TestOptimize:
    """넬더–미드 최적화 테스트"""

    @pytest.mark.unit
    def test_zero_initial_cost_returns_immediately(self):
        p0 = PulseParams(amplitude=0.1, duration=30.0)
        result = optimize(["amplitude"], p0, lambda p: 0.0)
        assert result.params == p0
        assert result.converged
        assert result.evaluations == 1

    @pytest.mark.unit
    def test_finds_quadratic_minimum(self):
        p0 = PulseParams(amplitude=0.1, duration=30.0)
        result = optimize(
            ["amplitude", "ppp"],
            p0,
            lambda p: (p.amplitude - 0.2) ** 2 + (p.ppp - 0.5) ** 2,
            max_evaluations=2000,
            steps={"ppp": 0.05},
        )
        assert result.params.amplitude == pytest.approx(0.2, abs=1e-5)
        assert result.params.ppp == pytest.approx(0.5, abs=1e-5)
        assert result.params.duration == 30.0
        assert result.cost < 1e-9

    @pytest.mark.unit
    def test_invalid_region_is_penalized(self):
        """진폭이 음수가 되는 영역은 벌점으로 처리"""
        p0 = PulseParams(amplitude=0.1, duration=30.0)
        result = optimize(["amplitude"], p0, lambda p: (p.amplitude + 0.05) ** 2, max_evaluations=300)
        assert result.params.amplitude >= 0.0
        assert result.cost < (0.1 + 0.05) ** 2

    @pytest.mark.unit
    def test_budget_exhaustion(self):
        p0 = PulseParams(amplitude=0.1, duration=30.0)
        result = optimize(["amplitude"], p0, lambda p: (p.amplitude - 5.0) ** 2, max_evaluations=5)
        assert not result.converged
        assert result.cost < 4.9**2

    @pytest.mark.unit
    def test_invalid_free_parameters(self):
        p0 = PulseParams(amplitude=0.1, duration=30.0)
        with pytest.raises(DomainException):
            optimize([], p0, lambda p: 1.0)
        with pytest.raises(DomainException):
            optimize(["duration"], p0, lambda p: 1.0)
        with pytest.raises(DomainException):
            optimize(["amplitude"], p0, lambda p: math.nan)


class TestHeatmap:
    """λ–Δ 히트맵 테스트"""

    @pytest.mark.unit
    def test_small_grid(self, magnus_model, qubit_frequency):
        algebraic = 1 / (2 * qubit_frequency)
        result = heatmap_scan(
            [0.0, algebraic],
            [0.0, 0.001],
            math.pi,
            23.0,
            magnus_model,
            optimize_amplitude=False,
            n=3,
        )
        assert len(result.errors) == 2
        assert all(len(row) == 2 for row in result.errors)
        assert result.errors[0][1] < 1e-9
        assert result.errors[0][0] > result.errors[0][1]
        expected = base_params(math.pi, 23.0).amplitude
        assert result.amplitudes[0][0] == pytest.approx(expected)

    @pytest.mark.unit
    def test_empty_grid(self, magnus_model):
        with pytest.raises(DomainException):
            heatmap_scan([], [0.0], math.pi, 23.0, magnus_model)


class TestCircuitSimulation:
    """위상 보간 게이트와 회로 시뮬레이터 테스트"""

    @pytest.mark.unit
    def test_interpolation_reproduces_samples(self, make_pulse, magnus_model):
        p = make_pulse(duration=23.0)
        gate = PhaseInterpolatedGate.from_model(magnus_model, p, samples=8)
        phases = np.array([math.pi * m / 8 for m in range(8)])
        expected = np.stack([magnus_model.propagator(p.with_phase(phi)) for phi in phases])
        assert gate.evaluate(phases) == pytest.approx(expected, abs=1e-12)
        assert gate.drive_frequency == magnus_model.qubit_frequency

    @pytest.mark.unit
    def test_interpolation_is_pi_periodic(self, make_pulse, magnus_model):
        gate = PhaseInterpolatedGate.from_model(magnus_model, make_pulse(duration=23.0), samples=8)
        assert gate.evaluate([0.37 + math.pi]) == pytest.approx(gate.evaluate([0.37]), abs=1e-12)

    @pytest.mark.unit
    def test_interpolation_between_samples(self, make_pulse, magnus_model):
        p = make_pulse(duration=23.0)
        gate = PhaseInterpolatedGate.from_model(magnus_model, p, samples=16)
        expected = magnus_model.propagator(p.with_phase(0.37))
        assert gate.evaluate([0.37])[0] == pytest.approx(expected, abs=1e-6)

    @pytest.mark.unit
    def test_interpolated_gate_rejects_bad_samples(self):
        with pytest.raises(DomainException):
            PhaseInterpolatedGate(np.zeros((4, 2, 3)), 10.0, 0.5)

    @pytest.mark.unit
    def test_x90_prepares_minus_y(self, ideal_simulator):
        state = ideal_simulator.run([X90])
        values = CircuitSimulator.expectations(state)
        assert values["y"] == pytest.approx(-1.0)
        assert values["x"] == pytest.approx(0.0, abs=1e-12)
        assert values["z"] == pytest.approx(0.0, abs=1e-12)
        assert state.absolute_time == 10.0

    @pytest.mark.unit
    def test_virtual_z_consumes_no_time(self, ideal_simulator):
        state = ideal_simulator.run([X90, z_gate(math.pi / 2), X180, z_gate(0.3)])
        assert state.absolute_time == 20.0
        assert state.frame_phase == pytest.approx(math.pi / 2 + 0.3)

    @pytest.mark.unit
    def test_double_pi_returns_to_ground(self, ideal_simulator):
        values = CircuitSimulator.expectations(ideal_simulator.run([X180, X180]))
        assert values["p0"] == pytest.approx(1.0)

    @pytest.mark.unit
    def test_invalid_gatesets(self):
        with pytest.raises(DomainException):
            CircuitSimulator({})
        with pytest.raises(DomainException):
            CircuitSimulator({"x90": FixedGate.ideal(math.pi / 2), "x180": FixedGate.ideal(math.pi, dimension=4)})
        simulator = CircuitSimulator({"x90": FixedGate.ideal(math.pi / 2)}, phase_step_deg=90.0)
        with pytest.raises(DomainException):
            simulator.run([X180])


class TestMeasurementModel:
    """측정 모델 테스트"""

    @pytest.mark.unit
    def test_ideal_expectation(self):
        measurement = MeasurementModel()
        assert measurement.probability(1.2) == 1.0
        assert measurement.probability(-0.1) == 0.0
        assert measurement.expectation(0.3) == pytest.approx(0.3)

    @pytest.mark.unit
    def test_seeded_sampling(self):
        first = [MeasurementModel(shots=100, seed=3).probability(0.4) for _ in range(2)]
        assert first[0] == first[1]
        value = MeasurementModel(shots=100, seed=3).probability(0.4)
        assert value * 100 == pytest.approx(round(value * 100))

    @pytest.mark.unit
    def test_negative_shots(self):
        with pytest.raises(DomainException):
            MeasurementModel(shots=-1)


class TestPseudoIdentity:
    """의사 항등 회로 테스트"""

    @pytest.mark.unit
    @pytest.mark.parametrize("kind", ["amp-pi", "amp-pi/2", "phase-pi", "phase-pi/2"])
    def test_ideal_gates_give_flat_signal(self, kind, ideal_simulator):
        result = pseudo_identity(kind, 6, ideal_simulator)
        assert result.repetitions == [1, 2, 3, 4, 5, 6]
        assert result.metric < 1e-12

    @pytest.mark.unit
    def test_over_rotation_detected(self):
        simulator = CircuitSimulator({"x180": FixedGate(target_unitary(1.01 * math.pi))}, phase_step_deg=90.0)
        result = pseudo_identity("amp-pi", 20, simulator)
        assert result.metric > 0.1

    @pytest.mark.unit
    def test_repetition_list_is_sorted(self, ideal_simulator):
        result = pseudo_identity("amp-pi", [5, 2, 2], ideal_simulator)
        assert result.repetitions == [2, 5]
        assert len(result.signal) == 2

    @pytest.mark.unit
    def test_invalid_arguments(self, ideal_simulator):
        with pytest.raises(DomainException):
            pseudo_identity("amp-2pi", 3, ideal_simulator)
        with pytest.raises(DomainException):
            pseudo_identity("amp-pi", 0, ideal_simulator)


class TestProtocols:
    """보정 프로토콜 보조 함수와 실행 테스트"""

    @pytest.mark.unit
    def test_gate_label(self):
        assert gate_label(math.pi) == "x180"
        assert gate_label(math.pi / 2) == "x90"
        with pytest.raises(DomainException):
            gate_label(0.3)

    @pytest.mark.unit
    def test_grids(self, magnus_model, qubit_frequency):
        ctx = CalibrationContext(model=magnus_model, duration=31.25, heatmap_size=4)
        lambdas = ppp_grid(ctx)
        assert len(lambdas) == 4
        assert lambdas[-1] == pytest.approx(1 / (2 * qubit_frequency))
        deltas = detuning_grid(ctx)
        assert len(deltas) == 5
        assert 0.0 in deltas

    @pytest.mark.unit
    def test_contour_crossing(self):
        lambdas = np.array([0.0, 0.5, 1.0])
        deltas = np.array([-1.0, 0.0, 1.0])
        grid = np.ones((3, 3))
        grid[1, 1] = 1e-6
        assert contour_ppp(grid, lambdas, deltas) == 0.5

    @pytest.mark.unit
    def test_contour_missing(self):
        lambdas = np.array([0.0, 0.5, 1.0])
        deltas = np.array([-1.0, 0.0, 1.0])
        grid = np.ones((3, 3))
        grid[0, 2] = 1e-6
        with pytest.raises(CalibrationException) as exc_info:
            contour_ppp(grid, lambdas, deltas)
        assert exc_info.value.diagnostic["metric"][0][2] == 1e-6

    @pytest.mark.integration
    def test_p1_on_rwa_model(self, rwa_model):
        """RWA 모델에서는 기본 진폭이 이미 최적"""
        ctx = CalibrationContext(
            model=rwa_model,
            duration=31.25,
            repetitions=4,
            interpolation_samples=4,
            cost_points=3,
            phase_step_deg=90.0,
        )
        result = run_protocol("P1", ctx)
        assert set(result.gates) == {"x180", "x90"}
        assert result.gates["x180"].amplitude == pytest.approx(base_params(math.pi, 31.25).amplitude)
        assert all(error < 1e-10 for error in result.coherent_errors.values())
        assert all(leak == 0.0 for leak in result.leakage.values())

    @pytest.mark.unit
    def test_unknown_protocol(self, rwa_model):
        with pytest.raises(DomainException):
            run_protocol("P5", CalibrationContext(model=rwa_model, duration=31.25))


class TestProtocolSteps:
    """P2–P4 단계 구성 테스트"""

    @pytest.mark.unit
    def test_signal_power_is_squared_signal(self, rwa_model):
        """보정 목적 함수는 의사 항등 신호의 제곱합"""
        ctx = CalibrationContext(
            model=rwa_model, duration=31.25, repetitions=4, interpolation_samples=4, phase_step_deg=90.0
        )
        p = base_params(math.pi, 31.25)
        p = p.model_copy(update={"amplitude": 1.01 * p.amplitude})
        trace = pseudo_identity("amp-pi", 4, ctx.simulator({"x180": ctx.gate(p)}))

        assert ctx.signal_power(p, "amp-pi") == pytest.approx(sum(s * s for s in trace.signal))
        assert ctx.signal_power(p, "amp-pi") > 0.0
        assert trace.metric > 0.0

    @pytest.mark.unit
    @patch("services.calibration.gate_report", return_value=(0.0, 0.0))
    def test_p2_uses_contour_crossing(self, mock_report, rwa_model, qubit_frequency):
        """Ω 보정 → 등고선 교차 λ, Δ=0 → Ω 재보정"""
        target = 1.0 / (4.0 * qubit_frequency)

        def metric(self, p):
            return (p.ppp - target) ** 2 + p.detuning**2

        ctx = CalibrationContext(model=rwa_model, duration=31.25, heatmap_size=5)
        with patch("services.calibration._calibrate_amplitude", side_effect=lambda c, p: p) as amplitude, patch.object(
            CalibrationContext, "phase_metric", metric
        ):
            result = run_protocol("P2", ctx)

        assert amplitude.call_count == 4
        before = [call.args[1] for call in amplitude.call_args_list[:2]]
        assert all(p.ppp == 0.0 for p in before)
        for p in result.gates.values():
            assert p.ppp == pytest.approx(target, rel=1e-12)
            assert p.detuning == 0.0

    @pytest.mark.unit
    @patch("services.calibration.gate_report", return_value=(0.0, 0.0))
    def test_p2_without_crossing(self, mock_report, rwa_model):
        ctx = CalibrationContext(model=rwa_model, duration=31.25, heatmap_size=5)

        def metric(self, p):
            return 1e-6 if p.detuning > 0 else 1.0

        with patch("services.calibration._calibrate_amplitude", side_effect=lambda c, p: p), patch.object(
            CalibrationContext, "phase_metric", metric
        ):
            with pytest.raises(CalibrationException) as exc_info:
                run_protocol("P2", ctx)
        assert len(exc_info.value.diagnostic["ppp_grid"]) == 5

    @pytest.mark.unit
    @patch("services.calibration.gate_report", return_value=(0.0, 0.0))
    def test_p3_two_level(self, mock_report, rwa_model, qubit_frequency):
        with patch("services.calibration._calibrate_amplitude", side_effect=lambda c, p: p) as amplitude, patch(
            "services.calibration._calibrate_detuning_scale"
        ) as detuning_scale:
            result = run_protocol("P3", CalibrationContext(model=rwa_model, duration=31.25))

        assert amplitude.call_count == 2
        detuning_scale.assert_not_called()
        for p in result.gates.values():
            assert p.ppp == pytest.approx(1.0 / (4.0 * qubit_frequency))
            assert p.detuning == 0.0

    @pytest.mark.unit
    @patch("services.calibration.gate_report", return_value=(0.0, 0.0))
    def test_p3_four_level_calibrates_detuning_scale(self, mock_report, four_level_model):
        def calibrate_scale(ctx, p):
            assert p.detuning_scale == 1.0
            return p.model_copy(update={"detuning_scale": 0.8})

        with patch("services.calibration._calibrate_amplitude", side_effect=lambda c, p: p) as amplitude, patch(
            "services.calibration._calibrate_detuning_scale", side_effect=calibrate_scale
        ) as detuning_scale:
            result = run_protocol("P3", CalibrationContext(model=four_level_model, duration=31.25))

        assert amplitude.call_count == 4
        assert detuning_scale.call_count == 2
        assert all(p.detuning_scale == 0.8 for p in result.gates.values())

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "model_name, extra",
        [("rwa_model", []), ("four_level_model", ["detuning_scale", "amplitude_scale"])],
    )
    @patch("services.calibration.gate_report", return_value=(0.0, 0.0))
    def test_p4_free_parameters(self, mock_report, model_name, extra, request):
        """4준위에서는 Ω_Δ 와 ε 도 함께 최적화"""
        model = request.getfixturevalue(model_name)
        start = {"x180": base_params(math.pi, 31.25), "x90": base_params(math.pi / 2, 31.25)}

        def fake_optimize(free, p0, cost, **kwargs):
            return OptimizationResult(params=p0, cost=0.0, converged=True, evaluations=1)

        with patch("services.calibration._protocol_p3", return_value=start), patch(
            "services.calibration.optimize", side_effect=fake_optimize
        ) as optimizer:
            result = run_protocol("P4", CalibrationContext(model=model, duration=31.25))

        assert optimizer.call_count == 2
        for call in optimizer.call_args_list:
            assert list(call.args[0]) == ["amplitude", "ppp", "detuning", *extra]
        assert result.gates == start

    @pytest.mark.integration
    def test_p4_does_not_worsen_p3(self, magnus_model):
        ctx = CalibrationContext(
            model=magnus_model,
            duration=23.0,
            repetitions=4,
            interpolation_samples=4,
            cost_points=3,
            phase_step_deg=90.0,
            max_evaluations=60,
            restarts=1,
        )
        p3 = run_protocol("P3", ctx)
        p4 = run_protocol("P4", ctx)
        for label in ("x180", "x90"):
            assert p4.coherent_errors[label] <= p3.coherent_errors[label] + 1e-15

    @pytest.mark.slow
    def test_budget_ordering(self, device_fluxonium):
        """26.7 ns 소자 수준 시스템: P4 ≤ P3 ≤ P2 ≤ P1"""
        levels = fluxonium_level_system(device_fluxonium)

        def context(model):
            return CalibrationContext(
                model=model,
                duration=26.7,
                repetitions=10,
                heatmap_size=9,
                interpolation_samples=16,
                cost_points=7,
                phase_step_deg=5.0,
                max_evaluations=200,
            )

        two_level = context(QubitModel.two_level(levels.qubit_frequency))
        four_level = context(QubitModel(levels))
        totals = {p: error_budget(p, two_level, four_level).total for p in ("P1", "P2", "P3", "P4")}
        assert totals["P4"] <= totals["P3"] <= totals["P2"] <= totals["P1"]


class TestRandomizedBenchmarking:
    """RB 적합과 시뮬레이션 테스트"""

    @pytest.mark.unit
    def test_fit_synthetic_decay(self):
        lengths = [1, 5, 10, 20, 50, 100, 200]
        survival = [0.5 * 0.98**m + 0.5 for m in lengths]
        result = fit_rb_decay(lengths, survival)
        assert result.decay == pytest.approx(0.98, rel=1e-6)
        assert result.amplitude == pytest.approx(0.5, rel=1e-5)
        assert result.offset == pytest.approx(0.5, rel=1e-5)
        assert result.error_per_clifford == pytest.approx(0.01, rel=1e-4)

    @pytest.mark.unit
    def test_fit_flat_survival(self):
        result = fit_rb_decay([1, 2, 3], [1.0, 1.0, 1.0])
        assert result.decay == 1.0
        assert result.error_per_clifford == 0.0

    @pytest.mark.unit
    def test_fit_requires_data(self):
        with pytest.raises(DomainException):
            fit_rb_decay([1, 2], [1.0, 0.9])
        with pytest.raises(DomainException):
            fit_rb_decay([1, 2, 3], [1.0, 0.9])

    @pytest.mark.unit
    def test_ideal_gates_do_not_decay(self):
        simulator = CircuitSimulator(ideal_gateset(duration=10.0), phase_step_deg=90.0)
        result = simulate_rb(simulator, [1, 4, 8], seeds=2)
        assert result.error_per_clifford == 0.0
        assert result.survival == pytest.approx([1.0, 1.0, 1.0])

    @pytest.mark.unit
    def test_invalid_seed_count(self, ideal_simulator):
        with pytest.raises(DomainException):
            simulate_rb(ideal_simulator, [1, 2, 3], seeds=0)


class TestCoherenceAndBudget:
    """결맞음 한계와 오차 예산 테스트"""

    @pytest.mark.unit
    def test_coherence_limit(self):
        assert coherence_limit(0.0, 75e3, 37e3) == pytest.approx(1.0)
        assert 1 - coherence_limit(26.7, 75e3, 37e3) == pytest.approx(3.0e-4, rel=0.01)

    @pytest.mark.unit
    def test_coherence_limit_invalid(self):
        with pytest.raises(DomainException):
            coherence_limit(10.0, 0.0, 1.0)
        with pytest.raises(DomainException):
            coherence_limit(-1.0, 1.0, 1.0)

    @pytest.mark.unit
    def test_budget_from_results(self):
        gates = {"x180": PulseParams(amplitude=0.1, duration=30.0)}
        two = ProtocolResult(
            protocol="P2", duration=30.0, gates=gates, coherent_errors={"x180": 1e-4, "x90": 3e-4}
        )
        four = ProtocolResult(
            protocol="P3",
            duration=30.0,
            gates=gates,
            coherent_errors={"x180": 5e-4, "x90": 7e-4},
            leakage={"x180": 1e-5, "x90": 3e-5},
        )
        budget = budget_from_results(two, four)
        assert budget.non_rwa_error == pytest.approx(2e-4)
        assert budget.higher_level_error == pytest.approx(4e-4)
        assert budget.leakage_error == pytest.approx(2e-5)
        assert budget.total == pytest.approx(6.2e-4)

    @pytest.mark.unit
    def test_budget_clips_negative_difference(self):
        gates = {"x180": PulseParams(amplitude=0.1, duration=30.0)}
        two = ProtocolResult(protocol="P1", duration=30.0, gates=gates, coherent_errors={"x180": 5e-4})
        four = ProtocolResult(
            protocol="P1", duration=30.0, gates=gates, coherent_errors={"x180": 3e-4}, leakage={"x180": 0.0}
        )
        assert budget_from_results(two, four).higher_level_error == 0.0

    @pytest.mark.unit
    def test_error_budget_requires_both_models(self, rwa_model):
        ctx = CalibrationContext(model=rwa_model, duration=31.25)
        with pytest.raises(DomainException):
            error_budget("P1", ctx, ctx)


class TestScans:
    """게이트 시간 스캔과 준위 보정 테스트"""

    @pytest.mark.unit
    def test_duration_sweep_row(self, magnus_model, qubit_frequency):
        (row,) = duration_sweep([31.25], magnus_model, n=3, first_order=False)
        assert row["magnus_periods"] == pytest.approx(5.0)
        assert row["uncorrected"] < 1e-9
        assert row["algebraic"] < 1e-9
        assert math.isnan(row["first_order"])

    @pytest.mark.unit
    def test_short_gate_first_order_unavailable(self, magnus_model):
        (row,) = duration_sweep([15.0], magnus_model, n=1)
        assert math.isnan(row["first_order"])
        assert row["duration"] == 15.0

    @pytest.mark.unit
    def test_level_corrections_need_four_levels(self, two_level_system, make_pulse):
        with pytest.raises(DomainException):
            optimize_level_corrections(two_level_system, make_pulse())
