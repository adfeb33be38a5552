import math

import pytest

from evacnet.qn import (
    CENTRALIZED,
    COLLABORATIVE,
    HR,
    LR,
    RangeError,
    build_qn,
    energy_utility,
    saturated,
    simulate_mm1,
    simulate_qn,
    utilization,
)


def test_build_loads_table_means():
    model = build_qn(CENTRALIZED, LR)
    assert model.controller_means["plan"] == pytest.approx(1.1668182)
    assert model.controller_means["monitor"] == pytest.approx(0.0045067)
    assert model.controller_means["analyze"] == pytest.approx(0.00676)
    assert model.arrival_period == 2.5
    assert model.n_controllers == 1

    model = build_qn(COLLABORATIVE, HR)
    assert model.controller_means["plan"] == pytest.approx(2.0164557)
    assert model.controller_means["analyze"] == pytest.approx(0.005735)
    assert model.arrival_period == 1.25
    assert model.n_controllers == 2


def test_station_list_covers_six_layers():
    model = build_qn(CENTRALIZED, LR)
    assert set(model.stations) == {
        "cctvs", "pl2il", "controller0", "il2al",
        "dashboard", "alarm", "evacuation_signs",
    }
    assert "controller1" in build_qn(COLLABORATIVE, LR).stations


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_qn("federated", LR)
    with pytest.raises(ValueError):
        build_qn(CENTRALIZED, "XL")


def test_controller_utilization_values():
    rho = utilization(build_qn(CENTRALIZED, HR))["controller0"]
    assert rho == pytest.approx(88.156, rel=1e-3)
    rho = utilization(build_qn(CENTRALIZED, LR))["controller0"]
    assert rho == pytest.approx(0.473, abs=5e-4)
    rho = utilization(build_qn(COLLABORATIVE, HR))["controller0"]
    assert rho == pytest.approx(0.8125, abs=1e-3)
    assert saturated(build_qn(CENTRALIZED, HR))
    assert not saturated(build_qn(CENTRALIZED, LR))


def test_collaborative_halves_controller_load():
    rho_c = utilization(build_qn(COLLABORATIVE, LR))
    assert rho_c["controller0"] == pytest.approx(rho_c["controller1"])
    # each of the two lanes sees every other epoch
    demand = build_qn(COLLABORATIVE, LR).controller_demand
    assert rho_c["controller0"] == pytest.approx(demand / 5.0)


def test_network_stations_never_flag_saturation():
    rho = utilization(build_qn(CENTRALIZED, LR))
    assert rho["pl2il"] == 0.0
    assert rho["il2al"] == 0.0


def test_mm1_closed_form():
    response = simulate_mm1(0.2, 1.0, 100_000, seed=1)
    assert abs(response - 1.25) / 1.25 < 0.05


def test_saturated_scenario_reports_flag():
    stats = simulate_qn(build_qn(CENTRALIZED, HR), 1000, seed=0)
    assert stats.saturated
    assert math.isnan(stats.mean_response_s)


def test_simulation_deterministic_per_seed():
    a = simulate_qn(build_qn(CENTRALIZED, LR), 3000, seed=5)
    b = simulate_qn(build_qn(CENTRALIZED, LR), 3000, seed=5)
    c = simulate_qn(build_qn(CENTRALIZED, LR), 3000, seed=6)
    assert a.mean_response_s == b.mean_response_s
    assert a.mean_response_s != c.mean_response_s


def test_every_epoch_actuates_each_kind_once():
    stats = simulate_qn(build_qn(COLLABORATIVE, LR), 2500, seed=2)
    assert stats.actuations == {
        "dashboard": 2500, "alarm": 2500, "evacuation_signs": 2500,
    }


def test_response_orderings_and_magnitudes():
    means = {}
    for arch, res in [(COLLABORATIVE, LR), (CENTRALIZED, LR), (COLLABORATIVE, HR)]:
        stats = simulate_qn(build_qn(arch, res), 8000, seed=3)
        assert not stats.saturated
        means[(arch, res)] = stats.mean_response_s
        assert stats.mean_response_max_s >= stats.mean_response_s
    assert means[(COLLABORATIVE, LR)] < means[(CENTRALIZED, LR)]
    assert means[(CENTRALIZED, LR)] < means[(COLLABORATIVE, HR)]


def test_warmup_choice_barely_matters_when_stable():
    base = simulate_qn(build_qn(CENTRALIZED, LR), 20000, seed=4,
                       warmup_fraction=0.1)
    deeper = simulate_qn(build_qn(CENTRALIZED, LR), 20000, seed=4,
                         warmup_fraction=0.25)
    shift = abs(base.mean_response_s - deeper.mean_response_s)
    assert shift / base.mean_response_s < 0.01


def test_energy_utility():
    assert energy_utility(5, 5, 10) == 1.0
    assert energy_utility(10, 5, 10) == 0.0
    assert energy_utility(7.5, 5, 10) == 0.5
    with pytest.raises(RangeError):
        energy_utility(4, 5, 10)
    with pytest.raises(RangeError):
        energy_utility(11, 5, 10)
    with pytest.raises(RangeError):
        energy_utility(5, 10, 10)
