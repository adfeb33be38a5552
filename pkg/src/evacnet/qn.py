"""Queuing-network model of the sensing-to-actuation control loop.

One sampling epoch flows camera -> sensor network -> controller (where it
is monitored, analyzed, planned, and executed as four consecutive service
visits) -> actuator network -> three actuators (dashboard, alarm,
evacuation signs).  Controllers, cameras, and actuators are FIFO single
servers with exponentially distributed service times; the two network hops
are pure delays (they never queue).  Architectures differ in how many
controllers share the planning load (a collaborative pair takes alternate
epochs) and in the space/time resolution, which sets both the sampling
period and the planning cost.

Epoch response is measured from sampling to the first completed actuation,
which is when the system starts steering people; the slowest branch is
also reported.  Saturated stations (utilization at or above one) are
flagged instead of simulated to a meaningless mean.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

CENTRALIZED, COLLABORATIVE = "centralized", "collaborative"
HR, LR = "HR", "LR"

FIFO, DELAY = "fifo", "delay"

# sampling period in seconds per resolution (one cell-crossing time)
ARRIVAL_PERIOD = {LR: 2.5, HR: 1.25}

# mean service seconds per task class; controller entries differ by
# architecture because the collaborative planners split the problem
CCTV_SENSE = 0.01386
NET_SENSOR_SIDE = 0.023480633
CONTROLLER_MEANS = {
    CENTRALIZED: {
        "monitor": 0.0045067,
        "analyze": 0.00676,
        "plan_hr": 110.1791139,
        "plan_lr": 1.1668182,
        "execute": 0.0045067,
    },
    COLLABORATIVE: {
        "monitor": 0.0045067,
        "analyze": 0.005735,
        "plan_hr": 2.0164557,
        "plan_lr": 0.5016667,
        "execute": 0.0045067,
    },
}
NET_ACTUATOR_SIDE = {
    "dashboard": 0.013619641,
    "alarm": 1.013619641,
    "evacuation_signs": 2.013619641,
}
ACTUATOR_MEAN = 0.000921667

ACTUATORS = ("dashboard", "alarm", "evacuation_signs")


class RangeError(ValueError):
    """Energy reading outside the configured [min, max] window."""


def energy_utility(current: float, minimum: float, maximum: float) -> float:
    """Energy-consumption utility in [0, 1]; one is best, zero is worst."""
    if minimum >= maximum:
        raise RangeError("minimum energy must be below maximum")
    if current < minimum or current > maximum:
        raise RangeError(f"current {current} outside [{minimum}, {maximum}]")
    return 1.0 - (current - minimum) / (maximum - minimum)


@dataclass(frozen=True)
class QNModel:
    arch: str
    resolution: str
    arrival_period: float
    n_controllers: int
    controller_means: dict              # monitor/analyze/plan/execute seconds
    stations: dict                      # name -> FIFO | DELAY

    @property
    def controller_demand(self) -> float:
        m = self.controller_means
        return m["monitor"] + m["analyze"] + m["plan"] + m["execute"]


def build_qn(arch: str, res: str) -> QNModel:
    if arch not in (CENTRALIZED, COLLABORATIVE):
        raise ValueError(f"unknown architecture {arch!r}")
    if res not in (HR, LR):
        raise ValueError(f"unknown resolution {res!r}")
    base = CONTROLLER_MEANS[arch]
    means = {
        "monitor": base["monitor"],
        "analyze": base["analyze"],
        "plan": base["plan_hr"] if res == HR else base["plan_lr"],
        "execute": base["execute"],
    }
    n_controllers = 2 if arch == COLLABORATIVE else 1
    stations = {"cctvs": FIFO, "pl2il": DELAY, "il2al": DELAY}
    for k in range(n_controllers):
        stations[f"controller{k}"] = FIFO
    for actuator in ACTUATORS:
        stations[actuator] = FIFO
    return QNModel(
        arch=arch,
        resolution=res,
        arrival_period=ARRIVAL_PERIOD[res],
        n_controllers=n_controllers,
        controller_means=means,
        stations=stations,
    )


def utilization(model: QNModel) -> dict[str, float]:
    """Analytic per-station utilization; delay stations never saturate."""
    period = model.arrival_period
    rho = {"cctvs": CCTV_SENSE / period, "pl2il": 0.0, "il2al": 0.0}
    per_controller_period = period * model.n_controllers
    for k in range(model.n_controllers):
        rho[f"controller{k}"] = model.controller_demand / per_controller_period
    for actuator in ACTUATORS:
        rho[actuator] = ACTUATOR_MEAN / period
    return rho


def saturated(model: QNModel) -> bool:
    return any(r >= 1.0 for r in utilization(model).values())


@dataclass(frozen=True)
class ResponseStats:
    mean_response_s: float              # sampling -> first actuation done
    mean_response_max_s: float          # sampling -> slowest actuation done
    utilization: dict
    saturated: bool
    epochs: int
    warmup_epochs: int
    actuations: dict = None             # completions per actuator kind


class _FifoServer:
    """Single FIFO server: tracks when it next becomes free."""

    def __init__(self):
        self.free_at = 0.0

    def serve(self, arrival: float, service: float) -> float:
        start = max(arrival, self.free_at)
        done = start + service
        self.free_at = done
        return done


def simulate_qn(model: QNModel, epochs: int, seed: int = 0,
                warmup_fraction: float = 0.1) -> ResponseStats:
    """Event simulation with deterministic sampling and exponential draws.

    Every epoch produces exactly one dashboard, one alarm, and one
    evacuation-signs completion.  The first 10% of epochs warm the
    queues up and are not averaged.
    """
    if epochs < 1:
        raise ValueError("need at least one epoch")
    rho = utilization(model)
    is_saturated = any(r >= 1.0 for r in rho.values())
    if is_saturated:
        return ResponseStats(
            mean_response_s=float("nan"),
            mean_response_max_s=float("nan"),
            utilization=rho,
            saturated=True,
            epochs=epochs,
            warmup_epochs=0,
            actuations={a: 0 for a in ACTUATORS},
        )

    rng = random.Random(seed)
    exp = rng.expovariate
    servers = {
        name: _FifoServer() for name, kind in model.stations.items()
        if kind == FIFO
    }
    m = model.controller_means
    period = model.arrival_period

    # jobs pass stations strictly in topology order and every station is
    # conservative, so epoch k's visit at each FIFO server happens after
    # epoch k-2 (other controller lane) or k-1 finished there; processing
    # epochs in arrival order with running server-free times is exact
    first_done: list[float] = []
    last_done: list[float] = []
    actuations = {a: 0 for a in ACTUATORS}
    for k in range(epochs):
        t0 = k * period
        t = servers["cctvs"].serve(t0, exp(1.0 / CCTV_SENSE))
        t += exp(1.0 / NET_SENSOR_SIDE)              # sensor-side network delay
        lane = servers[f"controller{k % model.n_controllers}"]
        for phase in ("monitor", "analyze", "plan", "execute"):
            mean = m[phase]
            t = lane.serve(t, exp(1.0 / mean) if mean > 0 else 0.0)
        branch_done = []
        for actuator in ACTUATORS:
            tb = t + exp(1.0 / NET_ACTUATOR_SIDE[actuator])
            tb = servers[actuator].serve(tb, exp(1.0 / ACTUATOR_MEAN))
            branch_done.append(tb)
            actuations[actuator] += 1
        first_done.append(min(branch_done) - t0)
        last_done.append(max(branch_done) - t0)

    warmup = int(epochs * warmup_fraction)
    tail_first = first_done[warmup:]
    tail_last = last_done[warmup:]
    return ResponseStats(
        mean_response_s=sum(tail_first) / len(tail_first),
        mean_response_max_s=sum(tail_last) / len(tail_last),
        utilization=rho,
        saturated=False,
        epochs=epochs,
        warmup_epochs=warmup,
        actuations=actuations,
    )


def simulate_mm1(arrival_rate: float, service_mean: float, jobs: int,
                 seed: int = 0) -> float:
    """Mean response of an M/M/1 queue, for checking the service engine."""
    rng = random.Random(seed)
    server = _FifoServer()
    t = 0.0
    total = 0.0
    for _ in range(jobs):
        t += rng.expovariate(arrival_rate)
        done = server.serve(t, rng.expovariate(1.0 / service_mean))
        total += done - t
    return total / jobs


def scenario_stats(arch: str, res: str, epochs: int = 20000,
                   seed: int = 0) -> ResponseStats:
    return simulate_qn(build_qn(arch, res), epochs, seed=seed)
