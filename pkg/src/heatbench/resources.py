"""Parameter audits, epoch timing and training energy / CO2-equivalent estimates.

Energy is average device power times wall-clock time; emissions are energy
times grid carbon intensity. Both are pure functions of their inputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

from .models import Forecaster, count_parameters


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    avg_power_watts: float

    def __post_init__(self):
        if not self.avg_power_watts > 0:
            raise ValueError(f"{self.name}: average power must be > 0 W")


#: nominal package power (TDP) as a stand-in for measured average draw
DEVICE_PROFILES = {
    "laptop_cpu": DeviceProfile("Intel Core i7-1165G7 (28 W TDP)", 28.0),
    "datacenter_gpu": DeviceProfile("NVIDIA L40S (350 W TDP)", 350.0),
}

#: gCO2e per kWh; roughly the German grid average of recent years, override per run
DEFAULT_CARBON_INTENSITY = 380.0


@dataclass(frozen=True)
class ParamAuditRow:
    layer: str
    count: int


def audit_params(model: Forecaster) -> list[ParamAuditRow]:
    """One row per parameter tensor of an instantiated model.

    Raises:
        AssertionError: The tensors do not add up to the closed-form count for the model's spec.
    """
    rows = [ParamAuditRow(name, t.size) for name, t in model.named_parameters()]
    total = sum(r.count for r in rows)
    expected = count_parameters(model.spec)
    if total != expected:
        raise AssertionError(f"{model.spec.kind.value}: tensors hold {total} scalars, spec implies {expected}")
    return rows


def estimate_emissions(runtime_minutes: float, device: DeviceProfile, carbon_intensity: float
                       ) -> tuple[float, float]:
    """Return ``(energy_kwh, emissions_g)`` for a run of ``runtime_minutes`` on ``device``."""
    if runtime_minutes < 0:
        raise ValueError("runtime must be >= 0")
    if carbon_intensity < 0:
        raise ValueError("carbon intensity must be >= 0")
    energy_kwh = device.avg_power_watts * (runtime_minutes / 60.0) / 1000.0
    return energy_kwh, energy_kwh * carbon_intensity


def time_epochs(epoch_seconds: list[float]) -> float:
    """Average minutes per epoch."""
    if not epoch_seconds:
        raise ValueError("no completed epochs")
    return sum(epoch_seconds) / len(epoch_seconds) / 60.0


@dataclass(frozen=True)
class ResourceReport:
    model: str
    trainable_params: int
    runtime_per_epoch_min: float
    epochs: int
    total_runtime_min: float
    device_name: str
    avg_power_watts: float
    carbon_intensity: float
    energy_kwh: float
    emissions_g: float

    def to_dict(self) -> dict:
        return asdict(self)


def resource_report(model: Forecaster, epoch_seconds: list[float], device: DeviceProfile,
                    carbon_intensity: float = DEFAULT_CARBON_INTENSITY, name: str | None = None) -> ResourceReport:
    params = sum(r.count for r in audit_params(model))
    total_min = sum(epoch_seconds) / 60.0
    per_epoch = time_epochs(epoch_seconds) if epoch_seconds else 0.0
    energy, emissions = estimate_emissions(total_min, device, carbon_intensity)
    return ResourceReport(name or model.spec.kind.value, params, per_epoch, len(epoch_seconds), total_min,
                          device.name, device.avg_power_watts, carbon_intensity, energy, emissions)


def recompute(report: ResourceReport) -> ResourceReport:
    """Re-derive energy and emissions from a report's own inputs."""
    device = DeviceProfile(report.device_name, report.avg_power_watts)
    energy, emissions = estimate_emissions(report.total_runtime_min, device, report.carbon_intensity)
    return ResourceReport(**{**report.to_dict(), "energy_kwh": energy, "emissions_g": emissions})


def write_resource_reports(reports: list[ResourceReport], path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2, sort_keys=True)
