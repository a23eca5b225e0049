"""
Seeded synthetic carbon-intensity and power data for tests and dry runs.
"""

from typing import Optional

import numpy as np

from models.data_models import HourlySeries, HourlyStamp, PowerTrace, Unit
from models.timeseries import HOURS_PER_DAY


def synthetic_carbon_intensity(
    hours: int,
    seed: int = 0,
    region: str = "SYN",
    start: HourlyStamp = 0,
    base: float = 400.0,
    amplitude: float = 80.0,
    phi: float = 0.8,
    noise_sd: float = 15.0,
) -> HourlySeries:
    """
    Daily-periodic carbon intensity with AR(1) noise.

    y_t = base + amplitude * cos(2 pi (t mod 24) / 24) + z_t,
    z_t = phi * z_{t-1} + N(0, noise_sd^2), clipped at 1 g/kWh.
    """
    if hours < 1:
        raise ValueError(f"hours must be >= 1, got {hours}")

    rng = np.random.default_rng(seed)
    stamps = np.arange(start, start + hours)
    cycle = base + amplitude * np.cos(2.0 * np.pi * (stamps % HOURS_PER_DAY) / HOURS_PER_DAY)

    shocks = rng.normal(0.0, noise_sd, size=hours)
    noise = np.empty(hours)
    previous = 0.0
    for t in range(hours):
        previous = phi * previous + shocks[t]
        noise[t] = previous

    values = np.maximum(cycle + noise, 1.0)
    return HourlySeries(
        region=region,
        start=start,
        values=tuple(float(v) for v in values),
        unit=Unit.GCO2EQ_PER_KWH,
    )


def synthetic_power_trace(
    hours: int = HOURS_PER_DAY,
    peak_mw: float = 20.0,
    seed: Optional[int] = None,
    region: str = "SYN",
    start: HourlyStamp = 0,
) -> PowerTrace:
    """
    Normalized power trace; flat at 1.0 unless a seed asks for a noisy
    diurnal load between 0.5 and 1.0.
    """
    if seed is None:
        normalized = np.ones(hours)
    else:
        rng = np.random.default_rng(seed)
        stamps = np.arange(start, start + hours)
        diurnal = 0.75 + 0.2 * np.sin(2.0 * np.pi * (stamps % HOURS_PER_DAY) / HOURS_PER_DAY)
        normalized = np.clip(diurnal + rng.normal(0.0, 0.03, size=hours), 0.5, 1.0)

    return PowerTrace(
        region=region,
        start=start,
        normalized=tuple(float(v) for v in normalized),
        peak_mw=peak_mw,
    )
