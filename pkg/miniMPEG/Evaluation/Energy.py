"""
Energy estimates for inference.

Sources, in order of preference:
    rapl      the processor energy counters of Linux (/sys/class/powercap/intel-rapl:*/energy_uj), sampled once per
              second while a query runs so that counter wrap-arounds are not missed;
    constant  a configured power draw in watts multiplied by the inference time;
    none      nothing available; the energy is reported as absent, never as 0.

All values are estimates and are labelled with their source.
"""

from __future__ import annotations

import logging
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator, List, Tuple


logger = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0
JOULES_PER_WH = 3600.0
POWERCAP_ROOT = Path('/sys/class/powercap')


class EnergySource(str, Enum):
    RAPL = 'rapl'
    CONSTANT = 'constant'
    NONE = 'none'


@dataclass(frozen=True)
class EnergyEstimate:
    wh: float | None
    source: EnergySource

    estimated = True

    def to_dict(self) -> dict:
        return {'wh': self.wh, 'source': self.source.value, 'estimated': True}

    @classmethod
    def from_dict(cls, d: dict) -> EnergyEstimate:
        return cls(wh=d['wh'], source=EnergySource(d['source']))


def estimate_energy(intervals: Iterable[Tuple[float, float]]) -> float:
    """
    Sum of power * duration over the intervals, in watt-hours.

    :param intervals: (watts, seconds) pairs
    """

    total = 0.0
    for watts, seconds in intervals:
        if watts < 0 or seconds < 0:
            raise ValueError(f'Power and duration must not be negative, got {watts} W for {seconds} s.')
        total += watts * seconds
    return total / SECONDS_PER_HOUR


@dataclass(frozen=True)
class RaplZone:
    name: str
    energy_file: Path
    max_range_uj: int

    def read(self) -> int:
        return int(self.energy_file.read_text().strip())


def discover_rapl_zones(root: Path = POWERCAP_ROOT) -> List[RaplZone]:
    """Readable package-level zones (intel-rapl:N, not the intel-rapl:N:M subzones that they already include)."""

    zones = list()
    if not root.is_dir():
        return zones
    for directory in sorted(root.glob('intel-rapl:*')):
        if directory.name.count(':') != 1:
            continue
        energy, max_range = directory / 'energy_uj', directory / 'max_energy_range_uj'
        try:
            zone = RaplZone(directory.name, energy, int(max_range.read_text().strip()))
            zone.read()
        except (OSError, ValueError):
            continue
        zones.append(zone)
    return zones


class RaplSampler:
    """Accumulates the counters of the zones between start() and stop(), handling counter wrap-around."""

    def __init__(self, zones: List[RaplZone], interval: float = 1.0) -> None:
        self.zones = zones
        self.interval = interval
        self._previous: List[int] = list()
        self._joules_uj = 0
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.failed = False  # a counter could not be read; the measurement is void

    def _void(self, error: Exception) -> None:
        logger.warning('RAPL counter read failed, no energy reading for this query: %s', error)
        self.failed = True

    def _sample(self) -> None:
        with self._lock:
            for position, zone in enumerate(self.zones):
                current = zone.read()
                previous = self._previous[position]
                delta = current - previous if current >= previous else current + zone.max_range_uj - previous
                self._joules_uj += delta
                self._previous[position] = current

    def _run(self) -> None:
        while not self._stop.wait(self.interval):
            try:
                self._sample()
            except (OSError, ValueError) as e:
                self._void(e)
                return

    def start(self) -> None:
        self._joules_uj = 0
        self.failed = False
        self._stop.clear()
        try:
            self._previous = [zone.read() for zone in self.zones]
        except (OSError, ValueError) as e:
            self._void(e)
            return
        self._thread = threading.Thread(target=self._run, name='rapl-sampler', daemon=True)
        self._thread.start()

    def stop(self) -> float | None:
        """Stops sampling and returns the energy in watt-hours, or None if a counter could not be read."""

        self._stop.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        if self.failed:
            return None
        try:
            self._sample()
        except (OSError, ValueError) as e:
            self._void(e)
            return None
        return self._joules_uj / 1e6 / JOULES_PER_WH


class Measurement:
    def __init__(self) -> None:
        self.wh: float | None = None
        self.seconds: float = 0.0


class EnergyMeter:
    """
    Measures (or estimates) the energy of one query.

    :param source: "auto" (rapl when readable, else constant when watts is set, else none), "rapl", "constant" or
    "none"
    :param watts: the constant power draw used by the constant source
    """

    def __init__(self, source: str = 'auto', watts: float | None = None, interval: float = 1.0,
                 powercap_root: Path = POWERCAP_ROOT, clock: Callable[[], float] = time.perf_counter) -> None:
        self.watts = watts
        self.interval = interval
        self._clock = clock
        self._zones: List[RaplZone] = list()

        if source in ('auto', 'rapl'):
            self._zones = discover_rapl_zones(powercap_root)
            if not self._zones and source == 'rapl':
                logger.warning('no readable RAPL counters under %s; falling back to the constant power model',
                               powercap_root)

        if self._zones:
            self.source = EnergySource.RAPL
        elif source != 'none' and watts is not None:
            self.source = EnergySource.CONSTANT
        else:
            self.source = EnergySource.NONE

    @contextmanager
    def measure(self) -> Iterator[Measurement]:
        measurement = Measurement()
        sampler = RaplSampler(self._zones, self.interval) if self.source is EnergySource.RAPL else None
        started = self._clock()
        if sampler:
            sampler.start()
        try:
            yield measurement
        finally:
            if sampler:
                measurement.wh = sampler.stop()
            measurement.seconds = self._clock() - started

    def estimate(self, inference_time: float, measurement: Measurement | None = None) -> EnergyEstimate:
        """
        The energy of a query: the counter reading when RAPL measured it, otherwise watts * inference_time (model call
        wall times plus retrieval time).
        """

        if self.source is EnergySource.RAPL and measurement is not None and measurement.wh is not None:
            return EnergyEstimate(measurement.wh, EnergySource.RAPL)
        if self.source is EnergySource.CONSTANT or (self.source is EnergySource.RAPL and self.watts is not None):
            return EnergyEstimate(estimate_energy([(self.watts, inference_time)]), EnergySource.CONSTANT)
        return EnergyEstimate(None, EnergySource.NONE)
