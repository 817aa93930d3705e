from __future__ import annotations

from datetime import datetime, timezone

import pytest

from rolegate.events import AppForeground, DeviceEvent, EsmResponse

MIN = 60_000


def local_ts(y, mo, d, h=0, mi=0, offset=0) -> int:
    """UTC milliseconds of a local wall-clock time at ``offset`` minutes east of UTC."""
    return int(datetime(y, mo, d, h, mi, tzinfo=timezone.utc).timestamp() * 1000) - offset * MIN


def app(ts, name, device="phone", pid="P01", offset=0) -> DeviceEvent:
    return DeviceEvent(ts, offset, device, pid, AppForeground(name))


def esm(ts, role="work", intr="work_only", device="phone", pid="P01", offset=0) -> EsmResponse:
    return EsmResponse(ts, device, pid, role, intr, offset)


@pytest.fixture(scope="session")
def tiny_synth():
    """Two noiseless participants over a week, generated once per session."""
    from rolegate.synthgen import GeneratorConfig, generate
    return generate(GeneratorConfig(participants=2, days=7, seed=11, answer_rate=0.6,
                                    persona_mix=("segmenter", "integrator")))


def random_stream(rng, start: int, days: float = 2.0, offset: int = 0, pid: str = "P01") -> list[DeviceEvent]:
    """Bursty phone/desktop activity: sessions of app switches with screen on/off around them."""
    from rolegate.events import KeyPress, ScreenState
    out = []
    t = start + int(rng.integers(0, 30 * MIN))
    end = start + int(days * 24 * 60 * MIN)
    while t < end:
        dev = "phone" if rng.random() < 0.7 else "desktop"
        length = int(rng.exponential(8 * MIN))
        if dev == "phone":
            out.append(DeviceEvent(t, offset, dev, pid, ScreenState(True)))
        s = t
        while s < t + length:
            out.append(DeviceEvent(s, offset, dev, pid, AppForeground(f"app{int(rng.integers(6))}")))
            if dev == "desktop" and rng.random() < 0.3:
                out.append(DeviceEvent(s, offset, dev, pid, KeyPress(int(rng.integers(50)), 0)))
            s += int(rng.integers(1_000, 90_000))
        if dev == "phone" and rng.random() < 0.8:
            out.append(DeviceEvent(s, offset, dev, pid, ScreenState(False)))
        t = s + int(rng.exponential(25 * MIN)) + 1
    out.sort(key=lambda e: e.timestamp)
    return out


# acceptance criteria outcomes, printed as one line each at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
