"""Random scenario generation, primary-user activity and the eight-node fixture.

All randomness flows from the config seed through one PCG64 generator.  The
draw order is fixed (CR positions as one block, then each PU's position and
channel selection in sequence), so equal seeds produce bit-identical
scenarios and incremental PU batches simply extend the same stream.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from .model import ChannelSet, Topology


@dataclass(frozen=True)
class ScenarioConfig:
    """Run parameters for one scenario family."""

    n_cr: int = 20
    n_pu: int = 10
    num_channels: int = 10
    pu_active_prob: float = 0.5
    area_side: float = 1.0
    cr_range: float = 1.0 / 3.0
    pu_range: float = 1.0 / 3.0
    delta: int = 3
    delta1: int = 1
    delta2: int | None = None
    t_factor: float = 1.3
    rho1: float = 0.4
    rho2: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.pu_active_prob <= 1.0:
            raise ValueError("pu_active_prob must be a probability")
        if self.cr_range <= 0 or self.pu_range <= 0:
            raise ValueError("transmission ranges must be positive")
        if self.t_factor <= 1:
            raise ValueError("t_factor must exceed 1")
        d2 = self.delta2 if self.delta2 is not None else self.n_cr
        if not self.delta1 <= self.delta <= max(d2, self.delta1):
            raise ValueError("desired size must lie inside the size window")

    def override(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


_CONFIG_FIELDS = {f.name: f for f in fields(ScenarioConfig)}


def _coerce(name: str, raw: str):
    if raw == "none":
        return None
    ann = _CONFIG_FIELDS[name].type
    if "int" in ann:
        return int(raw)
    return float(raw)


def parse_config(text: str) -> ScenarioConfig:
    """Parse a line-oriented ``key = value`` config; unknown keys are rejected."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw.strip())
    return ScenarioConfig(**values)


def config_text(config: ScenarioConfig) -> str:
    lines = []
    for f in fields(ScenarioConfig):
        v = getattr(config, f.name)
        lines.append(f"{f.name} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PrimaryUser:
    """Licensed transmitter; its activity removes channels from nearby nodes."""

    position: tuple[float, float]
    range: float
    active_channels: ChannelSet


@dataclass(frozen=True)
class ScenarioState:
    """A generated scenario plus the generator state for incremental batches."""

    config: ScenarioConfig
    topology: Topology
    pus: tuple[PrimaryUser, ...]
    rng_state: dict


def _draw_pu(rng: np.random.Generator, config: ScenarioConfig) -> PrimaryUser:
    # Draw order per PU is fixed: position, per-channel demand flags, carrier
    # choice.  A transmitter occupies one carrier at a time: each channel is
    # demanded independently with pu_active_prob and one of the demanded
    # channels is selected; no demand means the PU stays silent.
    pos = (float(rng.uniform(0.0, config.area_side)), float(rng.uniform(0.0, config.area_side)))
    flags = rng.random(config.num_channels) < config.pu_active_prob
    candidates = np.flatnonzero(flags)
    if candidates.size:
        channel = int(candidates[rng.integers(candidates.size)])
        active = ChannelSet.of([channel], config.num_channels)
    else:
        active = ChannelSet.empty(config.num_channels)
    return PrimaryUser(position=pos, range=config.pu_range, active_channels=active)


def derive_availability(
    positions: Sequence[tuple[float, float]],
    pus: Sequence[PrimaryUser],
    num_channels: int,
) -> list[ChannelSet]:
    """Per-node availability: all channels minus those of in-range active PUs."""
    full = (1 << num_channels) - 1
    out = []
    for x, y in positions:
        occupied = 0
        for pu in pus:
            dx, dy = x - pu.position[0], y - pu.position[1]
            if dx * dx + dy * dy < pu.range * pu.range:
                occupied |= pu.active_channels.mask
        out.append(ChannelSet(full & ~occupied, num_channels))
    return out


def _build_topology(
    positions: Sequence[tuple[float, float]],
    pus: Sequence[PrimaryUser],
    config: ScenarioConfig,
) -> Topology:
    channels = derive_availability(positions, pus, config.num_channels)
    return Topology.from_positions(positions, channels, config.cr_range)


def generate(config: ScenarioConfig) -> ScenarioState:
    """Generate a scenario: uniform node/PU drops, derived availability and edges."""
    if config.n_cr <= 0:
        raise ValueError("need at least one CR node")
    if config.area_side <= 0:
        raise ValueError("area side must be positive")
    rng = np.random.default_rng(config.seed)
    cr_pos = rng.uniform(0.0, config.area_side, size=(config.n_cr, 2))
    positions = [(float(x), float(y)) for x, y in cr_pos]
    pus = tuple(_draw_pu(rng, config) for _ in range(config.n_pu))
    topology = _build_topology(positions, pus, config)
    return ScenarioState(
        config=config, topology=topology, pus=pus, rng_state=rng.bit_generator.state
    )


def add_pu_batch(state: ScenarioState, batch_size: int) -> ScenarioState:
    """Add a batch of PUs drawn with the same law; availability and edges recompute."""
    if batch_size < 0:
        raise ValueError("batch size must be non-negative")
    if batch_size == 0:
        return state
    rng = np.random.default_rng()
    rng.bit_generator.state = state.rng_state
    new_pus = tuple(_draw_pu(rng, state.config) for _ in range(batch_size))
    pus = state.pus + new_pus
    assert state.topology.positions is not None
    topology = _build_topology(state.topology.positions, pus, state.config)
    return ScenarioState(
        config=state.config, topology=topology, pus=pus, rng_state=rng.bit_generator.state
    )


# -- eight-node example network ---------------------------------------------
#
# Channel indices 1..10 are used verbatim, so the fixture's channel capacity
# is 11 with index 0 unused.  The edge set is not hand-picked: it was found
# by exhaustive search over candidate graphs and is pinned by the behavioural
# constraints checked in the fixture report (head election outcome, debatable
# set, connectivity-degree facts, candidate-pool size); see
# scripts/derive_fixture_edges.py.

FIG1_LABELS = "ABCDEFGH"

FIG1_CHANNELS = {
    "A": (1, 2, 3, 4, 5, 6, 10),
    "B": (1, 2, 3, 5, 7),
    "C": (1, 3, 4, 10),
    "D": (1, 2, 3, 5),
    "E": (2, 3, 5, 7),
    "F": (2, 4, 5, 6, 7),
    "G": (1, 2, 3, 4, 8),
    "H": (1, 2, 5, 8),
}

FIG1_EDGES = (
    ("A", "C"),
    ("A", "G"),
    ("A", "H"),
    ("B", "C"),
    ("B", "D"),
    ("B", "H"),
    ("C", "D"),
    ("D", "E"),
    ("D", "F"),
    ("E", "F"),
    ("F", "G"),
    ("G", "H"),
)

FIG1_NUM_CHANNELS = 11


def fig1_id(label: str) -> int:
    return FIG1_LABELS.index(label)


def fig1_label(node: int) -> str:
    return FIG1_LABELS[node]


def fig1_fixture() -> ScenarioState:
    """The compiled-in eight-node example network (no positions, no PUs)."""
    channels = [
        ChannelSet.of(FIG1_CHANNELS[lab], FIG1_NUM_CHANNELS) for lab in FIG1_LABELS
    ]
    edges = [(fig1_id(a), fig1_id(b)) for a, b in FIG1_EDGES]
    topology = Topology.explicit(channels, edges)
    config = ScenarioConfig(
        n_cr=8,
        n_pu=0,
        num_channels=FIG1_NUM_CHANNELS,
        delta=3,
        rho1=0.2,
        rho2=0.8,
        seed=0,
    )
    rng = np.random.default_rng(config.seed)
    return ScenarioState(
        config=config, topology=topology, pus=(), rng_state=rng.bit_generator.state
    )
