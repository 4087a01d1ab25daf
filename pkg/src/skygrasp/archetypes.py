"""Benchmark object set: nine household objects used in the grasping study.

Each archetype carries the primitive-shape approximation used in the
simulator plus the hardware reference numbers (footprint, mass, measured
success rate over 16 attempts) it is compared against. The hardware
aggregate -- 85% over 144 attempts -- is printed alongside batch results
for context only; simulation batches make no claim of reproducing it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .scenario import NoiseModel, ScenarioConfig, scenario_from_dict


@dataclass(frozen=True)
class ObjectArchetype:
    name: str
    kind: str  # primitive used in simulation
    dimensions: tuple  # primitive dimensions, meters
    mass_g: float
    footprint_cm: str  # hardware W x D x H
    hardware_success_rate: float
    hardware_attempts: int
    roll_deg: float = 0.0  # lays cylinders on their side


ARCHETYPES = (
    ObjectArchetype("bottle_upright", "cylinder", (0.05, 0.29), 248.9, "10x10x29", 0.75, 16),
    ObjectArchetype("bottle_sideways", "cylinder", (0.05, 0.29), 248.9, "10x29x10", 0.81, 16, roll_deg=90.0),
    ObjectArchetype("plush_toy", "capsule", (0.05, 0.16), 68.8, "10x12x26", 0.75, 16),
    ObjectArchetype("pouch", "box", (0.08, 0.25, 0.15), 240.9, "8x25x15", 0.94, 16),
    ObjectArchetype("styrofoam", "box", (0.09, 0.15, 0.13), 88.7, "9x15x13", 0.94, 16),
    ObjectArchetype("kitchen_roll", "cylinder", (0.045, 0.27), 140.1, "9x9x27", 0.81, 16),
    ObjectArchetype("ramen_cup", "cylinder", (0.05, 0.12), 120.4, "10x10x12", 0.81, 16),
    ObjectArchetype("ball", "sphere", (0.07,), 143.8, "14x14x14", 0.88, 16),
    ObjectArchetype("cardboard_box", "box", (0.08, 0.17, 0.11), 93.0, "8x17x11", 1.00, 16),
)

HARDWARE_TOTAL = {"success_rate": 0.85, "attempts": 144}
HARDWARE_CONTEXT_LINE = (
    "hardware reference: 85% success over 144 attempts (context only, not a simulation target)"
)


def archetype_names() -> tuple:
    return tuple(a.name for a in ARCHETYPES)


def get_archetype(name: str) -> ObjectArchetype:
    for a in ARCHETYPES:
        if a.name == name:
            return a
    raise KeyError(f"unknown archetype {name!r}; known: {', '.join(archetype_names())}")


def scenario_dict(name: str, seed: int = 0, noise: str = "calibrated") -> dict:
    """Plain-dict scenario (TOML-shaped) placing one archetype in a small field.

    The field is a single-lane sweep: the target sits on the lane centerline
    1.8 m north of the start, and the drop point is off to the south-east.
    """
    a = get_archetype(name)
    if noise not in ("calibrated", "zero"):
        raise ValueError("noise must be 'calibrated' or 'zero'")
    model = NoiseModel(seed=seed) if noise == "calibrated" else NoiseModel.zero()
    obj = {
        "name": a.name,
        "kind": a.kind,
        "dimensions": list(a.dimensions),
        "position": [1.8, 0.0],
        "mass_g": a.mass_g,
        "high_friction": True,
    }
    if a.roll_deg:
        obj["roll_deg"] = a.roll_deg
    return {
        "seed": seed,
        "mission": {
            "search_area": [0.4, 2.6, -0.6, 0.6],
            "drop_point": [0.0, -1.0, -0.3],
        },
        "noise": {
            "sigma_walk": model.sigma_walk,
            "sigma_jitter": model.sigma_jitter,
            "k_v": model.k_v,
            "sigma_yaw": model.sigma_yaw,
            "seed": seed,
        },
        "objects": [obj],
        "target": 0,
    }


def make_scenario(name: str, seed: int = 0, noise: str = "calibrated") -> ScenarioConfig:
    return scenario_from_dict(scenario_dict(name, seed=seed, noise=noise))


def zero_noise(cfg: ScenarioConfig) -> ScenarioConfig:
    """Copy of a scenario with all pose noise removed."""
    return replace(cfg, noise=NoiseModel.zero())
