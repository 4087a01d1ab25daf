#!/usr/bin/env python3
"""Regenerate the checked-in scenario TOML files for the benchmark objects."""

import argparse
import os

from skygrasp.archetypes import ARCHETYPES, scenario_dict


def _toml_val(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_val(x) for x in v) + "]"
    return repr(v)


def scenario_toml(d: dict) -> str:
    lines = []
    for k, v in d.items():
        if isinstance(v, dict) or k == "objects":
            continue
        lines.append(f"{k} = {_toml_val(v)}")
    for k, v in d.items():
        if isinstance(v, dict):
            lines.append(f"\n[{k}]")
            lines.extend(f"{kk} = {_toml_val(vv)}" for kk, vv in v.items())
    for obj in d.get("objects", []):
        lines.append("\n[[objects]]")
        lines.extend(f"{kk} = {_toml_val(vv)}" for kk, vv in obj.items())
    return "\n".join(lines) + "\n"


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "scenarios"))
    p.add_argument("--noise", choices=("calibrated", "zero"), default="calibrated")
    args = p.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for a in ARCHETYPES:
        path = os.path.join(args.out, f"{a.name}.toml")
        with open(path, "w") as f:
            f.write(scenario_toml(scenario_dict(a.name, noise=args.noise)))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
