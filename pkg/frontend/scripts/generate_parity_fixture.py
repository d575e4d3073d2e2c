"""Regenerate fixtures/parity_golden.json from the server-side scoring code.

Run from the repo root with the package installed:
    python3 frontend/scripts/generate_parity_fixture.py
"""

import json
from pathlib import Path

from sensoryeval import hedonic

table = {}
for color in range(1, 10):
    for shape in range(1, 10):
        for texture in range(1, 10):
            score = hedonic.HedonicScore(color, shape, texture)
            index = hedonic.weighted_acceptability(score)
            table[f"{color},{shape},{texture}"] = {
                "index": f"{index:.2f}",
                "level": hedonic.level_for(index),
            }

out = Path(__file__).parent.parent / "fixtures" / "parity_golden.json"
out.write_text(json.dumps(table, indent=1, sort_keys=True) + "\n",
               encoding="utf-8")
print(f"wrote {len(table)} entries to {out}")
