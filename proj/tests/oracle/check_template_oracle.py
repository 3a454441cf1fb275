#!/usr/bin/env python3
"""Regenerates the template oracle with the installed RDKit and compares the
outcomes with the frozen copy. Exits 77 (skip) when RDKit is unavailable."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

try:
    import rdkit  # noqa: F401
except ImportError:
    print("rdkit not installed; skipping")
    sys.exit(77)

here = Path(__file__).resolve().parent
data = here.parent / "data"
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "oracle.json"
    subprocess.run([sys.executable, str(here / "template_oracle.py"), str(data / "template_suite.json"), str(out)],
                   check=True)
    fresh = json.loads(out.read_text())["cases"]
frozen = json.loads((data / "template_oracle.json").read_text())["cases"]
if fresh != frozen:
    diff = sum(1 for a, b in zip(fresh, frozen) if a != b) + abs(len(fresh) - len(frozen))
    print(f"{diff} oracle cases changed")
    sys.exit(1)
print(f"{len(fresh)} cases unchanged")
