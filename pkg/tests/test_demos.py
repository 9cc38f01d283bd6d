"""The demo scripts must stay runnable end to end."""
from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

DEMO_DIR = Path(__file__).resolve().parent.parent / "demos"


@pytest.mark.parametrize("script", sorted(p.name for p in DEMO_DIR.glob("*.py")))
def test_demo_runs_clean(script):
    proc = subprocess.run([sys.executable, str(DEMO_DIR / script)],
                          capture_output=True, text=True, timeout=180)
    assert proc.returncode == 0, proc.stderr[-2000:]
    assert proc.stdout.strip(), "demo produced no output"
