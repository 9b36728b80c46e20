"""Persistent best-known d_min^2 per instance, stored as one JSON file."""
from __future__ import annotations

import json
import os
import threading
import time
from pathlib import Path
from typing import Optional

from .core import Configuration, DesignError, load_design, save_design
from .oracle import verify_design

ENV_VAR = "LHD_LEDGER"
DEFAULT_PATH = "highscores.json"
_lock = threading.Lock()


def default_path() -> Path:
    return Path(os.environ.get(ENV_VAR, DEFAULT_PATH))


class HighscoreLedger:
    """``entries`` maps ``"k/n"`` to dicts with dmin_sq, design_path, seed, params, timestamp."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else default_path()
        self.entries = {}
        if self.path.exists():
            try:
                self.entries = json.loads(self.path.read_text()).get("entries", {})
            except json.JSONDecodeError as exc:
                raise DesignError(f"ledger {self.path} is not valid JSON: {exc}") from exc

    def best(self, k: int, n: int) -> Optional[int]:
        entry = self.entries.get(f"{k}/{n}")
        return entry["dmin_sq"] if entry else None

    def design_dir(self) -> Path:
        return self.path.with_name(self.path.stem + "_designs")

    def submit(self, config: Configuration, seed=None, params: Optional[dict] = None) -> bool:
        """Record ``config`` if it beats the current entry; returns whether it did.

        The design is written first, read back and re-verified before the
        ledger itself is atomically replaced.
        """
        inst = config.instance
        key = str(inst)
        report = verify_design(config)
        if not report.ok:
            return False
        dmin = report.actual_dmin_sq
        with _lock:
            current = self.best(inst.k, inst.n)
            if current is not None and dmin <= current:
                return False
            design_path = self.design_dir() / f"{inst.k}_{inst.n}.json"
            meta = {"seed": seed, "params": params or {}}
            save_design(design_path, config, meta)
            reloaded = load_design(design_path)
            if not verify_design(reloaded, dmin).ok:
                return False
            self.entries[key] = {
                "dmin_sq": dmin,
                "design_path": str(design_path),
                "seed": seed,
                "params": params or {},
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            }
            self._write()
        return True

    def verify_all(self) -> dict:
        """Re-check every entry's design file against its recorded value."""
        out = {}
        for key, entry in self.entries.items():
            try:
                ok = verify_design(load_design(entry["design_path"]), entry["dmin_sq"]).ok
            except DesignError:
                ok = False
            out[key] = ok
        return out

    def _write(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(json.dumps({"entries": self.entries}, indent=1, sort_keys=True) + "\n")
        tmp.replace(self.path)
