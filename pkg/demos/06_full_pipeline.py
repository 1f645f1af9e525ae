"""End-to-end run at reduced size: pretrain, search, evaluate, report.

Drives the same code paths as the command-line pipeline

    naqas pretrain --config cfg.json --out run/
    naqas search   --config cfg.json --checkpoint run/checkpoint.json --out run/
    naqas evaluate GENOME --config cfg.json --checkpoint run/checkpoint.json
    naqas report   run/

but through the library API, and prints the summary table for the best
architecture found.  Scale epochs/generations up (defaults: 300/30) for a
full-quality run; this demo keeps them small to finish in about a minute.
"""

import json
import tempfile
from pathlib import Path

from naqas.cli import main

config = {
    "task": "binary",
    "seed": 0,
    "noise": {"channel": "depolarizing", "p": 0.01},
    "trainer": {"epochs": 60, "fine_tune_steps": 10},
    "evo": {"pop_size": 12, "generations": 5},
}

with tempfile.TemporaryDirectory() as tmp:
    cfg_path = Path(tmp) / "config.json"
    cfg_path.write_text(json.dumps(config, indent=1))
    run_dir = Path(tmp) / "run"

    print(">>> naqas pretrain")
    assert main(["pretrain", "--config", str(cfg_path), "--out", str(run_dir)]) == 0

    print("\n>>> naqas search")
    assert main(["search", "--config", str(cfg_path), "--out", str(run_dir),
                 "--checkpoint", str(run_dir / "checkpoint.json")]) == 0

    print("\n>>> naqas report")
    assert main(["report", str(run_dir)]) == 0

    best_genome = (run_dir / "archive.csv").read_text().splitlines()[1].split('"')[1]
    print(f"\n>>> naqas evaluate {best_genome}  (noisy vs noiseless)")
    assert main(["evaluate", best_genome, "--config", str(cfg_path),
                 "--out", str(run_dir), "--checkpoint",
                 str(run_dir / "checkpoint.json")]) == 0
