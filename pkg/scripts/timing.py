"""Wall-clock seconds for one DT-SIR fit per (n, p) design on Setting II.

    python3 scripts/timing.py
"""

import argparse
import json
from pathlib import Path

from dtsir import experiments as ex


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/timing.json")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args(argv)

    cfg = ex.load_config(args.config)
    res = ex.run_from_config("timing", cfg, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res.write_csv(out / "timing.csv")
    (out / "timing.json").write_text(json.dumps(res.to_json(spec_echo=cfg), indent=2) + "\n")
    print(res.meta["machine"])
    for a in res.aggregates:
        print(f"  {a.cell_id:<14} {a.mean:7.2f}s")


if __name__ == "__main__":
    main()
