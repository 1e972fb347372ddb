# run_simulation.py
from pathlib import Path

from phaseforge.core.errors import BlowUpError
from phaseforge.core.io import write_csv, write_snapshot
from phaseforge.core.loader import (
    build_boundary,
    build_grid,
    build_initial,
    build_potentials,
    time_step,
)
from phaseforge.core.pde import DIAGNOSTIC_COLUMNS, run
from phaseforge.utils.logging import log_error, log_info


def cmd_run(cfg, outdir, jobs=1):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    hat = cfg.hat_params()
    pot = build_potentials(cfg)
    grid = build_grid(cfg)
    bc = build_boundary(cfg)
    state = build_initial(cfg, grid, bc, pot, hat)
    dt = time_step(cfg, grid, hat, pot)

    t = cfg.time
    snapshot_every = t["snapshot_every"] if cfg.output["snapshots"] else 0

    def on_snapshot(k, s):
        write_snapshot(outdir / "snapshots" / f"step_{k:07d}.txt", s)

    try:
        result = run(
            state, hat, pot, bc, dt, t["t_end"],
            diag_every=t["diag_every"],
            mode=t["model"],
            snapshot_every=snapshot_every or None,
            on_snapshot=on_snapshot if snapshot_every else None,
        )
    except BlowUpError as e:
        last = e.diagnostics.get("state")
        if last is not None:
            write_snapshot(outdir / "failure_state.txt", last)
            log_error(f"Last admissible state written to {outdir / 'failure_state.txt'}")
        raise

    write_csv(outdir / "diagnostics.csv", (r.as_row() for r in result.records), DIAGNOSTIC_COLUMNS)
    write_snapshot(outdir / "final_state.txt", result.final)
    log_info(f"Run complete: {result.steps} steps, {len(result.records)} diagnostics rows")
    return result
