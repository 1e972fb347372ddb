import argparse
import json
import sys
import tempfile

from phaseforge.core.errors import NumericalError, PhaseForgeError
from phaseforge.utils.logging import log_error, log_info, log_warn, set_verbosity

MODES = ("run", "profile", "sweep", "galerkin", "stefan-compare", "diagnose")

DEFAULTS_HELP = """
defaults (phaseforge/config/defaults.yaml):
  potentials  name=quartic w_scale=1
  grid        dim=1 extents=[1.0] cells=[128]
  boundary    q_b=0 T_b=0 gamma_faces=[left, right]
  initial     kind=pure_phase phase=1 T=null (lifting) perturbation=0 seed=0
  time        dt=null (stability default, safety=4) t_end=1 diag_every=1 model=full
  profile     half_width=20 n_points=2048 orientation=1
  sweep       eps_list=[0.08, 0.04, 0.02, 0.01] scenario=planar_1d t_end=0.2
              points_per_eps=8 T_init=-0.1 front=0.9 window=[2, 10]
  galerkin    modes=16 dt=0.001 t_end=0.5 sample_every=10 levels=3
              perturbation_scale=0.001 compare_pde=false
  stefan      eps=0.01 cells=null quadratic=true tolerance=5 (interface widths)
  output      dir=phaseforge_out snapshots=true

exit codes: 0 ok, 1 unexpected, 2 config, 3 domain, 4 numerical,
            5 boundary, 6 orientation
"""


def _command(mode):
    # Lazy imports keep `--help` fast
    if mode == "run":
        from phaseforge.cli.run_simulation import cmd_run
        return cmd_run
    if mode == "profile":
        from phaseforge.cli.export_profile import cmd_profile
        return cmd_profile
    if mode == "sweep":
        from phaseforge.cli.run_sweep import cmd_sweep
        return cmd_sweep
    if mode == "stefan-compare":
        from phaseforge.cli.run_sweep import cmd_stefan_compare
        return cmd_stefan_compare
    if mode == "galerkin":
        from phaseforge.cli.run_galerkin import cmd_galerkin
        return cmd_galerkin
    from phaseforge.cli.diagnose import cmd_diagnose
    return cmd_diagnose


def run_command(cfg, outdir, jobs=1):
    """Dispatch `cfg.mode`, then write the effective config and the manifest."""
    from phaseforge.core.io import write_manifest
    from phaseforge.core.loader import emit_config
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _command(cfg.mode)(cfg, outdir, jobs)
    (outdir / "config.yaml").write_text(emit_config(cfg))
    return write_manifest(outdir)


def _seedless_check(cfg, manifest, jobs):
    with tempfile.TemporaryDirectory(prefix="phaseforge_") as tmp:
        log_info("Re-running for the determinism check")
        again = run_command(cfg, tmp, jobs)
    differing = sorted(k for k in set(manifest) | set(again) if manifest.get(k) != again.get(k))
    if differing:
        raise NumericalError(
            "non-deterministic output: " + ", ".join(differing),
            diagnostics={"differing": differing},
        )
    log_info(f"Determinism check passed: {len(manifest)} artifacts identical")


def _execute(args):
    if args.command == "generate-config":
        from phaseforge.cli.generate_config import cmd_generate_config
        cmd_generate_config(args.mode, args.out)
        return 0

    from phaseforge.core.loader import load_config

    cfg = load_config(args.config)
    if cfg.mode != args.command:
        log_warn(f"Config mode '{cfg.mode}' overridden by subcommand '{args.command}'")
        cfg = cfg.with_mode(args.command)
    outdir = args.out or cfg.output["dir"]

    manifest = run_command(cfg, outdir, args.jobs)
    if args.seedless:
        _seedless_check(cfg, manifest, args.jobs)
    log_info(f"Output written to {outdir}")
    return 0


def _error_line(exc, code):
    return json.dumps({"error": type(exc).__name__, "exit_code": code, "message": str(exc)})


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="phaseforge",
        description="phaseforge: phase-field solidification laboratory.",
        epilog=DEFAULTS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="Only warnings and errors on stderr")

    subparsers = parser.add_subparsers(dest="command", required=True)

    # ------------------------------------------------------------
    # experiment subcommands
    # ------------------------------------------------------------
    helps = {
        "run": "Advance the phase-field system and write diagnostics and snapshots.",
        "profile": "Solve the stationary interface profile and print sigma0.",
        "sweep": "Sharp-interface defects over a decreasing list of eps.",
        "galerkin": "Spectral Galerkin run, estimate ratio and continuous dependence.",
        "stefan-compare": "Compare a phase-field front with the front-tracking reference.",
        "diagnose": "Parameter charts, energies and a-priori estimate constants.",
    }
    for mode in MODES:
        sub = subparsers.add_parser(
            mode, help=helps[mode], epilog=DEFAULTS_HELP,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        sub.add_argument("--config", required=True, help="YAML run configuration")
        sub.add_argument("--out", default=None, help="Output directory (default: output.dir)")
        sub.add_argument("--jobs", type=int, default=1, help="Parallel sweep rows")
        sub.add_argument("--seedless", action="store_true",
                         help="Run twice and require identical manifests")

    # ------------------------------------------------------------
    # generate-config
    # ------------------------------------------------------------
    gen = subparsers.add_parser(
        "generate-config",
        help="Write a starter YAML config with every default filled in."
    )
    gen.add_argument("--mode", choices=MODES, default="run")
    gen.add_argument("--out", required=True, help="Output YAML config file")

    # ------------------------------------------------------------
    # Parse args
    # ------------------------------------------------------------
    args = parser.parse_args(argv)
    if args.quiet:
        set_verbosity("WARNING")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")

    # ------------------------------------------------------------
    # Dispatch
    # ------------------------------------------------------------
    try:
        return _execute(args)
    except PhaseForgeError as e:
        log_error(str(e))
        print(_error_line(e, e.exit_code), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        log_error(f"Unexpected failure: {e}")
        print(_error_line(e, 1), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
