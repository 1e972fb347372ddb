# export_profile.py
from pathlib import Path

from phaseforge.core.io import write_profile
from phaseforge.core.loader import build_potentials, build_profile
from phaseforge.core.profile import first_integral_residual, interface_weight


def cmd_profile(cfg, outdir, jobs=1):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    pot = build_potentials(cfg)
    profile = build_profile(cfg, pot)
    interface_weight(profile, pot)

    write_profile(outdir / "profile.txt", profile)
    residual = first_integral_residual(profile, pot)
    print(f"sigma0 = {profile.sigma0:.17g}")
    print(f"first_integral_residual = {residual:.3e}")
    return profile
